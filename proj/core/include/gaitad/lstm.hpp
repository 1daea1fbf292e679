#pragma once

// Peephole LSTM layer: single-step cell, and batched full-sequence forward
// and backward passes used by the encoder.

#include <Eigen/Core>

#include <string>
#include <vector>

namespace gaitad {

/// Named view of one parameter buffer.
struct ParamRef {
  std::string name;
  Eigen::Map<Eigen::VectorXd> values;
};

/// Gate rows are stacked in the order input, forget, candidate, output.
struct LstmLayerParams {
  Eigen::MatrixXd w_input;      // 4H x in
  Eigen::MatrixXd w_recurrent;  // 4H x H
  Eigen::VectorXd bias;         // 4H
  Eigen::VectorXd peep_input;   // H
  Eigen::VectorXd peep_forget;  // H
  Eigen::VectorXd peep_output;  // H

  static LstmLayerParams zeros(Eigen::Index input_size, Eigen::Index hidden_size);

  Eigen::Index hidden_size() const { return w_recurrent.cols(); }
  Eigen::Index input_size() const { return w_input.cols(); }

  std::vector<ParamRef> tensors(const std::string& prefix);
};

struct LstmStep {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

/// i = sig(Wi x + Ui h + pi.c_prev + bi), f likewise with pf,
/// g = tanh(Wg x + Ug h + bg), c = f.c_prev + i.g,
/// o = sig(Wo x + Uo h + po.c + bo), h = o.tanh(c).
LstmStep lstm_cell_step(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                        const Eigen::VectorXd& c_prev, const LstmLayerParams& params);

/// Activations of one layer over a batch of equal-length sequences. Column
/// t * batch + b holds step t of sequence b.
struct LstmSequence {
  Eigen::Index steps = 0;
  Eigen::Index batch = 0;
  Eigen::MatrixXd inputs;  // in x (T * B)
  Eigen::MatrixXd gate_i, gate_f, gate_g, gate_o;
  Eigen::MatrixXd cell;    // H x (T * B)
  Eigen::MatrixXd hidden;  // H x (T * B)

  auto step_block(const Eigen::MatrixXd& m, Eigen::Index t) const {
    return m.middleCols(t * batch, batch);
  }
};

/// Runs the layer from a zero state. Throws NumericalDivergence on non-finite output.
LstmSequence lstm_forward(const LstmLayerParams& params, Eigen::MatrixXd inputs, Eigen::Index batch);

/// Full (untruncated) BPTT. d_hidden is the loss gradient w.r.t. every
/// hidden output. Gradients are accumulated into grads; returns d inputs.
Eigen::MatrixXd lstm_backward(const LstmLayerParams& params, const LstmSequence& seq,
                              const Eigen::MatrixXd& d_hidden, LstmLayerParams& grads);

/// Reverses the order of the T column blocks of width batch.
Eigen::MatrixXd reverse_steps(const Eigen::MatrixXd& m, Eigen::Index batch);

}  // namespace gaitad
