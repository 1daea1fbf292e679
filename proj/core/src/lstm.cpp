#include "gaitad/lstm.hpp"

#include <Eigen/Dense>

#include "gaitad/error.hpp"

namespace gaitad {

namespace {

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& z) { return 1.0 / (1.0 + (-z).exp()); }

}  // namespace

LstmLayerParams LstmLayerParams::zeros(Eigen::Index input_size, Eigen::Index hidden_size) {
  LstmLayerParams p;
  p.w_input = Eigen::MatrixXd::Zero(4 * hidden_size, input_size);
  p.w_recurrent = Eigen::MatrixXd::Zero(4 * hidden_size, hidden_size);
  p.bias = Eigen::VectorXd::Zero(4 * hidden_size);
  p.peep_input = Eigen::VectorXd::Zero(hidden_size);
  p.peep_forget = Eigen::VectorXd::Zero(hidden_size);
  p.peep_output = Eigen::VectorXd::Zero(hidden_size);
  return p;
}

std::vector<ParamRef> LstmLayerParams::tensors(const std::string& prefix) {
  auto view = [](auto& m) { return Eigen::Map<Eigen::VectorXd>(m.data(), m.size()); };
  std::vector<ParamRef> out;
  out.push_back({prefix + "w_input", view(w_input)});
  out.push_back({prefix + "w_recurrent", view(w_recurrent)});
  out.push_back({prefix + "bias", view(bias)});
  out.push_back({prefix + "peep_input", view(peep_input)});
  out.push_back({prefix + "peep_forget", view(peep_forget)});
  out.push_back({prefix + "peep_output", view(peep_output)});
  return out;
}

LstmStep lstm_cell_step(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                        const Eigen::VectorXd& c_prev, const LstmLayerParams& p) {
  const Eigen::Index h = p.hidden_size();
  if (x.size() != p.input_size() || h_prev.size() != h || c_prev.size() != h) {
    fail(ErrorCode::kShapeError, "lstm_cell_step: inconsistent shapes");
  }
  const Eigen::VectorXd z = p.w_input * x + p.w_recurrent * h_prev + p.bias;
  const Eigen::ArrayXd i = sigmoid(z.segment(0, h).array() + p.peep_input.array() * c_prev.array());
  const Eigen::ArrayXd f =
      sigmoid(z.segment(h, h).array() + p.peep_forget.array() * c_prev.array());
  const Eigen::ArrayXd g = z.segment(2 * h, h).array().tanh();
  LstmStep out;
  out.c = (f * c_prev.array() + i * g).matrix();
  const Eigen::ArrayXd o =
      sigmoid(z.segment(3 * h, h).array() + p.peep_output.array() * out.c.array());
  out.h = (o * out.c.array().tanh()).matrix();
  if (!out.h.allFinite() || !out.c.allFinite()) {
    fail(ErrorCode::kNumericalDivergence, "lstm_cell_step produced non-finite values");
  }
  return out;
}

Eigen::MatrixXd reverse_steps(const Eigen::MatrixXd& m, Eigen::Index batch) {
  const Eigen::Index steps = m.cols() / batch;
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index t = 0; t < steps; ++t) {
    out.middleCols((steps - 1 - t) * batch, batch) = m.middleCols(t * batch, batch);
  }
  return out;
}

LstmSequence lstm_forward(const LstmLayerParams& p, Eigen::MatrixXd inputs, Eigen::Index batch) {
  const Eigen::Index hs = p.hidden_size();
  if (inputs.rows() != p.input_size() || batch <= 0 || inputs.cols() % batch != 0) {
    fail(ErrorCode::kShapeError, "lstm_forward: inconsistent input shape");
  }
  LstmSequence s;
  s.batch = batch;
  s.steps = inputs.cols() / batch;
  const Eigen::Index cols = inputs.cols();
  s.gate_i.resize(hs, cols);
  s.gate_f.resize(hs, cols);
  s.gate_g.resize(hs, cols);
  s.gate_o.resize(hs, cols);
  s.cell.resize(hs, cols);
  s.hidden.resize(hs, cols);

  // Input contributions for every step in one product.
  Eigen::MatrixXd pre = p.w_input * inputs;
  pre.colwise() += p.bias;
  s.inputs = std::move(inputs);

  Eigen::MatrixXd h_prev = Eigen::MatrixXd::Zero(hs, batch);
  Eigen::MatrixXd c_prev = Eigen::MatrixXd::Zero(hs, batch);
  Eigen::MatrixXd z(4 * hs, batch);
  for (Eigen::Index t = 0; t < s.steps; ++t) {
    const Eigen::Index col = t * batch;
    z.noalias() = pre.middleCols(col, batch);
    z.noalias() += p.w_recurrent * h_prev;
    auto gi = s.gate_i.middleCols(col, batch);
    auto gf = s.gate_f.middleCols(col, batch);
    auto gg = s.gate_g.middleCols(col, batch);
    auto go = s.gate_o.middleCols(col, batch);
    auto c = s.cell.middleCols(col, batch);
    auto h = s.hidden.middleCols(col, batch);
    gi = sigmoid(z.topRows(hs).array() + c_prev.array().colwise() * p.peep_input.array()).matrix();
    gf = sigmoid(z.middleRows(hs, hs).array() + c_prev.array().colwise() * p.peep_forget.array())
             .matrix();
    gg = z.middleRows(2 * hs, hs).array().tanh().matrix();
    c = (gf.array() * c_prev.array() + gi.array() * gg.array()).matrix();
    go = sigmoid(z.bottomRows(hs).array() + c.array().colwise() * p.peep_output.array()).matrix();
    h = (go.array() * c.array().tanh()).matrix();
    h_prev = h;
    c_prev = c;
  }
  if (!s.hidden.allFinite() || !s.cell.allFinite()) {
    fail(ErrorCode::kNumericalDivergence, "lstm_forward produced non-finite activations");
  }
  return s;
}

Eigen::MatrixXd lstm_backward(const LstmLayerParams& p, const LstmSequence& s,
                              const Eigen::MatrixXd& d_hidden, LstmLayerParams& grads) {
  const Eigen::Index hs = p.hidden_size();
  const Eigen::Index batch = s.batch;
  const Eigen::Index cols = s.steps * batch;
  if (d_hidden.rows() != hs || d_hidden.cols() != cols) {
    fail(ErrorCode::kShapeError, "lstm_backward: gradient shape mismatch");
  }

  Eigen::MatrixXd dz(4 * hs, cols);
  Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(hs, batch);
  Eigen::ArrayXXd dc_next = Eigen::ArrayXXd::Zero(hs, batch);
  const Eigen::ArrayXXd zero_state = Eigen::ArrayXXd::Zero(hs, batch);

  for (Eigen::Index t = s.steps - 1; t >= 0; --t) {
    const Eigen::Index col = t * batch;
    const Eigen::ArrayXXd i = s.gate_i.middleCols(col, batch).array();
    const Eigen::ArrayXXd f = s.gate_f.middleCols(col, batch).array();
    const Eigen::ArrayXXd g = s.gate_g.middleCols(col, batch).array();
    const Eigen::ArrayXXd o = s.gate_o.middleCols(col, batch).array();
    const Eigen::ArrayXXd c = s.cell.middleCols(col, batch).array();
    const Eigen::ArrayXXd c_prev =
        t > 0 ? Eigen::ArrayXXd(s.cell.middleCols(col - batch, batch).array()) : zero_state;

    const Eigen::ArrayXXd dh = d_hidden.middleCols(col, batch).array() + dh_next.array();
    const Eigen::ArrayXXd tanh_c = c.tanh();
    const Eigen::ArrayXXd dzo = dh * tanh_c * o * (1.0 - o);
    const Eigen::ArrayXXd dc = dc_next + dh * o * (1.0 - tanh_c.square()) +
                               dzo.colwise() * p.peep_output.array();
    const Eigen::ArrayXXd dzi = dc * g * i * (1.0 - i);
    const Eigen::ArrayXXd dzf = dc * c_prev * f * (1.0 - f);
    const Eigen::ArrayXXd dzg = dc * i * (1.0 - g.square());

    auto block = dz.middleCols(col, batch);
    block.topRows(hs) = dzi.matrix();
    block.middleRows(hs, hs) = dzf.matrix();
    block.middleRows(2 * hs, hs) = dzg.matrix();
    block.bottomRows(hs) = dzo.matrix();

    grads.peep_input += (dzi * c_prev).rowwise().sum().matrix();
    grads.peep_forget += (dzf * c_prev).rowwise().sum().matrix();
    grads.peep_output += (dzo * c).rowwise().sum().matrix();

    dc_next = dc * f + dzi.colwise() * p.peep_input.array() + dzf.colwise() * p.peep_forget.array();
    dh_next.noalias() = p.w_recurrent.transpose() * block;
  }

  grads.w_input.noalias() += dz * s.inputs.transpose();
  if (s.steps > 1) {
    grads.w_recurrent.noalias() +=
        dz.rightCols(cols - batch) * s.hidden.leftCols(cols - batch).transpose();
  }
  grads.bias += dz.rowwise().sum();
  return p.w_input.transpose() * dz;
}

}  // namespace gaitad
