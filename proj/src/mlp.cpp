#include "lfo/mlp.hpp"

#include <cmath>

namespace lfo {

namespace {

void apply_act(Eigen::MatrixXd& z, Act act) {
  switch (act) {
    case Act::Identity:
      break;
    case Act::Relu:
      z = z.cwiseMax(0.0);
      break;
    case Act::Tanh:
      z = z.array().tanh().matrix();
      break;
  }
}

// derivative expressed through the post-activation value
Eigen::MatrixXd act_deriv(const Eigen::MatrixXd& y, Act act) {
  switch (act) {
    case Act::Identity:
      return Eigen::MatrixXd::Ones(y.rows(), y.cols());
    case Act::Relu:
      return (y.array() > 0.0).cast<double>().matrix();
    case Act::Tanh:
      return (1.0 - y.array().square()).matrix();
  }
  return {};
}

}  // namespace

Mlp::Mlp(std::vector<int> sizes, Act hidden, Act output)
    : sizes_(std::move(sizes)), hidden_(hidden), output_(output) {
  if (sizes_.size() < 2) throw ConfigError("network needs at least one layer");
  for (int s : sizes_)
    if (s <= 0) throw ConfigError("network layer sizes must be positive");
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    w_.emplace_back(Eigen::MatrixXd::Zero(sizes_[l + 1], sizes_[l]));
    b_.emplace_back(Eigen::VectorXd::Zero(sizes_[l + 1]));
  }
}

void Mlp::init_uniform(std::mt19937_64& rng) {
  for (size_t l = 0; l < w_.size(); ++l) {
    double bound = 1.0 / std::sqrt(static_cast<double>(w_[l].cols()));
    std::uniform_real_distribution<double> un(-bound, bound);
    for (int j = 0; j < w_[l].cols(); ++j)
      for (int i = 0; i < w_[l].rows(); ++i) w_[l](i, j) = un(rng);
    for (int i = 0; i < b_[l].size(); ++i) b_[l][i] = un(rng);
  }
}

void Mlp::init_last_layer(double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> un(-bound, bound);
  Eigen::MatrixXd& w = w_.back();
  Eigen::VectorXd& b = b_.back();
  for (int j = 0; j < w.cols(); ++j)
    for (int i = 0; i < w.rows(); ++i) w(i, j) = un(rng);
  for (int i = 0; i < b.size(); ++i) b[i] = un(rng);
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  return forward(Eigen::MatrixXd(x)).col(0);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Tape tape;
  return forward(x, tape);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Tape& tape) const {
  if (x.rows() != input_dim())
    throw ConfigError("network input has wrong dimension");
  tape.acts.clear();
  tape.acts.reserve(w_.size() + 1);
  tape.acts.push_back(x);
  for (size_t l = 0; l < w_.size(); ++l) {
    Eigen::MatrixXd z = (w_[l] * tape.acts.back()).colwise() + b_[l];
    apply_act(z, l + 1 == w_.size() ? output_ : hidden_);
    tape.acts.push_back(std::move(z));
  }
  return tape.acts.back();
}

void Mlp::Grad::set_zero() {
  for (Eigen::MatrixXd& m : w) m.setZero();
  for (Eigen::VectorXd& v : b) v.setZero();
}

double Mlp::Grad::squared_norm() const {
  double s = 0;
  for (const Eigen::MatrixXd& m : w) s += m.squaredNorm();
  for (const Eigen::VectorXd& v : b) s += v.squaredNorm();
  return s;
}

Mlp::Grad Mlp::make_grad() const {
  Grad g;
  for (size_t l = 0; l < w_.size(); ++l) {
    g.w.emplace_back(Eigen::MatrixXd::Zero(w_[l].rows(), w_[l].cols()));
    g.b.emplace_back(Eigen::VectorXd::Zero(b_[l].size()));
  }
  return g;
}

Eigen::MatrixXd Mlp::backward(const Tape& tape, const Eigen::MatrixXd& upstream,
                              Grad& g) const {
  if (tape.acts.size() != w_.size() + 1)
    throw ConfigError("tape does not match this network");
  if (upstream.rows() != output_dim() ||
      upstream.cols() != tape.acts.back().cols())
    throw ConfigError("upstream gradient has wrong shape");
  if (g.w.size() != w_.size())
    throw ConfigError("gradient buffer does not match this network");

  Eigen::MatrixXd delta = upstream;
  for (int l = static_cast<int>(w_.size()) - 1; l >= 0; --l) {
    Act act = static_cast<size_t>(l) + 1 == w_.size() ? output_ : hidden_;
    delta = delta.cwiseProduct(act_deriv(tape.acts[l + 1], act));
    g.w[l] += delta * tape.acts[l].transpose();
    g.b[l] += delta.rowwise().sum();
    if (l > 0) delta = (w_[l].transpose() * delta).eval();
  }
  return w_[0].transpose() * delta;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (size_t l = 0; l < w_.size(); ++l)
    n += static_cast<std::size_t>(w_[l].size()) + b_[l].size();
  return n;
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
  if (lr <= 0) throw ConfigError("learning rate must be positive");
}

void Adam::attach(const Mlp& net) {
  t_ = 0;
  mw_.clear();
  vw_.clear();
  mb_.clear();
  vb_.clear();
  for (size_t l = 0; l < net.weights().size(); ++l) {
    const Eigen::MatrixXd& w = net.weights()[l];
    mw_.emplace_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    vw_.emplace_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    mb_.emplace_back(Eigen::VectorXd::Zero(net.biases()[l].size()));
    vb_.emplace_back(Eigen::VectorXd::Zero(net.biases()[l].size()));
  }
}

void Adam::step(Mlp& net, const Mlp::Grad& g) {
  if (mw_.size() != net.weights().size())
    throw ConfigError("optimizer is not attached to this network");
  ++t_;
  double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (size_t l = 0; l < mw_.size(); ++l) {
    mw_[l] = b1_ * mw_[l] + (1.0 - b1_) * g.w[l];
    vw_[l] = b2_ * vw_[l] + (1.0 - b2_) * g.w[l].cwiseProduct(g.w[l]);
    net.weights()[l] -=
        (lr_ / c1) * mw_[l].cwiseQuotient(
                         ((vw_[l] / c2).cwiseSqrt().array() + eps_).matrix());
    mb_[l] = b1_ * mb_[l] + (1.0 - b1_) * g.b[l];
    vb_[l] = b2_ * vb_[l] + (1.0 - b2_) * g.b[l].cwiseProduct(g.b[l]);
    net.biases()[l] -=
        (lr_ / c1) * mb_[l].cwiseQuotient(
                         ((vb_[l] / c2).cwiseSqrt().array() + eps_).matrix());
  }
}

void soft_update(const Mlp& online, Mlp& target, double tau) {
  if (tau <= 0.0 || tau > 1.0)
    throw ConfigError("blend factor must lie in (0, 1]");
  for (size_t l = 0; l < target.weights().size(); ++l) {
    target.weights()[l] =
        tau * online.weights()[l] + (1.0 - tau) * target.weights()[l];
    target.biases()[l] =
        tau * online.biases()[l] + (1.0 - tau) * target.biases()[l];
  }
}

}  // namespace lfo
