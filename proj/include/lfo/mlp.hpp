#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "lfo/errors.hpp"

namespace lfo {

enum class Act { Identity, Relu, Tanh };

// Dense feed-forward network, written out by hand so every gradient used in
// training is visible and testable against finite differences.
class Mlp {
 public:
  Mlp() = default;
  // sizes = {in, h1, ..., out}; `hidden` applies to all layers but the last
  Mlp(std::vector<int> sizes, Act hidden, Act output);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int layer_count() const { return static_cast<int>(w_.size()); }
  const std::vector<int>& sizes() const { return sizes_; }
  Act hidden_act() const { return hidden_; }
  Act output_act() const { return output_; }

  std::vector<Eigen::MatrixXd>& weights() { return w_; }
  std::vector<Eigen::VectorXd>& biases() { return b_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return w_; }
  const std::vector<Eigen::VectorXd>& biases() const { return b_; }

  // uniform in ±1/sqrt(fan_in) per layer
  void init_uniform(std::mt19937_64& rng);
  // overrides the last layer with uniform ±bound
  void init_last_layer(double bound, std::mt19937_64& rng);

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;  // columns = samples

  // Post-activation values of every layer, kept for the backward pass.
  // acts[0] is the input batch, acts[L] the network output.
  struct Tape {
    std::vector<Eigen::MatrixXd> acts;
  };
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape& tape) const;

  struct Grad {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    void set_zero();
    double squared_norm() const;
  };
  Grad make_grad() const;  // zero-initialized, matching shapes

  // Reverse pass for the scalar contraction sum(upstream .* output):
  // accumulates parameter gradients into g and returns the input gradient.
  Eigen::MatrixXd backward(const Tape& tape, const Eigen::MatrixXd& upstream,
                           Grad& g) const;

  std::size_t parameter_count() const;

 private:
  std::vector<int> sizes_;
  Act hidden_ = Act::Relu;
  Act output_ = Act::Identity;
  std::vector<Eigen::MatrixXd> w_;
  std::vector<Eigen::VectorXd> b_;
};

// Adaptive-moment gradient descent with bias correction.
class Adam {
 public:
  Adam() = default;
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

  void attach(const Mlp& net);  // shape and zero the moment buffers
  void step(Mlp& net, const Mlp::Grad& g);
  long steps_taken() const { return t_; }
  double learning_rate() const { return lr_; }

  // serialized with agent checkpoints
  long t_ = 0;
  std::vector<Eigen::MatrixXd> mw_, vw_;
  std::vector<Eigen::VectorXd> mb_, vb_;

 private:
  double lr_ = 1e-3, b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
};

// target <- tau * online + (1 - tau) * target
void soft_update(const Mlp& online, Mlp& target, double tau);

}  // namespace lfo
