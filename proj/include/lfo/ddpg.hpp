#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lfo/mlp.hpp"

namespace lfo {

enum class TargetMode { Soft, HardPeriodic };
enum class NoiseKind { Ou, Gaussian };

struct AgentConfig {
  int obs_dim = 0;
  int action_dim = 0;
  std::vector<int> hidden{64, 64};

  double gamma = 0.95;
  std::size_t buffer_capacity = 200000;
  int batch_size = 32;
  int warmup = 1000;  // stored transitions before updates begin

  double lr_actor = 1e-4;
  double lr_critic = 1e-3;

  TargetMode target_mode = TargetMode::Soft;
  int target_period = 1;  // hard mode: copy every N update rounds
  double tau = 0.005;     // soft mode blend per round

  NoiseKind noise = NoiseKind::Ou;
  double ou_theta = 0.15;
  double sigma_start = 0.1;
  double sigma_end = 0.01;
  int decay_episodes = 300;  // linear sigma schedule length

  double action_low = -0.2;
  double action_high = 0.2;

  double reward_scale = 1.0;   // applied when storing experience
  Eigen::VectorXd obs_scale;   // per-component input scaling; empty = none
  std::uint64_t seed = 0;

  void validate() const;
};

struct Experience {
  Eigen::VectorXd s, a;
  double r = 0.0;
  Eigen::VectorXd s_next;
  bool done = false;
};

// Fixed-capacity ring; overwrites the oldest entry when full.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(Experience e);
  std::size_t size() const { return store_.size(); }
  std::size_t capacity() const { return cap_; }
  const Experience& at(std::size_t i) const { return store_[i]; }
  // m uniform draws with replacement
  std::vector<std::size_t> sample(int m, std::mt19937_64& rng) const;

 private:
  std::size_t cap_;
  std::size_t next_ = 0;
  std::vector<Experience> store_;
};

// tanh head output in (-1, 1) mapped onto [lo, hi]
Eigen::MatrixXd squash_actions(const Eigen::MatrixXd& y, double lo, double hi);

// Mean squared error between the critic's values on `sa` (columns are
// state-action pairs) and `targets`; parameter gradients of that loss are
// accumulated into g.
double critic_loss_grad(const Mlp& critic, const Eigen::MatrixXd& sa,
                        const Eigen::VectorXd& targets, Mlp::Grad& g);

// Batch-mean critic value of the actor's own (squashed) actions on `states`,
// with the actor-parameter gradients of that objective accumulated into g.
// The critic is treated as a frozen function of its inputs.
double actor_objective_grad(const Mlp& actor, const Mlp& critic,
                            const Eigen::MatrixXd& states, double lo, double hi,
                            Mlp::Grad& g);

// One optimizer ascent step on sum_i dq_da_i . a_i / M for externally
// supplied action gradients (columns of dq_da); returns the gradient norm.
double actor_ascent_step(Mlp& actor, Adam& opt, const Eigen::MatrixXd& states,
                         const Eigen::MatrixXd& dq_da, double lo, double hi);

// Deterministic-policy learner over the delayed-observation environment:
// separate actor and critic with target copies, experience replay, and
// decaying action-space exploration noise.
class DdpgAgent {
 public:
  explicit DdpgAgent(AgentConfig cfg);

  const AgentConfig& config() const { return cfg_; }

  // explore=false is the greedy policy and consumes no randomness
  Eigen::VectorXd select_action(const Eigen::VectorXd& obs, int episode,
                                bool explore);
  void noise_reset();
  double sigma_for_episode(int episode) const;

  // raw reward and observations; scaling is applied here
  void push_experience(const Eigen::VectorXd& obs,
                       const Eigen::VectorXd& action, double reward,
                       const Eigen::VectorXd& next_obs, bool done);
  std::size_t replay_size() const { return replay_.size(); }
  bool ready() const;

  double critic_update();  // one minibatch step; returns the loss
  double actor_update();   // one ascent step; returns the gradient norm
  void update_targets();   // soft blend or periodic hard copy

  double initial_q(const Eigen::VectorXd& obs) const;  // Q(s, mu(s))

  Mlp& actor() { return actor_; }
  Mlp& critic() { return critic_; }
  Mlp& actor_target() { return actor_t_; }
  Mlp& critic_target() { return critic_t_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  const Mlp& actor_target() const { return actor_t_; }
  const Mlp& critic_target() const { return critic_t_; }
  const ReplayBuffer& replay() const { return replay_; }

  // Versioned binary checkpoint: parameters, optimizer moments, and config.
  // Replay contents and rng positions are not stored; a loaded agent samples
  // and explores from a fresh stream. Byte layout: docs/checkpoint_format.md.
  void save(const std::string& path) const;
  static DdpgAgent load(const std::string& path, int expect_obs = -1,
                        int expect_act = -1);

 private:
  Eigen::VectorXd scaled(const Eigen::VectorXd& obs) const;
  void gather(const std::vector<std::size_t>& idx, Eigen::MatrixXd& s,
              Eigen::MatrixXd& a, Eigen::VectorXd& r, Eigen::MatrixXd& s2,
              Eigen::VectorXd& done) const;

  AgentConfig cfg_;
  Mlp actor_, critic_, actor_t_, critic_t_;
  Adam opt_actor_, opt_critic_;
  ReplayBuffer replay_;
  std::mt19937_64 rng_noise_, rng_sample_;
  Eigen::VectorXd noise_;
  long round_ = 0;  // update_targets invocations, drives hard periodic mode
};

}  // namespace lfo
