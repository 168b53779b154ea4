#pragma once

#include <cstdint>
#include <optional>

#include "lfo/baselines.hpp"
#include "lfo/delay_channel.hpp"
#include "lfo/dynamics.hpp"

namespace lfo {

struct RewardWeights {
  double alpha = 10.0;  // speed deviation from 1 pu
  double beta = 50.0;   // speed change between control instants
  double eta = 1.0;     // out-of-bound action distance
  double zeta = 1.0;    // monitored bus-pair angle excursion
  double u = 0.2;       // action upper bound, pu
  double v = -0.2;      // action lower bound, pu
  double sync_penalty = 1000.0;
  // Reproduce the printed piecewise regions (a<u / a>v first-match, raw
  // pair angles) instead of the corrected semantics; see reward_value.
  bool paper_literal = false;
};

struct PvScenario {
  double share = 0.0;             // fraction of total load carried by pv
  double fluctuation_std = 0.02;  // per-step relative output noise
};

struct EpisodeConfig {
  std::string case_path;
  double dt_sim = 0.01;
  double dt_control = 0.05;
  double horizon = 20.0;

  // Three-phase fault as a shunt admittance; fault_bus < 0 disables it.
  double fault_time = 1.0;
  double fault_duration = 0.1;
  int fault_bus = 8;
  double fault_admittance = 1e4;

  GaussianMixtureDelay channel;
  std::vector<std::pair<int, int>> monitored_bus_pairs;  // bus ids
  std::vector<int> controlled_generators;                // indices
  std::vector<int> pss_generators;                       // indices
  PssParams pss;
  PvScenario pv;
  RewardWeights weights;
  double sync_threshold = 3.14159265358979323846;  // rad, max pairwise rotor split
  std::size_t buffer_capacity = 64;
  std::uint64_t seed = 0;
};

struct Observation {
  Eigen::VectorXd speed_dev;  // |Δω| between consecutive delivered samples, pu
  Eigen::VectorXd bus_angle;  // delivered monitored-bus voltage angles, rad
  bool valid = false;         // false until the first packet lands

  Eigen::VectorXd flat() const;  // [speed_dev; bus_angle]
};

struct StepInfo {
  bool sync_lost = false;
  double t = 0.0;
  double pv_scale = 1.0;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

// max pairwise |δ_i − δ_j| ≤ threshold
bool synchronism_ok(const DynamicState& s, double threshold);

// R = Σ_k γ^k r_k
double discounted_return(const std::vector<double>& rewards, double gamma);

// Per-step reward from raw ingredients. pair_diffs carries the signed
// monitored θ_i − θ_j and pair_offsets their pre-disturbance values; the
// default semantics penalize the excursion |diff − offset| so the
// undisturbed operating point scores exactly 0, and penalize actions only
// outside [v, u]. With weights.paper_literal the printed form is used
// instead: raw |diff| and the first-match regions (a < u → η|−a−u|,
// else a > v → η|a−v|).
double reward_value(const Eigen::VectorXd& omega,
                    const Eigen::VectorXd& omega_prev,
                    const std::vector<double>& pair_diffs,
                    const std::vector<double>& pair_offsets,
                    const Eigen::VectorXd& action, const RewardWeights& w);

// The MDP wrapper around the simulator: zero-order-hold actions at
// dt_control, RK4 substeps at dt_sim, measurements emitted through the
// delay channel every control instant, reward computed on the undelayed
// state, episodes ending at the horizon or on loss of synchronism.
class Environment {
 public:
  explicit Environment(EpisodeConfig cfg);

  Observation reset();  // uses cfg.seed
  Observation reset(std::uint64_t seed);

  // Actions are clamped to [v, u] before they touch the exciters (hardware
  // limit); the reward's η term sees the unclamped request. While no
  // measurement has arrived the request is replaced by zero: a controller
  // without data does nothing.
  StepResult step(const Eigen::VectorXd& action);

  int obs_dim() const;
  int action_dim() const;
  int generator_count() const;

  const EpisodeConfig& config() const { return cfg_; }
  const GridCase& base_case() const { return base_; }
  const DynamicState& state() const { return s_; }  // undelayed truth
  double time() const { return s_.t; }
  bool episode_done() const { return done_; }

  const MeasurementPayload& delivered() const { return cur_; }
  bool has_delivery() const { return has_delivery_; }

  // truth at the current instant, same quantities a measurement carries
  MeasurementPayload measure() const;
  const std::vector<double>& pv_output_mw() const { return pv_mw_; }
  const std::vector<double>& equilibrium_pair_offsets() const {
    return pair_offsets_;
  }

 private:
  void poll(double now);
  Observation assemble() const;
  bool fault_enabled() const {
    return cfg_.fault_bus >= 0 && cfg_.fault_time >= 0;
  }

  EpisodeConfig cfg_;
  GridCase base_;
  std::vector<int> monitored_rows_;  // unique buses, pair order
  std::vector<std::pair<int, int>> pair_index_;  // into monitored_rows_

  // episode state
  GridCase episode_case_;
  MachineSystemParams mp_;
  std::optional<NetworkContext> ctx_;
  DynamicState s_;
  std::vector<double> pv_mw_;
  std::vector<double> pair_offsets_;
  MeasurementBuffer buffer_;
  MeasurementPayload prev_, cur_;
  bool has_delivery_ = false;
  Eigen::VectorXd prev_true_omega_;
  std::vector<WashoutPss> pss_;
  std::mt19937_64 rng_delay_, rng_pv_;
  double pv_fluct_ = 0.0;
  double pv_scale_ = 1.0;
  bool fault_on_ = false, fault_cleared_ = false;
  bool sync_lost_ = false, done_ = true;
};

}  // namespace lfo
