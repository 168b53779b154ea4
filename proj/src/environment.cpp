#include "lfo/environment.hpp"

#include <algorithm>
#include <cmath>

#include "lfo/util.hpp"

namespace lfo {

Eigen::VectorXd Observation::flat() const {
  Eigen::VectorXd x(speed_dev.size() + bus_angle.size());
  x << speed_dev, bus_angle;
  return x;
}

bool synchronism_ok(const DynamicState& s, double threshold) {
  const int ng = static_cast<int>(s.delta.size());
  for (int i = 0; i < ng; ++i)
    for (int j = i + 1; j < ng; ++j)
      if (std::abs(s.delta[i] - s.delta[j]) > threshold) return false;
  return true;
}

double discounted_return(const std::vector<double>& rewards, double gamma) {
  if (gamma < 0.0 || gamma > 1.0)
    throw ConfigError("discount factor must lie in [0, 1]");
  double acc = 0.0, g = 1.0;
  for (double r : rewards) {
    acc += g * r;
    g *= gamma;
  }
  return acc;
}

double reward_value(const Eigen::VectorXd& omega,
                    const Eigen::VectorXd& omega_prev,
                    const std::vector<double>& pair_diffs,
                    const std::vector<double>& pair_offsets,
                    const Eigen::VectorXd& action, const RewardWeights& w) {
  if (omega.size() != omega_prev.size())
    throw ConfigError("speed vectors must have equal length");
  if (pair_diffs.size() != pair_offsets.size())
    throw ConfigError("pair angle vectors must have equal length");

  double r = 0.0;
  for (int g = 0; g < omega.size(); ++g) {
    r -= w.alpha * std::abs(1.0 - omega[g]);
    r -= w.beta * std::abs(omega[g] - omega_prev[g]);
  }
  for (size_t p = 0; p < pair_diffs.size(); ++p) {
    double term = w.paper_literal ? pair_diffs[p]
                                  : pair_diffs[p] - pair_offsets[p];
    r -= w.zeta * std::abs(term);
  }
  for (int k = 0; k < action.size(); ++k) {
    double a = action[k];
    if (w.paper_literal) {
      // regions exactly as printed, first match wins
      if (a < w.u)
        r -= w.eta * std::abs(-a - w.u);
      else if (a > w.v)
        r -= w.eta * std::abs(a - w.v);
    } else {
      if (a > w.u)
        r -= w.eta * (a - w.u);
      else if (a < w.v)
        r -= w.eta * (w.v - a);
    }
  }
  return r;
}

Environment::Environment(EpisodeConfig cfg)
    : cfg_(std::move(cfg)), buffer_(cfg_.buffer_capacity) {
  base_ = load_grid_case(cfg_.case_path);

  if (cfg_.dt_sim <= 0 || cfg_.dt_control <= 0)
    throw ConfigError("time steps must be positive");
  double ratio = cfg_.dt_control / cfg_.dt_sim;
  if (std::abs(ratio - std::round(ratio)) > 1e-9)
    throw ConfigError("dt_control must be an integer multiple of dt_sim");
  if (cfg_.horizon <= 0) throw ConfigError("horizon must be positive");
  if (fault_enabled()) {
    base_.bus_index(cfg_.fault_bus);  // throws on unknown bus
    if (cfg_.fault_duration <= 0)
      throw ConfigError("fault duration must be positive");
    if (cfg_.fault_time + cfg_.fault_duration >= cfg_.horizon)
      throw ConfigError("fault must clear before the horizon");
  }
  if (!(cfg_.weights.v < cfg_.weights.u))
    throw ConfigError("action bounds must satisfy v < u");
  if (cfg_.monitored_bus_pairs.empty())
    throw ConfigError("at least one monitored bus pair is required");
  if (cfg_.controlled_generators.empty())
    throw ConfigError("at least one controlled generator is required");
  cfg_.channel.validate();
  if (cfg_.pv.share < 0) throw ConfigError("pv share must be non-negative");
  if (cfg_.pv.share > 0 && base_.pv_units.empty())
    throw ConfigError("pv share set but the case has no pv units");

  const int ng = static_cast<int>(base_.generators.size());
  auto check_gen = [&](int idx) {
    if (idx < 0 || idx >= ng)
      throw ConfigError("generator index " + std::to_string(idx) +
                        " out of range");
  };
  for (int g : cfg_.controlled_generators) check_gen(g);
  for (int g : cfg_.pss_generators) check_gen(g);

  // unique monitored buses in order of first appearance
  for (auto [bi, bj] : cfg_.monitored_bus_pairs) {
    int ri = base_.bus_index(bi), rj = base_.bus_index(bj);
    auto place = [&](int row) {
      for (size_t k = 0; k < monitored_rows_.size(); ++k)
        if (monitored_rows_[k] == row) return static_cast<int>(k);
      monitored_rows_.push_back(row);
      return static_cast<int>(monitored_rows_.size() - 1);
    };
    pair_index_.emplace_back(place(ri), place(rj));
  }
}

int Environment::obs_dim() const {
  return generator_count() + static_cast<int>(monitored_rows_.size());
}

int Environment::action_dim() const {
  return static_cast<int>(cfg_.controlled_generators.size());
}

int Environment::generator_count() const {
  return static_cast<int>(base_.generators.size());
}

MeasurementPayload Environment::measure() const {
  NetworkOutputs out = electrical_outputs(ctx_->reduced(), s_.delta, s_.eqp);
  MeasurementPayload p;
  p.t = s_.t;
  p.omega = s_.omega;
  p.theta.resize(static_cast<int>(monitored_rows_.size()));
  for (size_t k = 0; k < monitored_rows_.size(); ++k)
    p.theta[static_cast<int>(k)] = std::arg(out.bus_voltage[monitored_rows_[k]]);
  return p;
}

Observation Environment::assemble() const {
  Observation o;
  o.speed_dev = (cur_.omega - prev_.omega).cwiseAbs();
  o.bus_angle = cur_.theta;
  o.valid = has_delivery_;
  return o;
}

void Environment::poll(double now) {
  auto got = buffer_.read(now);
  if (got && (!has_delivery_ || got->t > cur_.t)) {
    prev_ = cur_;
    cur_ = std::move(*got);
    has_delivery_ = true;
  }
}

Observation Environment::reset() { return reset(cfg_.seed); }

Observation Environment::reset(std::uint64_t seed) {
  rng_delay_ = std::mt19937_64(mix_seed(seed, 0x9E3779B97F4A7C15ull));
  rng_pv_ = std::mt19937_64(mix_seed(seed, 0xC2B2AE3D27D4EB4Full));

  episode_case_ = base_;
  pv_mw_.clear();
  double rated_sum = 0;
  for (const PvUnit& u : base_.pv_units) rated_sum += u.rated;

  if (cfg_.pv.share > 0) {
    double total_load = 0;
    for (const Bus& b : base_.buses) total_load += b.p_load;
    double level = std::uniform_real_distribution<double>(0.8, 1.2)(rng_pv_);
    double pv_total = cfg_.pv.share * level * total_load;
    double dispatch_sum = 0;
    for (const Generator& g : base_.generators) dispatch_sum += g.p_dispatch;
    double scale = 1.0 - pv_total / dispatch_sum;
    if (scale <= 0.05)
      throw ConfigError("pv share leaves no room for conventional dispatch");
    for (Generator& g : episode_case_.generators) g.p_dispatch *= scale;
    for (const PvUnit& u : base_.pv_units)
      pv_mw_.push_back(pv_total * u.rated / rated_sum);
  } else {
    for (const PvUnit& u : base_.pv_units) pv_mw_.push_back(u.rated);
  }

  PowerFlowSolution pf = solve_power_flow(episode_case_, {}, pv_mw_);
  mp_ = to_system_base(episode_case_);
  ctx_.emplace(episode_case_, pf, pv_mw_);
  s_ = init_dynamic_state(episode_case_, pf, ctx_->reduced(), mp_);

  pss_.clear();
  for (size_t k = 0; k < cfg_.pss_generators.size(); ++k)
    pss_.emplace_back(cfg_.pss, cfg_.dt_sim);

  buffer_.clear();
  pv_fluct_ = 0.0;
  pv_scale_ = 1.0;
  fault_on_ = fault_cleared_ = false;
  sync_lost_ = false;
  done_ = false;
  prev_true_omega_ = s_.omega;

  MeasurementPayload eq = measure();
  pair_offsets_.clear();
  for (auto [pi, pj] : pair_index_)
    pair_offsets_.push_back(eq.theta[pi] - eq.theta[pj]);

  prev_ = eq;
  cur_ = eq;
  has_delivery_ = false;
  buffer_.push(eq, cfg_.channel, rng_delay_);
  poll(0.0);
  return assemble();
}

StepResult Environment::step(const Eigen::VectorXd& action) {
  if (done_) throw ConfigError("step called on a finished episode");
  if (action.size() != action_dim())
    throw ConfigError("action length does not match controlled generators");
  if (!action.allFinite()) throw ConfigError("action must be finite");

  // no data yet: the controller stays silent
  Eigen::VectorXd requested =
      has_delivery_ ? action : Eigen::VectorXd::Zero(action_dim()).eval();
  Eigen::VectorXd applied = requested.cwiseMax(cfg_.weights.v).cwiseMin(cfg_.weights.u);

  if (cfg_.pv.share > 0 && cfg_.pv.fluctuation_std > 0) {
    // discrete OU: stationary std = fluctuation_std, corner at 0.1 Hz
    double a = std::exp(-0.6283185307179586 * cfg_.dt_control);
    double e = std::normal_distribution<double>(0.0, 1.0)(rng_pv_);
    pv_fluct_ = a * pv_fluct_ +
                cfg_.pv.fluctuation_std * std::sqrt(1.0 - a * a) * e;
    pv_scale_ = std::max(0.0, 1.0 + pv_fluct_);
    ctx_->set_pv_scale(pv_scale_);
  }

  const int nsub = static_cast<int>(std::round(cfg_.dt_control / cfg_.dt_sim));
  const int ng = generator_count();
  Eigen::VectorXd vpss(ng);
  for (int k = 0; k < nsub; ++k) {
    double now = s_.t;
    if (fault_enabled()) {
      if (!fault_on_ && now >= cfg_.fault_time - 1e-9) {
        ctx_->apply_event({EventKind::BusFault, now, cfg_.fault_bus,
                           cfg_.fault_admittance});
        fault_on_ = true;
      }
      if (fault_on_ && !fault_cleared_ &&
          now >= cfg_.fault_time + cfg_.fault_duration - 1e-9) {
        ctx_->apply_event({EventKind::FaultClear, now, cfg_.fault_bus, 0.0});
        fault_cleared_ = true;
      }
    }

    vpss.setZero();
    for (int p = 0; p < action_dim(); ++p)
      vpss[cfg_.controlled_generators[p]] += applied[p];
    for (size_t m = 0; m < pss_.size(); ++m) {
      int g = cfg_.pss_generators[m];
      vpss[g] += pss_[m].step(s_.omega[g] - 1.0);
    }

    try {
      s_ = step_rk4(s_, ctx_->reduced(), vpss, cfg_.dt_sim, mp_);
    } catch (const NumericalError&) {
      sync_lost_ = true;  // numerical blow-up counts as a lost episode
      break;
    }
    if (!synchronism_ok(s_, cfg_.sync_threshold)) {
      sync_lost_ = true;
      break;
    }
  }

  StepResult res;
  if (sync_lost_) {
    res.reward = -cfg_.weights.sync_penalty;
  } else {
    MeasurementPayload m = measure();
    buffer_.push(m, cfg_.channel, rng_delay_);
    poll(s_.t);

    std::vector<double> diffs;
    for (auto [pi, pj] : pair_index_)
      diffs.push_back(m.theta[pi] - m.theta[pj]);
    res.reward = reward_value(s_.omega, prev_true_omega_, diffs, pair_offsets_,
                              requested, cfg_.weights);
  }
  prev_true_omega_ = s_.omega;

  done_ = sync_lost_ || s_.t >= cfg_.horizon - 1e-9;
  res.observation = assemble();
  res.done = done_;
  res.info.sync_lost = sync_lost_;
  res.info.t = s_.t;
  res.info.pv_scale = pv_scale_;
  return res;
}

}  // namespace lfo
