#include "lfo/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lfo/environment.hpp"

namespace lfo {

Pid::Pid(PidGains gains, double out_min, double out_max)
    : g_(gains), lo_(out_min), hi_(out_max) {
  if (!(lo_ < hi_)) throw ConfigError("pid output limits are inverted");
}

void Pid::reset() {
  integral_ = 0.0;
  prev_error_ = 0.0;
  first_ = true;
}

double Pid::step(double error, double dt) {
  if (dt <= 0) throw ConfigError("pid step needs dt > 0");
  double deriv = first_ ? 0.0 : (error - prev_error_) / dt;
  first_ = false;
  prev_error_ = error;

  double candidate = integral_ + error * dt;
  double out = g_.kp * error + g_.ki * candidate + g_.kd * deriv;
  if (out > hi_) return hi_;
  if (out < lo_) return lo_;
  integral_ = candidate;  // advance only while unsaturated
  return out;
}

FirstOrderFilter::FirstOrderFilter(double c0, double c1, double d0, double d1,
                                   double dt) {
  // s -> (2/dt) (1 - z^-1) / (1 + z^-1)
  double k = 2.0 / dt;
  double den0 = d0 + d1 * k;
  if (den0 == 0.0) throw ConfigError("filter discretization is singular");
  b0_ = (c0 + c1 * k) / den0;
  b1_ = (c0 - c1 * k) / den0;
  a1_ = (d0 - d1 * k) / den0;
}

void FirstOrderFilter::reset() { x1_ = y1_ = 0.0; }

double FirstOrderFilter::step(double x) {
  double y = b0_ * x + b1_ * x1_ - a1_ * y1_;
  x1_ = x;
  y1_ = y;
  return y;
}

WashoutPss::WashoutPss(const PssParams& p, double dt)
    : kpss_(p.kpss),
      lo_(p.out_min),
      hi_(p.out_max),
      washout_(0.0, p.tw, 1.0, p.tw, dt) {
  if (!(lo_ < hi_)) throw ConfigError("pss output limits are inverted");
  if (p.tw <= 0) throw ConfigError("pss washout time constant must be > 0");
  for (auto [t1, t2] : p.stages) {
    if (t2 <= 0) throw ConfigError("pss lead-lag denominator constant must be > 0");
    stages_.emplace_back(1.0, t1, 1.0, t2, dt);
  }
}

void WashoutPss::reset() {
  washout_.reset();
  for (FirstOrderFilter& f : stages_) f.reset();
}

double WashoutPss::step(double delta_omega) {
  double y = washout_.step(kpss_ * delta_omega);
  for (FirstOrderFilter& f : stages_) y = f.step(y);
  return std::clamp(y, lo_, hi_);
}

double pid_episode_score(const EpisodeConfig& cfg, const PidGains& gains) {
  Environment env(cfg);
  std::vector<Pid> pids;
  for (size_t i = 0; i < cfg.controlled_generators.size(); ++i)
    pids.emplace_back(gains, cfg.weights.v, cfg.weights.u);

  env.reset(cfg.seed);
  double score = 0.0;
  Eigen::VectorXd action = Eigen::VectorXd::Zero(env.action_dim());
  while (!env.episode_done()) {
    if (env.has_delivery()) {
      const MeasurementPayload& m = env.delivered();
      for (size_t p = 0; p < pids.size(); ++p) {
        int g = cfg.controlled_generators[p];
        action[static_cast<int>(p)] =
            pids[p].step(1.0 - m.omega[g], cfg.dt_control);
      }
    } else {
      action.setZero();
    }
    StepResult res = env.step(action);
    const Eigen::VectorXd& w = env.state().omega;
    score += (w.array() - 1.0).abs().sum() * cfg.dt_control;
    if (res.info.sync_lost) score += 1e3;  // dominate any damped trajectory
  }
  return score;
}

PidTuneResult tune_pid(const EpisodeConfig& cfg,
                       const std::vector<double>& kp_grid,
                       const std::vector<double>& ki_grid,
                       const std::vector<double>& kd_grid) {
  if (kp_grid.empty() || ki_grid.empty() || kd_grid.empty())
    throw ConfigError("pid tuning grids must be non-empty");

  EpisodeConfig tune_cfg = cfg;
  tune_cfg.channel = constant_delay(0.0);  // benchmark is tuned without delay

  PidTuneResult res;
  res.open_loop_score = pid_episode_score(tune_cfg, PidGains{});
  res.best_score = std::numeric_limits<double>::infinity();
  for (double kp : kp_grid)
    for (double ki : ki_grid)
      for (double kd : kd_grid) {
        PidGains g{kp, ki, kd};
        double score = pid_episode_score(tune_cfg, g);
        res.log.push_back({g, score});
        if (score < res.best_score) {
          res.best_score = score;
          res.best = g;
        }
      }
  return res;
}

}  // namespace lfo
