#pragma once

#include <array>
#include <utility>
#include <vector>

#include "lfo/errors.hpp"

namespace lfo {

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
};

// Positional PID with derivative on error and clamped-integrator anti-windup:
// the accumulator only advances while the output is inside its limits.
class Pid {
 public:
  Pid(PidGains gains, double out_min = -0.2, double out_max = 0.2);

  void reset();
  double step(double error, double dt);

 private:
  PidGains g_;
  double lo_, hi_;
  double integral_ = 0.0;
  double prev_error_ = 0.0;
  bool first_ = true;
};

// Bilinear-discretized (c0 + c1 s) / (d0 + d1 s).
class FirstOrderFilter {
 public:
  FirstOrderFilter(double c0, double c1, double d0, double d1, double dt);

  void reset();
  double step(double x);

 private:
  double b0_, b1_, a1_;  // y = b0 x + b1 x_prev - a1 y_prev
  double x1_ = 0.0, y1_ = 0.0;
};

struct PssParams {
  double kpss = 20.0;
  double tw = 10.0;  // washout time constant, s
  std::vector<std::pair<double, double>> stages = {{0.05, 0.02},
                                                   {0.05, 0.02}};  // (T1, T2)
  double out_min = -0.2, out_max = 0.2;
};

// Conventional speed-input stabilizer: gain, washout, lead-lag cascade,
// output clamp. Runs at the simulation step on local (undelayed) speed.
class WashoutPss {
 public:
  WashoutPss(const PssParams& p, double dt);

  void reset();
  double step(double delta_omega);

 private:
  double kpss_, lo_, hi_;
  FirstOrderFilter washout_;
  std::vector<FirstOrderFilter> stages_;
};

struct EpisodeConfig;  // environment.hpp

struct PidTunePoint {
  PidGains gains;
  double score = 0.0;  // integral of sum_g |1 - omega_g| dt, lower is better
};

struct PidTuneResult {
  PidGains best;
  double best_score = 0.0;
  double open_loop_score = 0.0;
  std::vector<PidTunePoint> log;
};

// Grid search over gain triples on the configured fault scenario with an
// undelayed channel (the benchmark is tuned without delay, then evaluated
// with it). Score: integral of per-generator |1 - omega|.
PidTuneResult tune_pid(const EpisodeConfig& cfg,
                       const std::vector<double>& kp_grid,
                       const std::vector<double>& ki_grid,
                       const std::vector<double>& kd_grid);

// One episode with per-generator PIDs fed by the delivered (possibly
// delayed) measurement; returns the score used by tune_pid.
double pid_episode_score(const EpisodeConfig& cfg, const PidGains& gains);

}  // namespace lfo
