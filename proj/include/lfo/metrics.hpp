#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "lfo/errors.hpp"

namespace lfo {

// One training episode as persisted in training_log.csv.
struct EpisodeRecord {
  int episode = 0;
  double ret = 0.0;
  bool success = false;   // ended without losing synchronism
  double initial_q = 0.0; // critic's value of the first observation
  double wall_time_s = 0.0;
};

// One evaluation episode as persisted in eval_report.csv.
struct EvalRecord {
  std::string scenario;
  std::string channel;
  std::string controller;
  std::uint64_t seed = 0;
  bool success = false;
  double peak_dev_pu = 0.0;
  double settling_s = 0.0;
  double tail_energy = 0.0;
};

// Post-disturbance damping quality of one rotor-speed trace.
struct DampingReport {
  double peak_deviation = 0.0; // max |omega - 1| anywhere in the trace, pu
  double settling_time = 0.0;  // first time after clearing beyond which the
                               // deviation stays under the threshold, s
  double tail_energy = 0.0;    // integral of sum_g (omega_g - 1)^2 over the
                               // final window, pu^2 * s
  bool settled = false;        // false when the trace never settles; the
                               // settling_time then points at the trace end
};

// Fraction of successes over the trailing `window` records.
double success_rate(const std::vector<EpisodeRecord>& records, int window);

// Trailing success fraction per episode; the prefix is averaged over the
// records available so far (min(e+1, window) of them).
std::vector<double> smoothed_success_rate(
    const std::vector<EpisodeRecord>& records, int window);

// Trailing mean of returns per episode, prefix averaged over what exists.
std::vector<double> moving_average_return(
    const std::vector<EpisodeRecord>& records, int window = 5);

struct SpeedSummary {
  double mean_overall_speed = 0.0;
  int episodes_to_threshold = -1;  // -1: smoothed rate never reached it
};

// Learning-speed summary of a training log: the smoothed success rate's
// total climb normalized by its largest single-episode increment, plus the
// first episode at which the smoothed rate reaches `success_threshold`.
// Logs whose smoothed rate never increases score 0.
SpeedSummary mean_overall_speed(const std::vector<EpisodeRecord>& records,
                                double success_threshold = 0.8,
                                int smoothing_window = 100);

// Damping quality of a sampled trace: `t` strictly increasing, `omega` one
// per-generator speed vector (pu) per sample. The trace must span at least
// `tail_window` seconds and reach `clear_time`.
DampingReport damping_report(const std::vector<double>& t,
                             const std::vector<Eigen::VectorXd>& omega,
                             double clear_time, double threshold = 1e-3,
                             double tail_window = 5.0);

// CSV persistence. Numbers use shortest round-trip formatting, so a
// write/read/write cycle is byte-identical and metrics recomputed from disk
// match in-run values exactly.
void write_training_log(const std::string& path,
                        const std::vector<EpisodeRecord>& records);
std::vector<EpisodeRecord> read_training_log(const std::string& path);

void write_eval_report(const std::string& path,
                       const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_eval_report(const std::string& path);

}  // namespace lfo
