#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lfo/config.hpp"
#include "lfo/ddpg.hpp"
#include "lfo/environment.hpp"
#include "lfo/metrics.hpp"

namespace lfo {

struct TrainOptions {
  int episodes = 500;
  int checkpoint_every = 50;
  int success_window = 100;
  std::uint64_t seed = 0;
  bool updates = true;
  std::string out_dir;  // empty: nothing is written to disk
};

struct TrainResult {
  std::uint64_t seed = 0;
  std::vector<EpisodeRecord> log;
  double trailing_success = 0.0;     // over min(success_window, episodes)
  double first_block_return = 0.0;   // mean return, leading min(50, n) episodes
  double final_block_return = 0.0;   // mean return, trailing block
  SpeedSummary speed;
  std::string log_path;
  std::string final_checkpoint;
  std::string best_checkpoint;
};

// Fills obs/action dims (and leaves everything else untouched) by probing
// the scenario's environment once.
AgentConfig sized_agent_config(AgentConfig base, const EpisodeConfig& scenario);

// One deterministic training run: per-episode environment seeds and the
// agent seed both derive from opt.seed, so a repeat run reproduces the log
// byte for byte. Throws NumericalError if a critic loss or actor gradient
// goes non-finite.
TrainResult train_agent(const EpisodeConfig& scenario,
                        const AgentConfig& agent_cfg, const TrainOptions& opt);

// One run per seed (out_dir gets a seed<k>/ directory each), parallelised
// up to max_workers (0 = worker_cap()). Results come back in input order;
// train_summary.csv rows are sorted by seed.
std::vector<TrainResult> train_seeds(const EpisodeConfig& scenario,
                                     const AgentConfig& agent_cfg,
                                     const std::vector<std::uint64_t>& seeds,
                                     const TrainOptions& base,
                                     int max_workers = 0);

struct EvalOptions {
  std::vector<std::uint64_t> seeds;
  int episodes_per_seed = 1;
  std::string scenario_label = "scenario";
  std::string controller = "none";  // rl | pid | pss_only | none
  DdpgAgent* agent = nullptr;       // rl: loaded checkpoint, used greedily
  PidGains pid_gains;               // pid
  std::string out_dir;              // traces land here when write_traces
  bool write_traces = false;
};

struct EvalRunResult {
  std::vector<EvalRecord> records;  // seed-major, episode order within seed
  std::vector<std::string> trace_paths;
};

// Greedy closed-loop rollouts of one controller on one scenario. Never
// mutates the agent or writes checkpoints. Episodes that end early on loss
// of synchronism are summarised over the truncated trace.
EvalRunResult evaluate_controller(const EpisodeConfig& scenario,
                                  const EvalOptions& opt);

// "kundur" / "ieee39_pv50": case file stem plus the pv share if nonzero.
std::string scenario_label(const EpisodeConfig& scenario);

}  // namespace lfo
