#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lfo/ddpg.hpp"
#include "lfo/environment.hpp"

namespace lfo {

// Layered key-value text config. One `key = value` per line, `#` starts a
// comment, blank lines are skipped, and an `include <path>` line pulls in
// another file before the rest of the current one (so later assignments
// override included ones). CLI `--set key=value` pairs are applied on top.
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_text(const std::string& text,
                                  const std::string& base_dir = ".");

  void set(const std::string& key, const std::string& value);
  void apply_set_arg(const std::string& arg);  // "key=value"

  bool has(const std::string& key) const;

  // Typed getters. Each records the key as consumed so unknown keys can be
  // reported after the full config has been read.
  std::string require_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key, double def) const;
  int get_int(const std::string& key, int def) const;
  bool get_bool(const std::string& key, bool def) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t def) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& def) const;
  std::vector<int> get_int_list(const std::string& key,
                                const std::vector<int>& def) const;
  std::vector<std::uint64_t> get_u64_list(
      const std::string& key, const std::vector<std::uint64_t>& def) const;
  std::vector<std::string> get_string_list(
      const std::string& key, const std::vector<std::string>& def) const;

  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
  std::vector<std::string> unconsumed() const;
  void require_all_consumed() const;  // throws ConfigError listing leftovers

  const std::string& base_dir() const { return base_dir_; }
  // Resolve a path value relative to the config file's directory.
  std::string resolve_path(const std::string& value) const;

 private:
  void parse_text(const std::string& text, int depth);
  const std::string* find(const std::string& key) const;

  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> consumed_;
  std::string base_dir_ = ".";
};

// "fiber_optic" and friends, "none", "constant:<seconds>" or
// "range:<lo>:<hi>" (two-component mixture spanning [lo, hi]).
GaussianMixtureDelay parse_channel_spec(const std::string& spec);

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;  // re-applied as overrides per grid point
};

struct ExperimentConfig {
  EpisodeConfig scenario;
  AgentConfig agent;  // obs/action dims are filled in from the environment
  std::string controller = "rl";

  int episodes = 500;
  int eval_episodes = 4;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  int checkpoint_every = 50;
  int success_window = 100;
  bool updates = true;

  std::vector<std::uint64_t> eval_seeds{100, 101, 102, 103, 104};
  std::vector<std::string> eval_channels;  // empty = the scenario channel
  bool eval_traces = true;
  std::string checkpoint_path;  // rl eval: checkpoint to load

  std::vector<double> kp_grid{0, -10, -20, -40, -80};
  std::vector<double> ki_grid{0, -2};
  std::vector<double> kd_grid{0, -1, -2};
  bool pid_fixed = false;  // true when pid.kp/ki/kd given directly
  PidGains pid_gains;

  std::vector<SweepAxis> sweep_axes;
  int sweep_episodes = 0;  // 0 = use `episodes`

  std::string plot_learning_curve;  // dir with seed runs, or a log file
  std::string plot_channel_traces;  // dir with eval traces
  std::vector<std::string> plot_speed_pair;  // {constant_dir, variable_dir}
  bool plot_svg = true;

  std::string out_dir = "out";
};

// Reads every recognised key (documented in configs/README notes), applies
// defaults for the rest, and rejects unknown keys.
ExperimentConfig build_experiment_config(const KeyValueConfig& kv);

// Worker cap: LFO_THREADS if set (must be a positive integer), otherwise
// hardware concurrency, never less than 1.
int worker_cap();

}  // namespace lfo
