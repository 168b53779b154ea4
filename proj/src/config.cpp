#include "lfo/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "lfo/errors.hpp"
#include "lfo/util.hpp"

namespace lfo {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.')
      return false;
  }
  return true;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cur = trim(cur);
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  // a bare "" value means an empty list
  if (out.size() == 1 && out[0].empty()) out.clear();
  for (const std::string& item : out)
    if (item.empty()) throw ConfigError("empty element in list value '" + s + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    return parse_double(v, key.c_str());
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

long long to_ll(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != v.size())
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  if (!v.empty() && v[0] == '-')
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  std::size_t pos = 0;
  std::uint64_t out = 0;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != v.size())
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  KeyValueConfig kv;
  std::filesystem::path dir = std::filesystem::path(path).parent_path();
  kv.base_dir_ = dir.empty() ? std::string(".") : dir.string();
  kv.parse_text(ss.str(), 0);
  return kv;
}

KeyValueConfig KeyValueConfig::from_text(const std::string& text,
                                         const std::string& base_dir) {
  KeyValueConfig kv;
  kv.base_dir_ = base_dir;
  kv.parse_text(text, 0);
  return kv;
}

void KeyValueConfig::parse_text(const std::string& text, int depth) {
  if (depth > 8) throw ConfigError("config include depth exceeds 8 (cycle?)");
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.rfind("include ", 0) == 0) {
      std::string inc = resolve_path(trim(line.substr(8)));
      std::ifstream sub(inc);
      if (!sub)
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": cannot open include '" + inc + "'");
      std::stringstream ss;
      ss << sub.rdbuf();
      parse_text(ss.str(), depth + 1);
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key))
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": bad key '" + key + "'");
    kv_[key] = value;
  }
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw ConfigError("bad config key '" + key + "'");
  kv_[key] = trim(value);
}

void KeyValueConfig::apply_set_arg(const std::string& arg) {
  std::size_t eq = arg.find('=');
  if (eq == std::string::npos)
    throw ConfigError("--set expects key=value, got '" + arg + "'");
  set(trim(arg.substr(0, eq)), arg.substr(eq + 1));
}

bool KeyValueConfig::has(const std::string& key) const {
  return kv_.count(key) != 0;
}

const std::string* KeyValueConfig::find(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return nullptr;
  consumed_.insert(key);
  return &it->second;
}

std::string KeyValueConfig::require_string(const std::string& key) const {
  const std::string* v = find(key);
  if (!v || v->empty())
    throw ConfigError("config key '" + key + "' is required");
  return *v;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& def) const {
  const std::string* v = find(key);
  return v ? *v : def;
}

double KeyValueConfig::get_double(const std::string& key, double def) const {
  const std::string* v = find(key);
  return v ? to_double(key, *v) : def;
}

int KeyValueConfig::get_int(const std::string& key, int def) const {
  const std::string* v = find(key);
  if (!v) return def;
  long long ll = to_ll(key, *v);
  if (ll < std::numeric_limits<int>::min() || ll > std::numeric_limits<int>::max())
    throw ConfigError("config key '" + key + "': value out of int range");
  return static_cast<int>(ll);
}

bool KeyValueConfig::get_bool(const std::string& key, bool def) const {
  const std::string* v = find(key);
  return v ? to_bool(key, *v) : def;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key,
                                      std::uint64_t def) const {
  const std::string* v = find(key);
  return v ? to_u64(key, *v) : def;
}

std::vector<double> KeyValueConfig::get_double_list(
    const std::string& key, const std::vector<double>& def) const {
  const std::string* v = find(key);
  if (!v) return def;
  std::vector<double> out;
  for (const std::string& item : split_csv(*v)) out.push_back(to_double(key, item));
  return out;
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key,
                                              const std::vector<int>& def) const {
  const std::string* v = find(key);
  if (!v) return def;
  std::vector<int> out;
  for (const std::string& item : split_csv(*v)) {
    long long ll = to_ll(key, item);
    out.push_back(static_cast<int>(ll));
  }
  return out;
}

std::vector<std::uint64_t> KeyValueConfig::get_u64_list(
    const std::string& key, const std::vector<std::uint64_t>& def) const {
  const std::string* v = find(key);
  if (!v) return def;
  std::vector<std::uint64_t> out;
  for (const std::string& item : split_csv(*v)) out.push_back(to_u64(key, item));
  return out;
}

std::vector<std::string> KeyValueConfig::get_string_list(
    const std::string& key, const std::vector<std::string>& def) const {
  const std::string* v = find(key);
  return v ? split_csv(*v) : def;
}

std::vector<std::string> KeyValueConfig::keys_with_prefix(
    const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : kv_)
    if (k.rfind(prefix, 0) == 0) out.push_back(k);
  return out;  // std::map iteration is already sorted
}

std::vector<std::string> KeyValueConfig::unconsumed() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : kv_)
    if (!consumed_.count(k)) out.push_back(k);
  return out;
}

void KeyValueConfig::require_all_consumed() const {
  std::vector<std::string> left = unconsumed();
  if (left.empty()) return;
  std::string msg = "unknown config key(s):";
  for (const std::string& k : left) msg += " '" + k + "'";
  throw ConfigError(msg);
}

std::string KeyValueConfig::resolve_path(const std::string& value) const {
  std::filesystem::path p(value);
  if (p.is_absolute()) return value;
  return (std::filesystem::path(base_dir_) / p).string();
}

GaussianMixtureDelay parse_channel_spec(const std::string& spec) {
  if (spec == "none") {
    GaussianMixtureDelay m = constant_delay(0.0);
    m.channel_label = "none";
    return m;
  }
  if (spec.rfind("constant:", 0) == 0) {
    GaussianMixtureDelay m = constant_delay(to_double("channel", spec.substr(9)));
    m.channel_label = spec;
    return m;
  }
  if (spec.rfind("range:", 0) == 0) {
    std::string rest = spec.substr(6);
    std::size_t colon = rest.find(':');
    if (colon == std::string::npos)
      throw ConfigError("channel range spec needs 'range:<lo>:<hi>', got '" + spec + "'");
    double lo = to_double("channel", rest.substr(0, colon));
    double hi = to_double("channel", rest.substr(colon + 1));
    return mixture_from_range(lo, hi, spec);
  }
  return channel_preset(spec);
}

namespace {

std::vector<std::pair<int, int>> parse_pairs(const std::string& key,
                                             const std::string& v) {
  std::vector<std::pair<int, int>> out;
  for (const std::string& item : split_csv(v)) {
    std::size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError("config key '" + key + "': pair '" + item +
                        "' needs the form a:b");
    out.emplace_back(static_cast<int>(to_ll(key, trim(item.substr(0, colon)))),
                     static_cast<int>(to_ll(key, trim(item.substr(colon + 1)))));
  }
  return out;
}

std::vector<std::pair<double, double>> parse_stages(const std::string& key,
                                                    const std::string& v) {
  std::vector<std::pair<double, double>> out;
  for (const std::string& item : split_csv(v)) {
    std::size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError("config key '" + key + "': stage '" + item +
                        "' needs the form T1:T2");
    out.emplace_back(to_double(key, trim(item.substr(0, colon))),
                     to_double(key, trim(item.substr(colon + 1))));
  }
  return out;
}

}  // namespace

ExperimentConfig build_experiment_config(const KeyValueConfig& kv) {
  ExperimentConfig ec;

  ec.scenario.case_path = kv.resolve_path(kv.require_string("case"));
  ec.scenario.dt_sim = kv.get_double("scenario.dt_sim", ec.scenario.dt_sim);
  ec.scenario.dt_control = kv.get_double("scenario.dt_control", ec.scenario.dt_control);
  ec.scenario.horizon = kv.get_double("scenario.horizon", ec.scenario.horizon);
  ec.scenario.fault_time = kv.get_double("scenario.fault_time", ec.scenario.fault_time);
  ec.scenario.fault_duration =
      kv.get_double("scenario.fault_duration", ec.scenario.fault_duration);
  ec.scenario.fault_bus = kv.get_int("scenario.fault_bus", ec.scenario.fault_bus);
  ec.scenario.fault_admittance =
      kv.get_double("scenario.fault_admittance", ec.scenario.fault_admittance);
  ec.scenario.channel =
      parse_channel_spec(kv.get_string("scenario.channel", "fiber_optic"));
  if (kv.has("scenario.monitored_pairs"))
    ec.scenario.monitored_bus_pairs =
        parse_pairs("scenario.monitored_pairs",
                    kv.get_string("scenario.monitored_pairs", ""));
  ec.scenario.controlled_generators =
      kv.get_int_list("scenario.controlled_generators", {});
  ec.scenario.pss_generators = kv.get_int_list("scenario.pss_generators", {});
  ec.scenario.sync_threshold =
      kv.get_double("scenario.sync_threshold", ec.scenario.sync_threshold);
  {
    int cap = kv.get_int("scenario.buffer_capacity",
                         static_cast<int>(ec.scenario.buffer_capacity));
    if (cap < 1) throw ConfigError("scenario.buffer_capacity must be >= 1");
    ec.scenario.buffer_capacity = static_cast<std::size_t>(cap);
  }
  ec.scenario.pv.share = kv.get_double("scenario.pv_share", ec.scenario.pv.share);
  ec.scenario.pv.fluctuation_std =
      kv.get_double("scenario.pv_fluctuation_std", ec.scenario.pv.fluctuation_std);

  ec.scenario.pss.kpss = kv.get_double("pss.kpss", ec.scenario.pss.kpss);
  ec.scenario.pss.tw = kv.get_double("pss.tw", ec.scenario.pss.tw);
  if (kv.has("pss.stages"))
    ec.scenario.pss.stages =
        parse_stages("pss.stages", kv.get_string("pss.stages", ""));
  ec.scenario.pss.out_min = kv.get_double("pss.out_min", ec.scenario.pss.out_min);
  ec.scenario.pss.out_max = kv.get_double("pss.out_max", ec.scenario.pss.out_max);

  RewardWeights& w = ec.scenario.weights;
  w.alpha = kv.get_double("reward.alpha", w.alpha);
  w.beta = kv.get_double("reward.beta", w.beta);
  w.eta = kv.get_double("reward.eta", w.eta);
  w.zeta = kv.get_double("reward.zeta", w.zeta);
  w.u = kv.get_double("reward.u", w.u);
  w.v = kv.get_double("reward.v", w.v);
  w.sync_penalty = kv.get_double("reward.sync_penalty", w.sync_penalty);
  w.paper_literal = kv.get_bool("reward.paper_literal", w.paper_literal);

  AgentConfig& a = ec.agent;
  a.hidden = kv.get_int_list("agent.hidden", a.hidden);
  a.gamma = kv.get_double("agent.gamma", a.gamma);
  {
    long long cap = kv.get_int("agent.buffer_capacity",
                               static_cast<int>(a.buffer_capacity));
    if (cap < 1) throw ConfigError("agent.buffer_capacity must be >= 1");
    a.buffer_capacity = static_cast<std::size_t>(cap);
  }
  a.batch_size = kv.get_int("agent.batch_size", a.batch_size);
  a.warmup = kv.get_int("agent.warmup", a.warmup);
  a.lr_actor = kv.get_double("agent.lr_actor", a.lr_actor);
  a.lr_critic = kv.get_double("agent.lr_critic", a.lr_critic);
  {
    std::string mode = kv.get_string("agent.target_mode", "soft");
    if (mode == "soft") a.target_mode = TargetMode::Soft;
    else if (mode == "hard") a.target_mode = TargetMode::HardPeriodic;
    else throw ConfigError("agent.target_mode must be 'soft' or 'hard'");
  }
  a.target_period = kv.get_int("agent.target_period", a.target_period);
  a.tau = kv.get_double("agent.tau", a.tau);
  {
    std::string noise = kv.get_string("agent.noise", "ou");
    if (noise == "ou") a.noise = NoiseKind::Ou;
    else if (noise == "gaussian") a.noise = NoiseKind::Gaussian;
    else throw ConfigError("agent.noise must be 'ou' or 'gaussian'");
  }
  a.ou_theta = kv.get_double("agent.ou_theta", a.ou_theta);
  a.sigma_start = kv.get_double("agent.sigma_start", a.sigma_start);
  a.sigma_end = kv.get_double("agent.sigma_end", a.sigma_end);
  a.decay_episodes = kv.get_int("agent.sigma_decay_episodes", a.decay_episodes);
  a.reward_scale = kv.get_double("agent.reward_scale", a.reward_scale);
  {
    std::vector<double> scale = kv.get_double_list("agent.obs_scale", {});
    if (!scale.empty()) {
      a.obs_scale.resize(static_cast<Eigen::Index>(scale.size()));
      for (std::size_t i = 0; i < scale.size(); ++i)
        a.obs_scale[static_cast<Eigen::Index>(i)] = scale[i];
    }
  }
  // action bounds follow the reward's feasible band
  a.action_low = w.v;
  a.action_high = w.u;

  ec.controller = kv.get_string("controller", ec.controller);
  if (ec.controller != "rl" && ec.controller != "pid" &&
      ec.controller != "pss_only" && ec.controller != "none")
    throw ConfigError("controller must be one of rl, pid, pss_only, none");

  ec.episodes = kv.get_int("train.episodes", ec.episodes);
  ec.eval_episodes = kv.get_int("train.eval_episodes", ec.eval_episodes);
  ec.seeds = kv.get_u64_list("train.seeds", ec.seeds);
  ec.checkpoint_every = kv.get_int("train.checkpoint_every", ec.checkpoint_every);
  ec.success_window = kv.get_int("train.success_window", ec.success_window);
  ec.updates = kv.get_bool("train.updates", ec.updates);
  if (ec.episodes < 1) throw ConfigError("train.episodes must be >= 1");
  if (ec.eval_episodes < 1) throw ConfigError("train.eval_episodes must be >= 1");
  if (ec.seeds.empty()) throw ConfigError("train.seeds must not be empty");
  if (ec.checkpoint_every < 1)
    throw ConfigError("train.checkpoint_every must be >= 1");
  if (ec.success_window < 1) throw ConfigError("train.success_window must be >= 1");

  ec.eval_seeds = kv.get_u64_list("eval.seeds", ec.eval_seeds);
  ec.eval_channels = kv.get_string_list("eval.channels", {});
  ec.eval_traces = kv.get_bool("eval.write_traces", ec.eval_traces);
  if (kv.has("eval.checkpoint"))
    ec.checkpoint_path = kv.resolve_path(kv.get_string("eval.checkpoint", ""));
  if (ec.eval_seeds.empty()) throw ConfigError("eval.seeds must not be empty");
  for (const std::string& ch : ec.eval_channels) parse_channel_spec(ch);

  ec.kp_grid = kv.get_double_list("pid.kp_grid", ec.kp_grid);
  ec.ki_grid = kv.get_double_list("pid.ki_grid", ec.ki_grid);
  ec.kd_grid = kv.get_double_list("pid.kd_grid", ec.kd_grid);
  if (kv.has("pid.kp") || kv.has("pid.ki") || kv.has("pid.kd")) {
    ec.pid_fixed = true;
    ec.pid_gains.kp = kv.get_double("pid.kp", 0.0);
    ec.pid_gains.ki = kv.get_double("pid.ki", 0.0);
    ec.pid_gains.kd = kv.get_double("pid.kd", 0.0);
  }

  ec.sweep_episodes = kv.get_int("sweep.episodes", 0);
  for (const std::string& key : kv.keys_with_prefix("sweep.")) {
    if (key == "sweep.episodes") continue;
    std::string target = key.substr(6);
    std::vector<std::string> values = kv.get_string_list(key, {});
    if (target.empty() || values.empty())
      throw ConfigError("sweep key '" + key + "' needs a non-empty value list");
    ec.sweep_axes.push_back({target, values});
  }

  if (kv.has("plots.learning_curve"))
    ec.plot_learning_curve =
        kv.resolve_path(kv.get_string("plots.learning_curve", ""));
  if (kv.has("plots.channel_traces"))
    ec.plot_channel_traces =
        kv.resolve_path(kv.get_string("plots.channel_traces", ""));
  {
    std::vector<std::string> pair = kv.get_string_list("plots.speed_pair", {});
    if (!pair.empty()) {
      if (pair.size() != 2)
        throw ConfigError("plots.speed_pair needs exactly two directories");
      for (std::string& p : pair) p = kv.resolve_path(p);
      ec.plot_speed_pair = pair;
    }
  }
  ec.plot_svg = kv.get_bool("plots.svg", ec.plot_svg);

  if (kv.has("out")) ec.out_dir = kv.get_string("out", ec.out_dir);

  kv.require_all_consumed();
  return ec;
}

int worker_cap() {
  const char* env = std::getenv("LFO_THREADS");
  if (env && *env) {
    std::string v(env);
    std::size_t pos = 0;
    long n = 0;
    try {
      n = std::stol(v, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != v.size() || n < 1)
      throw ConfigError("LFO_THREADS must be a positive integer, got '" + v + "'");
    return static_cast<int>(n);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace lfo
