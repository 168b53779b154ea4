#include "lfo/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "lfo/baselines.hpp"
#include "lfo/errors.hpp"
#include "lfo/util.hpp"

namespace lfo {

namespace {

constexpr std::uint64_t kAgentSalt = 0x6167656e74ULL;    // agent init/noise
constexpr std::uint64_t kEpisodeSalt = 0x65707376ULL;    // episode seeds

std::string pad5(int n) {
  std::ostringstream ss;
  ss << n;
  std::string s = ss.str();
  while (s.size() < 5) s.insert(s.begin(), '0');
  return s;
}

double block_mean(const std::vector<EpisodeRecord>& log, bool leading) {
  if (log.empty()) return 0.0;
  std::size_t block = std::min<std::size_t>(50, log.size());
  double sum = 0.0;
  std::size_t start = leading ? 0 : log.size() - block;
  for (std::size_t i = start; i < start + block; ++i) sum += log[i].ret;
  return sum / static_cast<double>(block);
}

}  // namespace

AgentConfig sized_agent_config(AgentConfig base, const EpisodeConfig& scenario) {
  Environment env(scenario);
  base.obs_dim = env.obs_dim();
  base.action_dim = env.action_dim();
  return base;
}

TrainResult train_agent(const EpisodeConfig& scenario,
                        const AgentConfig& agent_cfg, const TrainOptions& opt) {
  if (opt.episodes < 1) throw ConfigError("training needs at least one episode");
  if (opt.checkpoint_every < 1)
    throw ConfigError("checkpoint cadence must be >= 1");
  if (opt.success_window < 1) throw ConfigError("success window must be >= 1");

  Environment env(scenario);
  AgentConfig acfg = agent_cfg;
  acfg.obs_dim = env.obs_dim();
  acfg.action_dim = env.action_dim();
  acfg.seed = mix_seed(opt.seed, kAgentSalt);
  DdpgAgent agent(acfg);

  TrainResult res;
  res.seed = opt.seed;

  std::filesystem::path dir;
  if (!opt.out_dir.empty()) {
    dir = opt.out_dir;
    std::filesystem::create_directories(dir);
  }

  const std::uint64_t ep_stream = mix_seed(opt.seed, kEpisodeSalt);
  const Eigen::VectorXd zero_action = Eigen::VectorXd::Zero(env.action_dim());
  double sim_clock = 0.0;
  double best_rate = -1.0;

  for (int e = 0; e < opt.episodes; ++e) {
    Observation obs = env.reset(mix_seed(ep_stream, static_cast<std::uint64_t>(e)));
    agent.noise_reset();
    const double q0 = agent.initial_q(obs.flat());

    double ret = 0.0;
    bool sync_lost = false;
    while (!env.episode_done()) {
      Eigen::VectorXd a =
          obs.valid ? agent.select_action(obs.flat(), e, true) : zero_action;
      StepResult sr = env.step(a);
      ret += sr.reward;
      if (sr.info.sync_lost) sync_lost = true;
      if (obs.valid)
        agent.push_experience(obs.flat(), a, sr.reward, sr.observation.flat(),
                              sr.info.sync_lost);
      if (opt.updates && agent.ready()) {
        double loss = agent.critic_update();
        double grad_norm = agent.actor_update();
        if (!std::isfinite(loss) || !std::isfinite(grad_norm))
          throw NumericalError(
              "training diverged: non-finite update (seed " +
              std::to_string(opt.seed) + ", episode " + std::to_string(e) +
              ", t=" + std::to_string(sr.info.t) + ")");
        agent.update_targets();
      }
      obs = sr.observation;
    }

    sim_clock += env.time();
    res.log.push_back({e, ret, !sync_lost, q0, sim_clock});

    if (!opt.out_dir.empty()) {
      int window =
          std::min<int>(opt.success_window, static_cast<int>(res.log.size()));
      double rate = success_rate(res.log, window);
      if (rate > best_rate) {
        best_rate = rate;
        res.best_checkpoint = (dir / "best.ckpt").string();
        agent.save(res.best_checkpoint);
      }
      if ((e + 1) % opt.checkpoint_every == 0)
        agent.save((dir / ("checkpoint_ep" + pad5(e + 1) + ".ckpt")).string());
    }
  }

  res.trailing_success = success_rate(
      res.log, std::min<int>(opt.success_window, static_cast<int>(res.log.size())));
  res.first_block_return = block_mean(res.log, true);
  res.final_block_return = block_mean(res.log, false);
  if (res.log.size() >= 2)
    res.speed = mean_overall_speed(res.log, 0.8, opt.success_window);

  if (!opt.out_dir.empty()) {
    res.final_checkpoint = (dir / "final.ckpt").string();
    agent.save(res.final_checkpoint);
    res.log_path = (dir / "training_log.csv").string();
    write_training_log(res.log_path, res.log);
  }
  return res;
}

std::vector<TrainResult> train_seeds(const EpisodeConfig& scenario,
                                     const AgentConfig& agent_cfg,
                                     const std::vector<std::uint64_t>& seeds,
                                     const TrainOptions& base, int max_workers) {
  if (seeds.empty()) throw ConfigError("train_seeds needs at least one seed");
  std::vector<TrainResult> out(seeds.size());
  std::vector<std::exception_ptr> errs(seeds.size());
  int workers = max_workers > 0 ? max_workers : worker_cap();
  workers = std::min<int>(workers, static_cast<int>(seeds.size()));

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next.fetch_add(1); i < seeds.size();
         i = next.fetch_add(1)) {
      try {
        TrainOptions o = base;
        o.seed = seeds[i];
        if (!base.out_dir.empty())
          o.out_dir = base.out_dir + "/seed" + std::to_string(seeds[i]);
        out[i] = train_agent(scenario, agent_cfg, o);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& th : pool) th.join();
  }
  for (const std::exception_ptr& ep : errs)
    if (ep) std::rethrow_exception(ep);

  if (!base.out_dir.empty()) {
    std::vector<const TrainResult*> rows;
    for (const TrainResult& r : out) rows.push_back(&r);
    std::sort(rows.begin(), rows.end(),
              [](const TrainResult* a, const TrainResult* b) {
                return a->seed < b->seed;
              });
    std::ofstream f(base.out_dir + "/train_summary.csv", std::ios::binary);
    if (!f)
      throw ConfigError("cannot write " + base.out_dir + "/train_summary.csv");
    f << "seed,episodes,trailing_success,first_block_return,final_block_return,"
         "mean_overall_speed,episodes_to_threshold\n";
    for (const TrainResult* r : rows) {
      f << r->seed << ',' << r->log.size() << ','
        << fmt_double(r->trailing_success) << ','
        << fmt_double(r->first_block_return) << ','
        << fmt_double(r->final_block_return) << ','
        << fmt_double(r->speed.mean_overall_speed) << ','
        << r->speed.episodes_to_threshold << '\n';
    }
  }
  return out;
}

std::string scenario_label(const EpisodeConfig& scenario) {
  std::string stem = std::filesystem::path(scenario.case_path).stem().string();
  if (stem.empty()) stem = "case";
  if (scenario.pv.share > 0.0) {
    int pct = static_cast<int>(std::lround(scenario.pv.share * 100.0));
    stem += "_pv" + std::to_string(pct);
  }
  return stem;
}

namespace {

struct Trace {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> omega;
};

EvalRecord summarize_episode(const Trace& tr, double clear_time,
                             bool sync_lost) {
  EvalRecord rec;
  rec.success = !sync_lost;
  const double span = tr.t.back() - tr.t.front();
  if (!sync_lost && tr.t.size() >= 2 && span >= 5.0 &&
      clear_time <= tr.t.back()) {
    DampingReport rep = damping_report(tr.t, tr.omega, clear_time);
    rec.peak_dev_pu = rep.peak_deviation;
    rec.settling_s = rep.settling_time;
    rec.tail_energy = rep.tail_energy;
    return rec;
  }
  // Lost synchronism or too little data: summarise what exists.  A
  // desynchronised run never settles, so its residual oscillation energy
  // is unbounded rather than the integral of the truncated trace.
  double peak = 0.0;
  for (const Eigen::VectorXd& w : tr.omega)
    peak = std::max(peak, (w.array() - 1.0).abs().maxCoeff());
  double energy = 0.0;
  for (std::size_t i = 0; i + 1 < tr.t.size(); ++i) {
    double a = (tr.omega[i].array() - 1.0).square().sum();
    double b = (tr.omega[i + 1].array() - 1.0).square().sum();
    energy += 0.5 * (a + b) * (tr.t[i + 1] - tr.t[i]);
  }
  rec.peak_dev_pu = peak;
  rec.settling_s = tr.t.back();
  rec.tail_energy =
      sync_lost ? std::numeric_limits<double>::infinity() : energy;
  return rec;
}

void write_trace(const std::string& path, const Trace& tr) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write trace file " + path);
  f << 't';
  for (Eigen::Index g = 0; g < tr.omega.front().size(); ++g)
    f << ",omega_" << g;
  f << '\n';
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    f << fmt_double(tr.t[i]);
    for (Eigen::Index g = 0; g < tr.omega[i].size(); ++g)
      f << ',' << fmt_double(tr.omega[i][g]);
    f << '\n';
  }
}

}  // namespace

EvalRunResult evaluate_controller(const EpisodeConfig& scenario,
                                  const EvalOptions& opt) {
  if (opt.controller != "rl" && opt.controller != "pid" &&
      opt.controller != "pss_only" && opt.controller != "none")
    throw ConfigError("controller must be one of rl, pid, pss_only, none");
  if (opt.seeds.empty()) throw ConfigError("evaluation needs at least one seed");
  if (opt.episodes_per_seed < 1)
    throw ConfigError("episodes_per_seed must be >= 1");

  EpisodeConfig cfg = scenario;
  if (opt.controller == "pss_only" && cfg.pss_generators.empty())
    cfg.pss_generators = cfg.controlled_generators;

  Environment env(cfg);
  if (opt.controller == "rl") {
    if (!opt.agent) throw ConfigError("rl evaluation needs a loaded checkpoint");
    if (opt.agent->config().obs_dim != env.obs_dim() ||
        opt.agent->config().action_dim != env.action_dim())
      throw ConfigError(
          "checkpoint dimensions do not match the case: checkpoint " +
          std::to_string(opt.agent->config().obs_dim) + "/" +
          std::to_string(opt.agent->config().action_dim) + ", case " +
          std::to_string(env.obs_dim()) + "/" + std::to_string(env.action_dim()));
  }

  const double clear_time =
      (cfg.fault_bus >= 0 && cfg.fault_time >= 0.0)
          ? cfg.fault_time + cfg.fault_duration
          : 0.0;

  EvalRunResult out;
  if (opt.write_traces && !opt.out_dir.empty())
    std::filesystem::create_directories(opt.out_dir);

  for (std::uint64_t seed : opt.seeds) {
    for (int k = 0; k < opt.episodes_per_seed; ++k) {
      Observation obs = env.reset(mix_seed(seed, static_cast<std::uint64_t>(k)));

      std::vector<Pid> pids;
      if (opt.controller == "pid")
        for (std::size_t i = 0; i < cfg.controlled_generators.size(); ++i)
          pids.emplace_back(opt.pid_gains, cfg.weights.v, cfg.weights.u);

      Trace tr;
      tr.t.push_back(env.time());
      tr.omega.push_back(env.state().omega);

      Eigen::VectorXd action = Eigen::VectorXd::Zero(env.action_dim());
      bool sync_lost = false;
      while (!env.episode_done()) {
        if (opt.controller == "rl") {
          action = obs.valid ? opt.agent->select_action(obs.flat(), 0, false)
                             : Eigen::VectorXd::Zero(env.action_dim());
        } else if (opt.controller == "pid") {
          if (env.has_delivery()) {
            const MeasurementPayload& m = env.delivered();
            for (std::size_t p = 0; p < pids.size(); ++p) {
              int g = cfg.controlled_generators[p];
              action[static_cast<Eigen::Index>(p)] =
                  pids[p].step(1.0 - m.omega[g], cfg.dt_control);
            }
          } else {
            action.setZero();
          }
        } else {
          action.setZero();
        }
        StepResult sr = env.step(action);
        if (sr.info.sync_lost) sync_lost = true;
        tr.t.push_back(env.time());
        tr.omega.push_back(env.state().omega);
        obs = sr.observation;
      }

      EvalRecord rec = summarize_episode(tr, clear_time, sync_lost);
      rec.scenario = opt.scenario_label;
      rec.channel = cfg.channel.channel_label;
      rec.controller = opt.controller;
      rec.seed = seed;
      out.records.push_back(rec);

      if (opt.write_traces && !opt.out_dir.empty()) {
        std::string chan = cfg.channel.channel_label;
        for (char& c : chan)
          if (c == ':') c = '-';  // channel specs like constant:0.25
        std::filesystem::path dir =
            std::filesystem::path(opt.out_dir) / chan / opt.controller;
        std::filesystem::create_directories(dir);
        std::string path =
            (dir / ("seed" + std::to_string(seed) + "_ep" + std::to_string(k) +
                    ".csv")).string();
        write_trace(path, tr);
        out.trace_paths.push_back(path);
      }
    }
  }
  return out;
}

}  // namespace lfo
