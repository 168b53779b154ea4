#include "lfo/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "lfo/admittance.hpp"
#include "lfo/baselines.hpp"
#include "lfo/errors.hpp"
#include "lfo/metrics.hpp"
#include "lfo/power_flow.hpp"
#include "lfo/trainer.hpp"
#include "lfo/util.hpp"

namespace lfo {

namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  return f;
}

std::string num4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::vector<std::string> split_comma(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

struct Table {
  std::vector<std::string> names;
  std::vector<std::vector<double>> cols;
  std::size_t rows = 0;
};

Table read_csv_table(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "'");
  Table tab;
  std::string line;
  if (!std::getline(f, line)) throw ConfigError("empty csv '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  tab.names = split_comma(line);
  tab.cols.resize(tab.names.size());
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_comma(line);
    if (cells.size() != tab.names.size())
      throw ConfigError("ragged row in '" + path + "'");
    for (std::size_t i = 0; i < cells.size(); ++i)
      tab.cols[i].push_back(parse_double(cells[i], tab.names[i].c_str()));
    ++tab.rows;
  }
  if (tab.rows == 0) throw ConfigError("csv '" + path + "' has no data rows");
  return tab;
}

// seed-run discovery: a training_log.csv directly, or seed*/training_log.csv
std::vector<std::pair<std::string, std::string>> find_training_logs(
    const std::string& input) {
  std::vector<std::pair<std::string, std::string>> logs;  // (suffix, path)
  if (fs::is_regular_file(input)) {
    logs.emplace_back("", input);
    return logs;
  }
  if (!fs::is_directory(input))
    throw ConfigError("no such file or directory '" + input + "'");
  if (fs::is_regular_file(fs::path(input) / "training_log.csv")) {
    logs.emplace_back("", (fs::path(input) / "training_log.csv").string());
    return logs;
  }
  std::vector<std::pair<long long, std::string>> found;  // (seed, name)
  for (const auto& e : fs::directory_iterator(input)) {
    if (!e.is_directory()) continue;
    std::string name = e.path().filename().string();
    if (name.rfind("seed", 0) != 0) continue;
    if (!fs::is_regular_file(e.path() / "training_log.csv")) continue;
    long long n = -1;
    try {
      n = std::stoll(name.substr(4));
    } catch (const std::exception&) {
    }
    found.emplace_back(n, name);
  }
  std::sort(found.begin(), found.end());
  for (const auto& [n, name] : found)
    logs.emplace_back("_" + name,
                      (fs::path(input) / name / "training_log.csv").string());
  if (logs.empty())
    throw ConfigError("no training_log.csv found under '" + input + "'");
  return logs;
}

std::string esc_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

}  // namespace

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series) {
  if (series.empty()) throw ConfigError("svg chart needs at least one series");
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool first = true;
  for (const Series& s : series) {
    if (s.x.size() != s.y.size())
      throw ConfigError("svg series '" + s.name + "' has mismatched x/y sizes");
    if (s.x.empty())
      throw ConfigError("svg series '" + s.name + "' is empty");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
        throw ConfigError("svg series '" + s.name + "' has non-finite values");
      if (first) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        first = false;
      } else {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, s.y[i]);
        ymax = std::max(ymax, s.y[i]);
      }
    }
  }
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }

  const double px0 = 70, px1 = 640, py0 = 470, py1 = 56;
  auto px = [&](double x) {
    return px0 + (x - xmin) / (xmax - xmin) * (px1 - px0);
  };
  auto py = [&](double y) {
    return py0 + (y - ymin) / (ymax - ymin) * (py1 - py0);
  };
  auto p2 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  static const char* kPalette[6] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#ff7f0e", "#9467bd", "#8c564b"};

  std::ofstream f = open_out(path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"860\" height=\"520\" "
       "viewBox=\"0 0 860 520\">\n";
  f << "<rect width=\"860\" height=\"520\" fill=\"#ffffff\"/>\n";
  f << "<text x=\"355\" y=\"30\" font-family=\"sans-serif\" font-size=\"16\" "
       "text-anchor=\"middle\">"
    << esc_xml(title) << "</text>\n";
  // grid and tick labels
  for (int i = 0; i <= 4; ++i) {
    double xv = xmin + (xmax - xmin) * i / 4.0;
    double yv = ymin + (ymax - ymin) * i / 4.0;
    f << "<line x1=\"" << p2(px(xv)) << "\" y1=\"" << p2(py0) << "\" x2=\""
      << p2(px(xv)) << "\" y2=\"" << p2(py1)
      << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    f << "<line x1=\"" << p2(px0) << "\" y1=\"" << p2(py(yv)) << "\" x2=\""
      << p2(px1) << "\" y2=\"" << p2(py(yv))
      << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    f << "<text x=\"" << p2(px(xv))
      << "\" y=\"490\" font-family=\"sans-serif\" font-size=\"11\" "
         "text-anchor=\"middle\">"
      << esc_xml(num4(xv)) << "</text>\n";
    f << "<text x=\"62\" y=\"" << p2(py(yv) + 4)
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
      << esc_xml(num4(yv)) << "</text>\n";
  }
  f << "<line x1=\"" << p2(px0) << "\" y1=\"" << p2(py0) << "\" x2=\"" << p2(px1)
    << "\" y2=\"" << p2(py0) << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  f << "<line x1=\"" << p2(px0) << "\" y1=\"" << p2(py0) << "\" x2=\"" << p2(px0)
    << "\" y2=\"" << p2(py1) << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  f << "<text x=\"355\" y=\"512\" font-family=\"sans-serif\" font-size=\"13\" "
       "text-anchor=\"middle\">"
    << esc_xml(x_label) << "</text>\n";
  f << "<text x=\"20\" y=\"263\" font-family=\"sans-serif\" font-size=\"13\" "
       "text-anchor=\"middle\" transform=\"rotate(-90 20 263)\">"
    << esc_xml(y_label) << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    const char* color = kPalette[si % 6];
    f << "<polyline fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) f << ' ';
      f << p2(px(s.x[i])) << ',' << p2(py(s.y[i]));
    }
    f << "\"/>\n";
    double ly = 70 + 24 * static_cast<double>(si);
    f << "<line x1=\"656\" y1=\"" << p2(ly) << "\" x2=\"684\" y2=\"" << p2(ly)
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    f << "<text x=\"690\" y=\"" << p2(ly + 4)
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << esc_xml(s.name)
      << "</text>\n";
  }
  f << "</svg>\n";
}

int cmd_powerflow(const ExperimentConfig& ec, std::ostream& out) {
  GridCase gc = load_grid_case(ec.scenario.case_path);
  auto t0 = std::chrono::steady_clock::now();
  PowerFlowSolution sol = solve_power_flow(gc);
  double ms = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - t0)
                  .count();

  out << "case " << ec.scenario.case_path << ": " << gc.buses.size()
      << " buses, " << gc.lines.size() << " lines, " << gc.generators.size()
      << " generators\n";
  out << "converged in " << sol.iterations << " iterations, max mismatch "
      << num4(sol.mismatch_norm) << " pu, " << num4(ms) << " ms\n";

  double load_mw = 0.0;
  for (const Bus& b : gc.buses) load_mw += b.p_load;
  out << "total load " << num4(load_mw) << " MW, losses "
      << num4(sol.p_inj.sum() * gc.system_base) << " MW\n";

  // corridor summary: from-end MW aggregated over parallel circuits
  std::map<std::pair<int, int>, double> corridor;
  std::vector<LineFlow> flows;
  for (const Line& ln : gc.lines) {
    LineFlow lf = line_flow(ln, sol.voltage(gc.bus_index(ln.from_bus)),
                            sol.voltage(gc.bus_index(ln.to_bus)));
    flows.push_back(lf);
    corridor[{ln.from_bus, ln.to_bus}] += lf.p_from * gc.system_base;
  }
  for (const auto& [k, mw] : corridor)
    out << "  " << k.first << " -> " << k.second << ": " << num4(mw) << " MW\n";

  fs::create_directories(ec.out_dir);
  {
    std::ofstream f = open_out(ec.out_dir + "/bus_solution.csv");
    f << "bus,v_pu,angle_rad,p_inj_mw,q_inj_mvar\n";
    for (std::size_t i = 0; i < gc.buses.size(); ++i) {
      f << gc.buses[i].id << ',' << fmt_double(sol.v_mag[static_cast<int>(i)])
        << ',' << fmt_double(sol.v_angle[static_cast<int>(i)]) << ','
        << fmt_double(sol.p_inj[static_cast<int>(i)] * gc.system_base) << ','
        << fmt_double(sol.q_inj[static_cast<int>(i)] * gc.system_base) << '\n';
    }
  }
  {
    std::ofstream f = open_out(ec.out_dir + "/line_flows.csv");
    f << "from_bus,to_bus,p_from_mw,q_from_mvar,p_to_mw,q_to_mvar,p_loss_mw\n";
    for (std::size_t i = 0; i < gc.lines.size(); ++i) {
      const Line& ln = gc.lines[i];
      const LineFlow& lf = flows[i];
      f << ln.from_bus << ',' << ln.to_bus << ','
        << fmt_double(lf.p_from * gc.system_base) << ','
        << fmt_double(lf.q_from * gc.system_base) << ','
        << fmt_double(lf.p_to * gc.system_base) << ','
        << fmt_double(lf.q_to * gc.system_base) << ','
        << fmt_double((lf.p_from + lf.p_to) * gc.system_base) << '\n';
    }
  }
  out << "wrote " << ec.out_dir << "/bus_solution.csv, " << ec.out_dir
      << "/line_flows.csv\n";
  return 0;
}

int cmd_train(const ExperimentConfig& ec, std::ostream& out) {
  if (ec.controller != "rl")
    throw ConfigError("train requires controller = rl (got '" + ec.controller +
                      "')");
  fs::create_directories(ec.out_dir);
  TrainOptions opt;
  opt.episodes = ec.episodes;
  opt.checkpoint_every = ec.checkpoint_every;
  opt.success_window = ec.success_window;
  opt.updates = ec.updates;
  opt.out_dir = ec.out_dir;
  std::vector<TrainResult> results =
      train_seeds(ec.scenario, ec.agent, ec.seeds, opt, 0);

  std::vector<const TrainResult*> rows;
  for (const TrainResult& r : results) rows.push_back(&r);
  std::sort(rows.begin(), rows.end(),
            [](const TrainResult* a, const TrainResult* b) {
              return a->seed < b->seed;
            });
  for (const TrainResult* r : rows) {
    out << "seed " << r->seed << ": episodes=" << r->log.size()
        << " trailing_success=" << num4(r->trailing_success)
        << " first_block_return=" << num4(r->first_block_return)
        << " final_block_return=" << num4(r->final_block_return) << '\n';
  }
  out << "summary: " << ec.out_dir << "/train_summary.csv\n";
  return 0;
}

int cmd_eval(const ExperimentConfig& ec, std::ostream& out) {
  fs::create_directories(ec.out_dir);

  std::vector<GaussianMixtureDelay> models;
  if (ec.eval_channels.empty()) {
    models.push_back(ec.scenario.channel);
  } else {
    for (const std::string& spec : ec.eval_channels)
      models.push_back(parse_channel_spec(spec));
  }

  std::optional<DdpgAgent> agent;
  PidGains gains = ec.pid_gains;
  if (ec.controller == "rl") {
    if (ec.checkpoint_path.empty())
      throw ConfigError(
          "rl evaluation needs eval.checkpoint (config key or --set)");
    agent.emplace(DdpgAgent::load(ec.checkpoint_path));
  } else if (ec.controller == "pid" && !ec.pid_fixed) {
    PidTuneResult tr = tune_pid(ec.scenario, ec.kp_grid, ec.ki_grid, ec.kd_grid);
    gains = tr.best;
    out << "tuned pid gains: kp=" << num4(gains.kp) << " ki=" << num4(gains.ki)
        << " kd=" << num4(gains.kd) << " (score " << num4(tr.best_score)
        << ", open loop " << num4(tr.open_loop_score) << ")\n";
  }

  std::vector<EvalRecord> all;
  const std::string label = scenario_label(ec.scenario);
  for (const GaussianMixtureDelay& model : models) {
    EpisodeConfig sc = ec.scenario;
    sc.channel = model;
    EvalOptions eo;
    eo.seeds = ec.eval_seeds;
    eo.episodes_per_seed = ec.eval_episodes;
    eo.scenario_label = label;
    eo.controller = ec.controller;
    eo.agent = agent ? &*agent : nullptr;
    eo.pid_gains = gains;
    eo.out_dir = ec.out_dir + "/traces";
    eo.write_traces = ec.eval_traces;
    EvalRunResult r = evaluate_controller(sc, eo);

    int ok = 0;
    double tail = 0.0;
    for (const EvalRecord& rec : r.records) {
      ok += rec.success ? 1 : 0;
      tail += rec.tail_energy;
    }
    out << "channel " << model.channel_label << ": success " << ok << "/"
        << r.records.size() << ", mean tail_energy "
        << num4(tail / static_cast<double>(r.records.size())) << '\n';
    all.insert(all.end(), r.records.begin(), r.records.end());
  }

  std::stable_sort(all.begin(), all.end(),
                   [](const EvalRecord& a, const EvalRecord& b) {
                     return std::tie(a.scenario, a.channel, a.controller,
                                     a.seed) <
                            std::tie(b.scenario, b.channel, b.controller,
                                     b.seed);
                   });
  write_eval_report(ec.out_dir + "/eval_report.csv", all);
  out << "report: " << ec.out_dir << "/eval_report.csv\n";
  return 0;
}

int cmd_sweep(const KeyValueConfig& kv, std::ostream& out) {
  ExperimentConfig base = build_experiment_config(kv);
  if (base.sweep_axes.empty())
    throw ConfigError("sweep needs at least one sweep.<key> = v1,v2,... axis");

  std::size_t total = 1;
  for (const SweepAxis& ax : base.sweep_axes) {
    total *= ax.values.size();
    if (total > 4096) throw ConfigError("sweep grid exceeds 4096 points");
  }

  struct PointResult {
    std::string params;
    double success = 0.0;
    double ret = 0.0;
  };
  std::vector<PointResult> res(total);
  std::vector<std::exception_ptr> errs(total);

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t idx = next.fetch_add(1); idx < total;
         idx = next.fetch_add(1)) {
      try {
        KeyValueConfig kv2 = kv;
        std::string params;
        std::size_t rem = idx;
        for (const SweepAxis& ax : base.sweep_axes) {
          const std::string& val = ax.values[rem % ax.values.size()];
          rem /= ax.values.size();
          kv2.set(ax.key, val);
          if (!params.empty()) params += ';';
          params += ax.key + "=" + val;
        }
        ExperimentConfig ec = build_experiment_config(kv2);
        TrainOptions opt;
        opt.episodes = base.sweep_episodes > 0 ? base.sweep_episodes : ec.episodes;
        opt.checkpoint_every = ec.checkpoint_every;
        opt.success_window = ec.success_window;
        opt.updates = ec.updates;
        std::vector<TrainResult> rs =
            train_seeds(ec.scenario, ec.agent, ec.seeds, opt, 1);
        double succ = 0.0, ret = 0.0;
        for (const TrainResult& r : rs) {
          succ += r.trailing_success;
          ret += r.final_block_return;
        }
        res[idx] = {params, succ / static_cast<double>(rs.size()),
                    ret / static_cast<double>(rs.size())};
      } catch (...) {
        errs[idx] = std::current_exception();
      }
    }
  };

  int workers = std::min<int>(worker_cap(), static_cast<int>(total));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& th : pool) th.join();
  }
  for (const std::exception_ptr& ep : errs)
    if (ep) std::rethrow_exception(ep);

  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (res[a].success != res[b].success) return res[a].success > res[b].success;
    if (res[a].ret != res[b].ret) return res[a].ret > res[b].ret;
    return res[a].params < res[b].params;
  });

  fs::create_directories(base.out_dir);
  {
    std::ofstream f = open_out(base.out_dir + "/sweep_results.csv");
    f << "rank,params,mean_trailing_success,mean_final_return\n";
    for (std::size_t r = 0; r < order.size(); ++r) {
      const PointResult& p = res[order[r]];
      f << (r + 1) << ',' << p.params << ',' << fmt_double(p.success) << ','
        << fmt_double(p.ret) << '\n';
    }
  }
  {
    const PointResult& best = res[order[0]];
    std::ofstream f = open_out(base.out_dir + "/best_config.conf");
    f << "# selected by sweep: " << best.params << "\n";
    std::string params = best.params;
    std::size_t pos = 0;
    while (pos < params.size()) {
      std::size_t semi = params.find(';', pos);
      std::string kvpair = params.substr(
          pos, semi == std::string::npos ? std::string::npos : semi - pos);
      std::size_t eq = kvpair.find('=');
      f << kvpair.substr(0, eq) << " = " << kvpair.substr(eq + 1) << "\n";
      if (semi == std::string::npos) break;
      pos = semi + 1;
    }
  }
  out << "best: " << res[order[0]].params << " (trailing_success "
      << num4(res[order[0]].success) << ", final_return "
      << num4(res[order[0]].ret) << ")\n";
  out << "wrote " << base.out_dir << "/sweep_results.csv, " << base.out_dir
      << "/best_config.conf\n";
  return 0;
}

namespace {

void emit_learning_curves(const ExperimentConfig& ec, std::ostream& out) {
  auto logs = find_training_logs(ec.plot_learning_curve);
  for (const auto& [suffix, path] : logs) {
    std::vector<EpisodeRecord> records = read_training_log(path);
    std::vector<double> ma = moving_average_return(records, 5);
    std::string csv = ec.out_dir + "/learning_curve" + suffix + ".csv";
    {
      std::ofstream f = open_out(csv);
      f << "episode,return,moving_avg,initial_q\n";
      for (std::size_t i = 0; i < records.size(); ++i) {
        f << records[i].episode << ',' << fmt_double(records[i].ret) << ','
          << fmt_double(ma[i]) << ',' << fmt_double(records[i].initial_q)
          << '\n';
      }
    }
    out << "wrote " << csv << '\n';
    if (ec.plot_svg) {
      Series ret{"return", {}, {}}, avg{"moving_avg", {}, {}},
          q0{"initial_q", {}, {}};
      for (std::size_t i = 0; i < records.size(); ++i) {
        double e = static_cast<double>(records[i].episode);
        ret.x.push_back(e);
        ret.y.push_back(records[i].ret);
        avg.x.push_back(e);
        avg.y.push_back(ma[i]);
        q0.x.push_back(e);
        q0.y.push_back(records[i].initial_q);
      }
      std::string svg = ec.out_dir + "/learning_curve" + suffix + ".svg";
      write_svg_chart(svg, "learning curve" + suffix, "episode", "return",
                      {ret, avg, q0});
      out << "wrote " << svg << '\n';
    }
  }
}

void emit_channel_comparison(const ExperimentConfig& ec, std::ostream& out) {
  if (!fs::is_directory(ec.plot_channel_traces))
    throw ConfigError("plots.channel_traces: no such directory '" +
                      ec.plot_channel_traces + "'");
  std::vector<std::string> channels;
  for (const auto& e : fs::directory_iterator(ec.plot_channel_traces))
    if (e.is_directory()) channels.push_back(e.path().filename().string());
  std::sort(channels.begin(), channels.end());
  if (channels.empty())
    throw ConfigError("no channel trace directories under '" +
                      ec.plot_channel_traces + "'");

  for (const std::string& chan : channels) {
    fs::path cdir = fs::path(ec.plot_channel_traces) / chan;
    std::vector<std::string> controllers;
    for (const auto& e : fs::directory_iterator(cdir))
      if (e.is_directory()) controllers.push_back(e.path().filename().string());
    std::sort(controllers.begin(), controllers.end());
    if (controllers.empty()) continue;

    std::vector<std::pair<std::string, Table>> traces;
    for (const std::string& ctrl : controllers) {
      std::vector<std::string> files;
      for (const auto& e : fs::directory_iterator(cdir / ctrl))
        if (e.is_regular_file() && e.path().extension() == ".csv")
          files.push_back(e.path().string());
      std::sort(files.begin(), files.end());
      if (files.empty()) continue;
      Table tab = read_csv_table(files.front());
      if (tab.names.size() < 2 || tab.names[0] != "t")
        throw ConfigError("trace '" + files.front() +
                          "' lacks a t column plus speeds");
      traces.emplace_back(ctrl, std::move(tab));
    }
    if (traces.empty()) continue;

    std::size_t n = traces.front().second.rows;
    for (const auto& [ctrl, tab] : traces) n = std::min(n, tab.rows);

    std::string csv = ec.out_dir + "/channel_" + chan + ".csv";
    {
      std::ofstream f = open_out(csv);
      f << 't';
      for (const auto& [ctrl, tab] : traces) f << ',' << ctrl << "_omega";
      f << '\n';
      const std::vector<double>& t = traces.front().second.cols[0];
      for (std::size_t i = 0; i < n; ++i) {
        f << fmt_double(t[i]);
        for (const auto& [ctrl, tab] : traces)
          f << ',' << fmt_double(tab.cols[1][i]);
        f << '\n';
      }
    }
    out << "wrote " << csv << '\n';
    if (ec.plot_svg) {
      std::vector<Series> series;
      const std::vector<double>& t = traces.front().second.cols[0];
      for (const auto& [ctrl, tab] : traces) {
        Series s{ctrl, {}, {}};
        for (std::size_t i = 0; i < n; ++i) {
          s.x.push_back(t[i]);
          s.y.push_back(tab.cols[1][i]);
        }
        series.push_back(std::move(s));
      }
      std::string svg = ec.out_dir + "/channel_" + chan + ".svg";
      write_svg_chart(svg, "channel " + chan, "t (s)", "omega (pu)", series);
      out << "wrote " << svg << '\n';
    }
  }
}

void emit_speed_comparison(const ExperimentConfig& ec, std::ostream& out) {
  auto mean_smoothed = [&](const std::string& root) {
    auto logs = find_training_logs(root);
    std::vector<std::vector<double>> per_seed;
    std::size_t n = SIZE_MAX;
    for (const auto& [suffix, path] : logs) {
      std::vector<EpisodeRecord> records = read_training_log(path);
      per_seed.push_back(smoothed_success_rate(records, ec.success_window));
      n = std::min(n, per_seed.back().size());
    }
    std::vector<double> mean(n, 0.0);
    for (const std::vector<double>& v : per_seed)
      for (std::size_t i = 0; i < n; ++i) mean[i] += v[i];
    for (double& m : mean) m /= static_cast<double>(per_seed.size());
    return mean;
  };

  std::vector<double> cs = mean_smoothed(ec.plot_speed_pair[0]);
  std::vector<double> vs = mean_smoothed(ec.plot_speed_pair[1]);
  std::size_t n = std::min(cs.size(), vs.size());
  std::string csv = ec.out_dir + "/learning_speed.csv";
  {
    std::ofstream f = open_out(csv);
    f << "episode,constant_smoothed_success,variable_smoothed_success\n";
    for (std::size_t i = 0; i < n; ++i)
      f << i << ',' << fmt_double(cs[i]) << ',' << fmt_double(vs[i]) << '\n';
  }
  out << "wrote " << csv << '\n';
  if (ec.plot_svg) {
    Series c{"constant", {}, {}}, v{"variable", {}, {}};
    for (std::size_t i = 0; i < n; ++i) {
      double e = static_cast<double>(i);
      c.x.push_back(e);
      c.y.push_back(cs[i]);
      v.x.push_back(e);
      v.y.push_back(vs[i]);
    }
    std::string svg = ec.out_dir + "/learning_speed.svg";
    write_svg_chart(svg, "learning speed", "episode", "smoothed success rate",
                    {c, v});
    out << "wrote " << svg << '\n';
  }
}

}  // namespace

int cmd_plotdata(const ExperimentConfig& ec, std::ostream& out) {
  if (ec.plot_learning_curve.empty() && ec.plot_channel_traces.empty() &&
      ec.plot_speed_pair.empty())
    throw ConfigError(
        "plotdata needs plots.learning_curve, plots.channel_traces, or "
        "plots.speed_pair");
  fs::create_directories(ec.out_dir);
  if (!ec.plot_learning_curve.empty()) emit_learning_curves(ec, out);
  if (!ec.plot_channel_traces.empty()) emit_channel_comparison(ec, out);
  if (ec.plot_speed_pair.size() == 2) emit_speed_comparison(ec, out);
  return 0;
}

}  // namespace lfo
