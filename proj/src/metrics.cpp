#include "lfo/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lfo/util.hpp"

namespace lfo {

double success_rate(const std::vector<EpisodeRecord>& records, int window) {
  if (window < 1) throw ConfigError("success-rate window must be >= 1");
  if (static_cast<std::size_t>(window) > records.size())
    throw ConfigError("success-rate window exceeds the record count");
  int hits = 0;
  for (std::size_t i = records.size() - window; i < records.size(); ++i)
    hits += records[i].success ? 1 : 0;
  return static_cast<double>(hits) / window;
}

std::vector<double> smoothed_success_rate(
    const std::vector<EpisodeRecord>& records, int window) {
  if (window < 1) throw ConfigError("smoothing window must be >= 1");
  std::vector<double> out(records.size());
  int hits = 0;
  for (std::size_t e = 0; e < records.size(); ++e) {
    hits += records[e].success ? 1 : 0;
    if (e >= static_cast<std::size_t>(window))
      hits -= records[e - window].success ? 1 : 0;
    int denom = std::min<int>(static_cast<int>(e) + 1, window);
    out[e] = static_cast<double>(hits) / denom;
  }
  return out;
}

std::vector<double> moving_average_return(
    const std::vector<EpisodeRecord>& records, int window) {
  if (window < 1) throw ConfigError("averaging window must be >= 1");
  std::vector<double> out(records.size());
  for (std::size_t e = 0; e < records.size(); ++e) {
    std::size_t lo = e + 1 >= static_cast<std::size_t>(window)
                         ? e + 1 - window
                         : 0;
    double sum = 0;
    for (std::size_t i = lo; i <= e; ++i) sum += records[i].ret;
    out[e] = sum / static_cast<double>(e - lo + 1);
  }
  return out;
}

SpeedSummary mean_overall_speed(const std::vector<EpisodeRecord>& records,
                                double success_threshold,
                                int smoothing_window) {
  if (records.size() < 2)
    throw ConfigError("learning speed needs at least two episodes");
  std::vector<double> rate = smoothed_success_rate(records, smoothing_window);

  SpeedSummary out;
  double total = 0, vmax = 0;
  for (std::size_t e = 1; e < rate.size(); ++e) {
    double v = rate[e] - rate[e - 1];
    total += v;
    vmax = std::max(vmax, v);
  }
  out.mean_overall_speed = vmax > 0 ? total / vmax : 0.0;
  for (std::size_t e = 0; e < rate.size(); ++e) {
    if (rate[e] >= success_threshold) {
      out.episodes_to_threshold = static_cast<int>(e);
      break;
    }
  }
  return out;
}

namespace {

double max_deviation(const Eigen::VectorXd& omega) {
  return (omega.array() - 1.0).abs().maxCoeff();
}

double sum_sq_deviation(const Eigen::VectorXd& omega) {
  return (omega.array() - 1.0).square().sum();
}

}  // namespace

DampingReport damping_report(const std::vector<double>& t,
                             const std::vector<Eigen::VectorXd>& omega,
                             double clear_time, double threshold,
                             double tail_window) {
  if (t.size() != omega.size())
    throw ConfigError("trace time and speed sample counts differ");
  if (t.size() < 2) throw ConfigError("trace needs at least two samples");
  if (threshold <= 0) throw ConfigError("settling threshold must be positive");
  if (tail_window <= 0) throw ConfigError("tail window must be positive");
  for (std::size_t k = 0; k + 1 < t.size(); ++k)
    if (!(t[k] < t[k + 1]))
      throw ConfigError("trace times must be strictly increasing");
  if (t.back() - t.front() < tail_window)
    throw ConfigError("trace is shorter than the tail window");
  if (clear_time > t.back())
    throw ConfigError("trace ends before the clearing time");
  const Eigen::Index gens = omega.front().size();
  if (gens < 1) throw ConfigError("trace has no generators");
  for (const Eigen::VectorXd& w : omega)
    if (w.size() != gens)
      throw ConfigError("trace speed dimensions are inconsistent");

  DampingReport rep;
  for (const Eigen::VectorXd& w : omega)
    rep.peak_deviation = std::max(rep.peak_deviation, max_deviation(w));

  // last sample at or past the clearing time that still exceeds the band
  std::ptrdiff_t last_exceed = -1;
  for (std::size_t k = 0; k < t.size(); ++k)
    if (t[k] >= clear_time && max_deviation(omega[k]) >= threshold)
      last_exceed = static_cast<std::ptrdiff_t>(k);
  if (last_exceed < 0) {
    rep.settling_time = clear_time;
    rep.settled = true;
  } else if (last_exceed + 2 >= static_cast<std::ptrdiff_t>(t.size())) {
    // still exceeding at (or one sample before) the end of the trace
    rep.settling_time = t.back();
    rep.settled = false;
  } else {
    rep.settling_time = t[last_exceed + 1];
    rep.settled = true;
  }

  // trapezoid over the final window, with the first segment interpolated
  // when the window boundary falls between samples
  double start = t.back() - tail_window;
  std::size_t j = 0;
  while (t[j] < start) ++j;
  double energy = 0;
  if (j > 0 && t[j] > start) {
    double f0 = sum_sq_deviation(omega[j - 1]);
    double f1 = sum_sq_deviation(omega[j]);
    double frac = (start - t[j - 1]) / (t[j] - t[j - 1]);
    double fs = f0 + frac * (f1 - f0);
    energy += 0.5 * (fs + f1) * (t[j] - start);
  }
  for (std::size_t k = j; k + 1 < t.size(); ++k)
    energy += 0.5 *
              (sum_sq_deviation(omega[k]) + sum_sq_deviation(omega[k + 1])) *
              (t[k + 1] - t[k]);
  rep.tail_energy = energy;
  return rep;
}

// ---------------------------------------------------------------------------
// CSV persistence

namespace {

constexpr const char* kTrainingHeader =
    "episode,return,success,initial_q,wall_time_s";
constexpr const char* kEvalHeader =
    "scenario,channel,controller,seed,success,peak_dev_pu,settling_s,"
    "tail_energy";

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

std::vector<std::string> read_lines(const std::string& path,
                                    const char* header) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (lines.empty() || lines.front() != header)
    throw ConfigError("unexpected header in " + path);
  lines.erase(lines.begin());
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

long parse_int(const std::string& s, const char* what) {
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError(std::string("bad integer for ") + what + ": '" + s +
                      "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError(std::string("bad integer for ") + what + ": '" + s +
                      "'");
  return v;
}

bool parse_flag(const std::string& s, const char* what) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw ConfigError(std::string("bad flag for ") + what + ": '" + s + "'");
}

void check_field_text(const std::string& s, const char* what) {
  if (s.empty() || s.find(',') != std::string::npos ||
      s.find('\n') != std::string::npos)
    throw ConfigError(std::string(what) + " must be non-empty without commas");
}

}  // namespace

void write_training_log(const std::string& path,
                        const std::vector<EpisodeRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out << kTrainingHeader << '\n';
  for (const EpisodeRecord& r : records) {
    out << r.episode << ',' << fmt_double(r.ret) << ','
        << (r.success ? '1' : '0') << ',' << fmt_double(r.initial_q) << ','
        << fmt_double(r.wall_time_s) << '\n';
  }
  if (!out) throw ConfigError("short write on " + path);
}

std::vector<EpisodeRecord> read_training_log(const std::string& path) {
  std::vector<EpisodeRecord> records;
  for (const std::string& line : read_lines(path, kTrainingHeader)) {
    std::vector<std::string> f = split_line(line);
    if (f.size() != 5)
      throw ConfigError("bad training log row: '" + line + "'");
    EpisodeRecord r;
    r.episode = static_cast<int>(parse_int(f[0], "episode"));
    r.ret = parse_double(f[1], "return");
    r.success = parse_flag(f[2], "success");
    r.initial_q = parse_double(f[3], "initial_q");
    r.wall_time_s = parse_double(f[4], "wall_time_s");
    if (r.episode != static_cast<int>(records.size()))
      throw ConfigError("training log episodes are not contiguous from 0");
    records.push_back(r);
  }
  return records;
}

void write_eval_report(const std::string& path,
                       const std::vector<EvalRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out << kEvalHeader << '\n';
  for (const EvalRecord& r : records) {
    check_field_text(r.scenario, "scenario");
    check_field_text(r.channel, "channel");
    check_field_text(r.controller, "controller");
    out << r.scenario << ',' << r.channel << ',' << r.controller << ','
        << r.seed << ',' << (r.success ? '1' : '0') << ','
        << fmt_double(r.peak_dev_pu) << ',' << fmt_double(r.settling_s) << ','
        << fmt_double(r.tail_energy) << '\n';
  }
  if (!out) throw ConfigError("short write on " + path);
}

std::vector<EvalRecord> read_eval_report(const std::string& path) {
  std::vector<EvalRecord> records;
  for (const std::string& line : read_lines(path, kEvalHeader)) {
    std::vector<std::string> f = split_line(line);
    if (f.size() != 8)
      throw ConfigError("bad eval report row: '" + line + "'");
    EvalRecord r;
    r.scenario = f[0];
    r.channel = f[1];
    r.controller = f[2];
    r.seed = parse_u64(f[3], "seed");
    r.success = parse_flag(f[4], "success");
    r.peak_dev_pu = parse_double(f[5], "peak_dev_pu");
    r.settling_s = parse_double(f[6], "settling_s");
    r.tail_energy = parse_double(f[7], "tail_energy");
    records.push_back(r);
  }
  return records;
}

}  // namespace lfo
