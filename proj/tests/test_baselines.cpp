#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lfo/baselines.hpp"
#include "lfo/environment.hpp"

using namespace lfo;

namespace {

EpisodeConfig kundur_cfg() {
  EpisodeConfig cfg;
  cfg.case_path = std::string(LFO_SOURCE_DATA_DIR) + "/kundur_2area.json";
  cfg.channel = constant_delay(0.0);
  cfg.monitored_bus_pairs = {{7, 9}};
  cfg.controlled_generators = {0, 1, 2, 3};
  return cfg;
}

}  // namespace

TEST_CASE("pid is quiet on zero error") {
  Pid pid(PidGains{3.0, 2.0, 1.0});
  for (int k = 0; k < 20; ++k) CHECK(pid.step(0.0, 0.05) == 0.0);
}

TEST_CASE("pid proportional path") {
  // 10 * 0.015625 is exact in binary, so the output is too
  Pid pid(PidGains{10.0, 0.0, 0.0});
  CHECK(pid.step(0.015625, 0.05) == 0.15625);
  CHECK(pid.step(0.015625, 0.05) == 0.15625);
}

TEST_CASE("pid integrator ramps and freezes at the output limit") {
  // every intermediate value is a small multiple of a power of two,
  // so the whole table can be checked exactly
  Pid pid(PidGains{0.0, 0.25, 0.0});
  const double dt = 0.125;
  CHECK(pid.step(1.0, dt) == 0.03125);
  CHECK(pid.step(1.0, dt) == 0.0625);
  CHECK(pid.step(1.0, dt) == 0.09375);
  CHECK(pid.step(1.0, dt) == 0.125);
  CHECK(pid.step(1.0, dt) == 0.15625);
  CHECK(pid.step(1.0, dt) == 0.1875);
  // integral would reach 0.875 giving 0.21875: clamped, state frozen at 0.75
  CHECK(pid.step(1.0, dt) == 0.2);
  CHECK(pid.step(1.0, dt) == 0.2);
  // on reversal the integrator resumes from 0.75, not from a wound-up value
  CHECK(pid.step(-1.0, dt) == 0.15625);
}

TEST_CASE("pid derivative acts on the error change") {
  Pid pid(PidGains{0.0, 0.0, 0.5}, -10.0, 10.0);
  CHECK(pid.step(0.25, 0.125) == 0.0);  // no history on the first sample
  CHECK(pid.step(0.5, 0.125) == 1.0);   // 0.5 * (0.25 / 0.125)
  CHECK(pid.step(0.5, 0.125) == 0.0);
}

TEST_CASE("pid output never leaves its limits") {
  Pid pid(PidGains{1.0, 0.5, 0.1});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> un(-5.0, 5.0);
  for (int k = 0; k < 2000; ++k) {
    double out = pid.step(un(rng), 0.05);
    CHECK(out <= 0.2);
    CHECK(out >= -0.2);
  }
}

TEST_CASE("pid rejects bad construction and bad steps") {
  CHECK_THROWS_AS(Pid(PidGains{}, 0.2, -0.2), ConfigError);
  Pid pid(PidGains{1.0, 0.0, 0.0});
  CHECK_THROWS_AS(pid.step(0.1, 0.0), ConfigError);
  CHECK_THROWS_AS(pid.step(0.1, -1.0), ConfigError);
}

TEST_CASE("pid reset clears all state") {
  Pid pid(PidGains{1.0, 1.0, 1.0});
  pid.step(0.05, 0.1);
  pid.step(-0.03, 0.1);
  pid.reset();
  CHECK(pid.step(0.0, 0.1) == 0.0);  // no derivative kick, no integral
}

TEST_CASE("lead stage matches the analytic frequency response") {
  // (1 + T1 s) / (1 + T2 s) driven at 1 Hz; projection onto the drive
  // recovers gain and phase, which the transfer function predicts
  const double t1 = 0.2, t2 = 0.02, dt = 1e-4, w = 2.0 * M_PI;
  FirstOrderFilter lead(1.0, t1, 1.0, t2, dt);
  double a = 0, b = 0;
  long n = 0;
  for (long k = 0; k * dt < 12.0; ++k) {
    double t = k * dt;
    double y = lead.step(std::sin(w * t));
    if (t >= 2.0) {  // transient handled, integrate whole periods
      a += y * std::sin(w * t);
      b += y * std::cos(w * t);
      ++n;
    }
  }
  a *= 2.0 / n;
  b *= 2.0 / n;
  double gain = std::hypot(a, b);
  double phase = std::atan2(b, a);
  double gain_expect =
      std::sqrt(1.0 + w * w * t1 * t1) / std::sqrt(1.0 + w * w * t2 * t2);
  double phase_expect = std::atan(w * t1) - std::atan(w * t2);
  CHECK(gain == doctest::Approx(gain_expect).epsilon(1e-5));
  CHECK(phase == doctest::Approx(phase_expect).epsilon(1e-5));
}

TEST_CASE("washout stage decays a step like its time constant") {
  // Tw s / (1 + Tw s), Tw = 10: step response is exp(-t / Tw)
  FirstOrderFilter washout(0.0, 10.0, 1.0, 10.0, 1e-3);
  double y = 0;
  long k = 0;
  for (; k * 1e-3 <= 10.0; ++k) y = washout.step(1.0);
  CHECK(y == doctest::Approx(std::exp(-1.0)).epsilon(1e-3));
}

TEST_CASE("filter discretization rejects a vanishing denominator") {
  CHECK_THROWS_AS(FirstOrderFilter(1.0, 1.0, 0.0, 0.0, 0.01), ConfigError);
}

TEST_CASE("stabilizer passes nothing at rest") {
  WashoutPss pss(PssParams{}, 0.01);
  for (int k = 0; k < 100; ++k) CHECK(pss.step(0.0) == 0.0);
}

TEST_CASE("stabilizer blocks dc") {
  WashoutPss pss(PssParams{}, 0.01);
  double y = 0;
  for (int k = 0; k < 10000; ++k) y = pss.step(0.001);  // 100 s of constant in
  CHECK(std::fabs(y) < 1e-4);
}

TEST_CASE("stabilizer output saturates at its limits") {
  WashoutPss pss(PssParams{}, 0.01);
  CHECK(pss.step(1.0) == 0.2);
  pss.reset();
  CHECK(pss.step(-1.0) == -0.2);
}

TEST_CASE("stabilizer rejects bad parameters") {
  PssParams p;
  p.tw = 0.0;
  CHECK_THROWS_AS(WashoutPss(p, 0.01), ConfigError);
  p = PssParams{};
  p.stages[1].second = 0.0;
  CHECK_THROWS_AS(WashoutPss(p, 0.01), ConfigError);
  p = PssParams{};
  p.out_min = 0.3;
  CHECK_THROWS_AS(WashoutPss(p, 0.01), ConfigError);
}

TEST_CASE("plant side stabilizers damp the post fault tail") {
  auto tail = [](const EpisodeConfig& cfg) {
    Environment env(cfg);
    env.reset();
    Eigen::VectorXd a = Eigen::VectorXd::Zero(env.action_dim());
    double acc = 0;
    while (!env.episode_done()) {
      StepResult res = env.step(a);
      REQUIRE_FALSE(res.info.sync_lost);
      if (res.info.t >= 15.0)
        acc += (env.state().omega.array() - 1.0).square().sum();
    }
    return acc;
  };
  EpisodeConfig open = kundur_cfg();
  EpisodeConfig with_pss = kundur_cfg();
  with_pss.pss_generators = {0, 1, 2, 3};
  double open_tail = tail(open);
  double pss_tail = tail(with_pss);
  CHECK(open_tail > 1e-4);  // something to damp in the first place
  CHECK(pss_tail < open_tail / 10.0);
}

TEST_CASE("episode score is deterministic") {
  EpisodeConfig cfg = kundur_cfg();
  double a = pid_episode_score(cfg, PidGains{-20.0, 0.0, 0.0});
  double b = pid_episode_score(cfg, PidGains{-20.0, 0.0, 0.0});
  CHECK(a == b);
}

TEST_CASE("tuning a zero grid reproduces the open loop") {
  PidTuneResult res = tune_pid(kundur_cfg(), {0.0}, {0.0}, {0.0});
  CHECK(res.best.kp == 0.0);
  CHECK(res.best.ki == 0.0);
  CHECK(res.best.kd == 0.0);
  CHECK(res.best_score == res.open_loop_score);
  CHECK(res.log.size() == 1);
}

TEST_CASE("tuning finds gains that clearly beat the open loop") {
  PidTuneResult res = tune_pid(kundur_cfg(), {0.0, -20.0, -40.0}, {0.0}, {0.0});
  CHECK(res.log.size() == 3);
  CHECK(res.best_score < res.open_loop_score / 5.0);
  CHECK(res.best.kp < 0.0);  // speed error feedback damps with this sign
}

TEST_CASE("a wider grid never tunes worse") {
  EpisodeConfig cfg = kundur_cfg();
  PidTuneResult narrow = tune_pid(cfg, {0.0, -20.0}, {0.0}, {0.0});
  PidTuneResult wide = tune_pid(cfg, {0.0, -20.0, -40.0, -80.0}, {0.0}, {0.0});
  CHECK(wide.best_score <= narrow.best_score);
}

TEST_CASE("tuning ignores the configured channel") {
  // the benchmark gains are always fitted on the undelayed loop
  EpisodeConfig delayed = kundur_cfg();
  delayed.channel = channel_preset("satellite");
  PidTuneResult a = tune_pid(delayed, {0.0, -20.0}, {0.0}, {0.0});
  PidTuneResult b = tune_pid(kundur_cfg(), {0.0, -20.0}, {0.0}, {0.0});
  CHECK(a.best_score == b.best_score);
  CHECK(a.open_loop_score == b.open_loop_score);
}

TEST_CASE("empty tuning grids are rejected") {
  CHECK_THROWS_AS(tune_pid(kundur_cfg(), {}, {0.0}, {0.0}), ConfigError);
}
