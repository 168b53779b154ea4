#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "lfo/config.hpp"
#include "lfo/errors.hpp"

using namespace lfo;

namespace {

std::filesystem::path write_temp(const std::string& name,
                                 const std::string& text) {
  std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "lfo_config_test";
  std::filesystem::create_directories(dir);
  std::filesystem::path p = dir / name;
  std::ofstream f(p, std::ios::binary);
  f << text;
  return p;
}

}  // namespace

TEST_CASE("parser handles comments, blanks and trimming") {
  KeyValueConfig kv = KeyValueConfig::from_text(
      "# leading comment\n"
      "\n"
      "  a.b = 1.5  \n"
      "name = hello world # not a comment inside a value? it is\n"
      "flag=true\n");
  CHECK(kv.get_double("a.b", 0.0) == doctest::Approx(1.5));
  // '#' after the value starts a comment; the value itself is trimmed
  CHECK(kv.get_string("name", "") == "hello world");
  CHECK(kv.get_bool("flag", false));
}

TEST_CASE("later assignments and set() override earlier ones") {
  KeyValueConfig kv = KeyValueConfig::from_text("k = 1\nk = 2\n");
  CHECK(kv.get_int("k", 0) == 2);
  kv.set("k", "3");
  CHECK(kv.get_int("k", 0) == 3);
  kv.apply_set_arg("k=4");
  CHECK(kv.get_int("k", 0) == 4);
  CHECK_THROWS_AS(kv.apply_set_arg("missing-equals"), ConfigError);
}

TEST_CASE("malformed lines and keys are rejected") {
  CHECK_THROWS_AS(KeyValueConfig::from_text("no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::from_text("= value\n"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::from_text("bad key! = 1\n"), ConfigError);
}

TEST_CASE("include pulls in another file with override order") {
  std::filesystem::path base =
      write_temp("base.conf", "shared = from_base\nonly_base = 1\n");
  std::filesystem::path top =
      write_temp("top.conf",
                 "include base.conf\n"
                 "shared = from_top\n");
  KeyValueConfig kv = KeyValueConfig::from_file(top.string());
  CHECK(kv.get_string("shared", "") == "from_top");
  CHECK(kv.get_int("only_base", 0) == 1);
  CHECK_THROWS_AS(KeyValueConfig::from_file("/nonexistent/x.conf"),
                  ConfigError);
}

TEST_CASE("typed getters validate their formats") {
  KeyValueConfig kv = KeyValueConfig::from_text(
      "d = 2.5\ni = 7\nneg = -3\nb1 = yes\nb0 = off\nu = 18446744073709551615\n"
      "dl = 1,2.5,3\nil = 4,5\nul = 0,1,2\nsl = a,b,c\nbad = 1.5x\n");
  CHECK(kv.get_double("d", 0) == doctest::Approx(2.5));
  CHECK(kv.get_int("i", 0) == 7);
  CHECK(kv.get_int("neg", 0) == -3);
  CHECK(kv.get_bool("b1", false));
  CHECK_FALSE(kv.get_bool("b0", true));
  CHECK(kv.get_u64("u", 0) == 18446744073709551615ull);
  CHECK(kv.get_double_list("dl", {}) == std::vector<double>{1.0, 2.5, 3.0});
  CHECK(kv.get_int_list("il", {}) == std::vector<int>{4, 5});
  CHECK(kv.get_u64_list("ul", {}) == std::vector<std::uint64_t>{0, 1, 2});
  CHECK(kv.get_string_list("sl", {}) ==
        std::vector<std::string>{"a", "b", "c"});
  CHECK_THROWS_AS(kv.get_double("bad", 0), ConfigError);
  CHECK_THROWS_AS(kv.get_int("d", 0), ConfigError);
  CHECK_THROWS_AS(kv.get_bool("i", false), ConfigError);
  // defaults only apply to missing keys
  CHECK(kv.get_double("absent", 9.5) == doctest::Approx(9.5));
  CHECK_THROWS_AS(kv.require_string("absent"), ConfigError);
}

TEST_CASE("prefix listing is sorted and unconsumed keys are tracked") {
  KeyValueConfig kv = KeyValueConfig::from_text(
      "sweep.b = 2\nsweep.a = 1\nother = 3\n");
  CHECK(kv.keys_with_prefix("sweep.") ==
        std::vector<std::string>{"sweep.a", "sweep.b"});
  kv.get_int("sweep.a", 0);
  kv.get_int("sweep.b", 0);
  CHECK(kv.unconsumed() == std::vector<std::string>{"other"});
  CHECK_THROWS_AS(kv.require_all_consumed(), ConfigError);
  kv.get_int("other", 0);
  CHECK_NOTHROW(kv.require_all_consumed());
}

TEST_CASE("resolve_path is relative to the config directory") {
  std::filesystem::path p = write_temp("paths.conf", "x = 1\n");
  KeyValueConfig kv = KeyValueConfig::from_file(p.string());
  std::string resolved = kv.resolve_path("data.json");
  CHECK(resolved == (p.parent_path() / "data.json").string());
  CHECK(kv.resolve_path("/abs/data.json") == "/abs/data.json");
}

TEST_CASE("channel specs cover presets, none, constant and range") {
  GaussianMixtureDelay none = parse_channel_spec("none");
  CHECK(none.degenerate());
  std::mt19937_64 rng(1);
  CHECK(none.sample(rng) == 0.0);

  GaussianMixtureDelay c = parse_channel_spec("constant:0.25");
  CHECK(c.channel_label == "constant:0.25");
  CHECK(c.sample(rng) == doctest::Approx(0.25));

  GaussianMixtureDelay r = parse_channel_spec("range:0.1:0.3");
  CHECK(r.trunc_min == doctest::Approx(0.1));
  CHECK(r.trunc_max == doctest::Approx(0.3));
  for (int i = 0; i < 50; ++i) {
    double s = r.sample(rng);
    CHECK(s >= 0.1);
    CHECK(s <= 0.3);
  }

  GaussianMixtureDelay sat = parse_channel_spec("satellite");
  CHECK(sat.channel_label == "satellite");

  CHECK_THROWS_AS(parse_channel_spec("warp_drive"), ConfigError);
  CHECK_THROWS_AS(parse_channel_spec("constant:"), ConfigError);
  CHECK_THROWS_AS(parse_channel_spec("range:0.3:0.1"), ConfigError);
}

namespace {

KeyValueConfig minimal_config(const std::string& extra = "") {
  std::string text = "case = kundur_2area.json\n" + extra;
  return KeyValueConfig::from_text(text, LFO_SOURCE_DATA_DIR);
}

}  // namespace

TEST_CASE("experiment config applies defaults") {
  ExperimentConfig ec = build_experiment_config(minimal_config());
  CHECK(ec.episodes == 500);
  CHECK(ec.eval_episodes == 4);
  CHECK(ec.seeds == std::vector<std::uint64_t>{0, 1, 2});
  CHECK(ec.success_window == 100);
  CHECK(ec.controller == "rl");
  CHECK(ec.scenario.dt_sim == doctest::Approx(0.01));
  // action bounds mirror the reward bounds
  CHECK(ec.agent.action_low == doctest::Approx(ec.scenario.weights.v));
  CHECK(ec.agent.action_high == doctest::Approx(ec.scenario.weights.u));
}

TEST_CASE("experiment config rejects unknown keys and bad enums") {
  CHECK_THROWS_AS(build_experiment_config(minimal_config("agent.typo = 1\n")),
                  ConfigError);
  CHECK_THROWS_AS(
      build_experiment_config(minimal_config("controller = fuzzy\n")),
      ConfigError);
  CHECK_THROWS_AS(
      build_experiment_config(minimal_config("agent.noise = pink\n")),
      ConfigError);
  CHECK_THROWS_AS(
      build_experiment_config(minimal_config("train.episodes = 0\n")),
      ConfigError);
  CHECK_THROWS_AS(
      build_experiment_config(minimal_config("scenario.channel = bogus\n")),
      ConfigError);
}

TEST_CASE("experiment config parses scenario lists and pid settings") {
  ExperimentConfig ec = build_experiment_config(minimal_config(
      "scenario.monitored_pairs = 7:9,8:9\n"
      "scenario.controlled_generators = 0,2\n"
      "pid.kp = -20\npid.ki = -1\npid.kd = 0\n"
      "sweep.agent.gamma = 0.9,0.99\n"
      "sweep.agent.batch_size = 32,64\n"));
  REQUIRE(ec.scenario.monitored_bus_pairs.size() == 2);
  CHECK(ec.scenario.monitored_bus_pairs[0].first == 7);
  CHECK(ec.scenario.monitored_bus_pairs[0].second == 9);
  CHECK(ec.scenario.controlled_generators == std::vector<int>{0, 2});
  CHECK(ec.pid_fixed);
  CHECK(ec.pid_gains.kp == doctest::Approx(-20));
  REQUIRE(ec.sweep_axes.size() == 2);
  // axes come out sorted by key
  CHECK(ec.sweep_axes[0].key == "agent.batch_size");
  CHECK(ec.sweep_axes[0].values == std::vector<std::string>{"32", "64"});
  CHECK(ec.sweep_axes[1].key == "agent.gamma");
}

TEST_CASE("worker cap follows LFO_THREADS") {
  setenv("LFO_THREADS", "3", 1);
  CHECK(worker_cap() == 3);
  setenv("LFO_THREADS", "zero", 1);
  CHECK_THROWS_AS(worker_cap(), ConfigError);
  setenv("LFO_THREADS", "-2", 1);
  CHECK_THROWS_AS(worker_cap(), ConfigError);
  unsetenv("LFO_THREADS");
  CHECK(worker_cap() >= 1);
}
