#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lfo/config.hpp"
#include "lfo/errors.hpp"
#include "lfo/experiment.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string seed;
  std::string out;
  std::string channel;
  std::string controller;
  bool paper_scale = false;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "experiment config file")
      ->required();
  cmd->add_option("--seed", a.seed, "comma-separated seed list override");
  cmd->add_option("--out", a.out, "output directory");
  cmd->add_option("--channel", a.channel,
                  "channel override (preset label, none, constant:<s>, "
                  "range:<lo>:<hi>)");
  cmd->add_option("--controller", a.controller,
                  "controller override (rl, pid, pss_only, none)");
  cmd->add_flag("--paper-scale", a.paper_scale,
                "full-length training budget (5000 episodes)");
  cmd->add_option("--set", a.sets, "config override, key=value (repeatable)");
}

lfo::KeyValueConfig load_kv(const CommonArgs& a, const std::string& verb) {
  lfo::KeyValueConfig kv = lfo::KeyValueConfig::from_file(a.config);
  if (a.paper_scale) {
    kv.set("train.episodes", "5000");
    kv.set("agent.sigma_decay_episodes", "3000");
  }
  if (!a.seed.empty()) {
    if (verb == "eval")
      kv.set("eval.seeds", a.seed);
    else
      kv.set("train.seeds", a.seed);
  }
  if (!a.channel.empty()) {
    kv.set("scenario.channel", a.channel);
    if (verb == "eval") kv.set("eval.channels", a.channel);
  }
  if (!a.controller.empty()) kv.set("controller", a.controller);
  if (!a.out.empty()) kv.set("out", a.out);
  for (const std::string& s : a.sets) kv.apply_set_arg(s);
  return kv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wide-area low-frequency oscillation damping laboratory"};
  app.require_subcommand(1);

  CommonArgs pf, tr, ev, sw, pd;
  CLI::App* c_pf = app.add_subcommand("powerflow", "solve the steady state");
  CLI::App* c_tr = app.add_subcommand("train", "train the damping agent");
  CLI::App* c_ev = app.add_subcommand("eval", "evaluate a controller");
  CLI::App* c_sw = app.add_subcommand("sweep", "hyperparameter grid search");
  CLI::App* c_pd = app.add_subcommand("plotdata", "tidy CSV/SVG plot inputs");
  add_common(c_pf, pf);
  add_common(c_tr, tr);
  add_common(c_ev, ev);
  add_common(c_sw, sw);
  add_common(c_pd, pd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (c_pf->parsed())
      return lfo::cmd_powerflow(
          lfo::build_experiment_config(load_kv(pf, "powerflow")), std::cout);
    if (c_tr->parsed())
      return lfo::cmd_train(
          lfo::build_experiment_config(load_kv(tr, "train")), std::cout);
    if (c_ev->parsed())
      return lfo::cmd_eval(lfo::build_experiment_config(load_kv(ev, "eval")),
                           std::cout);
    if (c_sw->parsed()) return lfo::cmd_sweep(load_kv(sw, "sweep"), std::cout);
    if (c_pd->parsed())
      return lfo::cmd_plotdata(
          lfo::build_experiment_config(load_kv(pd, "plotdata")), std::cout);
  } catch (const lfo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const lfo::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
