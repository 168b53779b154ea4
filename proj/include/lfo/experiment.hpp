#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lfo/config.hpp"

namespace lfo {

// Subcommand bodies behind the CLI. Each returns 0 on success and throws
// ConfigError / NumericalError otherwise; `out` receives the human summary
// while all machine-readable results land as CSV/SVG files under the
// configured output directory.
int cmd_powerflow(const ExperimentConfig& ec, std::ostream& out);
int cmd_train(const ExperimentConfig& ec, std::ostream& out);
int cmd_eval(const ExperimentConfig& ec, std::ostream& out);
int cmd_plotdata(const ExperimentConfig& ec, std::ostream& out);
// Sweep rebuilds the config per grid point, so it works on the raw keys.
int cmd_sweep(const KeyValueConfig& kv, std::ostream& out);

struct Series {
  std::string name;
  std::vector<double> x, y;
};

// Self-contained line chart; deterministic output for fixed input.
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series);

}  // namespace lfo
