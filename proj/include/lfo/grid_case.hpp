#pragma once

#include <string>
#include <vector>

#include "lfo/errors.hpp"

namespace lfo {

enum class BusKind { Slack, PV, PQ };

struct Bus {
  int id = 0;
  BusKind kind = BusKind::PQ;
  double v_setpoint = 1.0;  // pu
  double p_load = 0.0;      // MW
  double q_load = 0.0;      // MVAr, negative for shunt capacitors
};

struct Line {
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;        // pu on system base
  double x = 0.0;        // pu
  double b_shunt = 0.0;  // total charging susceptance, pu
  bool in_service = true;
};

// Machine parameters are on the machine base given by `rating`.
struct Generator {
  int bus = 0;
  double rating = 100.0;    // MVA
  double h = 0.0;           // s
  double d = 0.0;           // pu torque / pu speed
  double xd = 0.0;          // pu
  double xd_prime = 0.0;    // pu
  double td0_prime = 0.0;   // s
  double ka = 200.0;        // exciter gain
  double ta = 0.01;         // exciter time constant, s
  double efd_min = -6.0;    // pu
  double efd_max = 6.0;     // pu
  double p_dispatch = 0.0;  // MW
};

struct PvUnit {
  int bus = 0;
  double rated = 0.0;  // MW
};

struct GridCase {
  double system_base = 100.0;   // MVA
  double nominal_freq = 60.0;   // Hz
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<PvUnit> pv_units;

  int bus_index(int id) const;  // position in `buses`, throws on unknown id
  int slack_index() const;
  void validate() const;        // structural checks, throws ConfigError
};

GridCase parse_grid_case(const std::string& json_text);
GridCase load_grid_case(const std::string& path);

}  // namespace lfo
