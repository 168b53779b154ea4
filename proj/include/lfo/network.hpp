#pragma once

#include <map>
#include <vector>

#include "lfo/admittance.hpp"
#include "lfo/power_flow.hpp"

namespace lfo {

enum class EventKind { BusFault, FaultClear, LineTrip, LoadStep, PvSet };

struct GridEvent {
  EventKind kind = EventKind::BusFault;
  double time = 0.0;     // s
  int target = 0;        // bus id, or line index for LineTrip
  double magnitude = 0;  // fault admittance pu / load delta MW / pv output MW
};

// Network reduced to the generator internal nodes. Eliminated bus voltages
// are recoverable as V = recovery * E for internal EMF vector E.
struct ReducedNetwork {
  MatC y_red;      // G x G
  MatC recovery;   // N x G, rows in case bus order
  std::vector<int> gen_bus_row;  // generator -> bus row

  int gens() const { return static_cast<int>(y_red.rows()); }
};

struct InternalBranch {
  int bus_row = 0;  // terminal bus row in the ybus
  Cplx y;           // branch admittance (1 / jXd')
};

// Eliminates every network bus, keeping one internal node per generator.
// `shunt_loads` are per-bus admittances added to the diagonal first.
ReducedNetwork kron_reduce(const MatC& ybus, const VecC& shunt_loads,
                           const std::vector<InternalBranch>& branches);

// Owns the in-service topology, constant-impedance load/pv shunts and any
// active fault shunts; rebuilds the reduction after each change.
class NetworkContext {
 public:
  NetworkContext(const GridCase& gc, const PowerFlowSolution& pf,
                 const std::vector<double>& pv_output_mw = {});

  const ReducedNetwork& reduced() const { return red_; }
  const GridCase& grid_case() const { return gc_; }

  void apply_event(const GridEvent& ev);
  // Per-step renewable fluctuation: scales every pv shunt by `factor`.
  void set_pv_scale(double factor);

  bool has_fault() const { return !fault_shunts_.empty(); }

 private:
  void rebuild();

  GridCase gc_;                    // line status mutated by LineTrip
  Eigen::VectorXd v_solved_;       // |V| from the power flow, for shunt conversion
  VecC load_shunts_;               // per-bus row
  VecC pv_shunts_;                 // per-bus row, unscaled
  double pv_scale_ = 1.0;
  std::map<int, Cplx> fault_shunts_;  // bus row -> admittance
  std::vector<InternalBranch> branches_;
  ReducedNetwork red_;
};

}  // namespace lfo
