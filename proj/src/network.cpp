#include "lfo/network.hpp"

namespace lfo {

ReducedNetwork kron_reduce(const MatC& ybus, const VecC& shunt_loads,
                           const std::vector<InternalBranch>& branches) {
  const int n = static_cast<int>(ybus.rows());
  const int ng = static_cast<int>(branches.size());
  if (ybus.cols() != n) throw ConfigError("ybus must be square");
  if (shunt_loads.size() != n) throw ConfigError("shunt_loads length must match ybus");

  MatC yee = ybus;
  yee.diagonal() += shunt_loads;

  MatC yeg = MatC::Zero(n, ng);
  MatC ygg = MatC::Zero(ng, ng);
  for (int k = 0; k < ng; ++k) {
    const auto& br = branches[k];
    if (br.bus_row < 0 || br.bus_row >= n)
      throw ConfigError("internal branch references bus row out of range");
    yee(br.bus_row, br.bus_row) += br.y;
    yeg(br.bus_row, k) = -br.y;
    ygg(k, k) = br.y;
  }

  Eigen::FullPivLU<MatC> lu(yee);
  if (!lu.isInvertible())
    throw NumericalError("kron reduction: bus admittance block is singular");

  ReducedNetwork red;
  red.recovery = -lu.solve(yeg);                      // N x G
  red.y_red = ygg + yeg.transpose() * red.recovery;   // Schur complement
  red.gen_bus_row.resize(ng);
  for (int k = 0; k < ng; ++k) red.gen_bus_row[k] = branches[k].bus_row;
  return red;
}

NetworkContext::NetworkContext(const GridCase& gc, const PowerFlowSolution& pf,
                               const std::vector<double>& pv_output_mw)
    : gc_(gc), v_solved_(pf.v_mag) {
  const int n = static_cast<int>(gc_.buses.size());
  load_shunts_ = VecC::Zero(n);
  pv_shunts_ = VecC::Zero(n);
  for (int i = 0; i < n; ++i) {
    const Bus& b = gc_.buses[i];
    Cplx s(b.p_load / gc_.system_base, b.q_load / gc_.system_base);
    load_shunts_[i] = std::conj(s) / (v_solved_[i] * v_solved_[i]);
  }
  for (size_t k = 0; k < gc_.pv_units.size(); ++k) {
    double out = pv_output_mw.empty() ? 0.0 : pv_output_mw[k];
    int i = gc_.bus_index(gc_.pv_units[k].bus);
    // negative constant-power load, frozen into an admittance at the solved voltage
    Cplx s(-out / gc_.system_base, 0.0);
    pv_shunts_[i] += std::conj(s) / (v_solved_[i] * v_solved_[i]);
  }

  branches_.reserve(gc_.generators.size());
  for (const auto& g : gc_.generators) {
    double xdp_sys = g.xd_prime * gc_.system_base / g.rating;
    branches_.push_back({gc_.bus_index(g.bus), 1.0 / Cplx(0.0, xdp_sys)});
  }
  rebuild();
}

void NetworkContext::rebuild() {
  MatC ybus = build_admittance(gc_);
  VecC shunts = load_shunts_ + pv_scale_ * pv_shunts_;
  for (const auto& [row, y] : fault_shunts_) shunts[row] += y;
  red_ = kron_reduce(ybus, shunts, branches_);
}

void NetworkContext::apply_event(const GridEvent& ev) {
  switch (ev.kind) {
    case EventKind::BusFault: {
      int row = gc_.bus_index(ev.target);
      fault_shunts_[row] += Cplx(ev.magnitude, 0.0);
      break;
    }
    case EventKind::FaultClear: {
      int row = gc_.bus_index(ev.target);
      auto it = fault_shunts_.find(row);
      if (it == fault_shunts_.end())
        throw ConfigError("fault_clear at bus " + std::to_string(ev.target) +
                          " with no active fault");
      fault_shunts_.erase(it);
      break;
    }
    case EventKind::LineTrip: {
      if (ev.target < 0 || ev.target >= static_cast<int>(gc_.lines.size()))
        throw ConfigError("line_trip index out of range");
      gc_.lines[ev.target].in_service = false;
      break;
    }
    case EventKind::LoadStep: {
      int row = gc_.bus_index(ev.target);
      Cplx s(ev.magnitude / gc_.system_base, 0.0);
      load_shunts_[row] += std::conj(s) / (v_solved_[row] * v_solved_[row]);
      break;
    }
    case EventKind::PvSet: {
      int row = gc_.bus_index(ev.target);
      Cplx s(-ev.magnitude / gc_.system_base, 0.0);
      pv_shunts_[row] = std::conj(s) / (v_solved_[row] * v_solved_[row]);
      break;
    }
  }
  rebuild();
}

void NetworkContext::set_pv_scale(double factor) {
  pv_scale_ = factor;
  rebuild();
}

}  // namespace lfo
