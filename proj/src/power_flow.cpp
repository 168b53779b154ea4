#include "lfo/power_flow.hpp"

#include <cmath>

namespace lfo {

PowerFlowSolution solve_power_flow(const GridCase& gc, const PowerFlowOptions& opt,
                                   const std::vector<double>& pv_output_mw) {
  gc.validate();
  if (!pv_output_mw.empty() && pv_output_mw.size() != gc.pv_units.size())
    throw ConfigError("pv_output_mw length does not match pv_units");

  const int n = static_cast<int>(gc.buses.size());
  const MatC y = build_admittance(gc);
  const Eigen::MatrixXd g = y.real();
  const Eigen::MatrixXd b = y.imag();

  // Scheduled net injections in pu.
  Eigen::VectorXd p_spec = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd q_spec = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    p_spec[i] -= gc.buses[i].p_load / gc.system_base;
    q_spec[i] -= gc.buses[i].q_load / gc.system_base;
  }
  for (const auto& gen : gc.generators)
    p_spec[gc.bus_index(gen.bus)] += gen.p_dispatch / gc.system_base;
  for (size_t k = 0; k < gc.pv_units.size(); ++k) {
    double out = pv_output_mw.empty() ? 0.0 : pv_output_mw[k];
    p_spec[gc.bus_index(gc.pv_units[k].bus)] += out / gc.system_base;
  }

  Eigen::VectorXd vm(n), va(n);
  for (int i = 0; i < n; ++i) {
    const Bus& bus = gc.buses[i];
    bool holds_v = bus.kind != BusKind::PQ;
    vm[i] = holds_v ? bus.v_setpoint : (opt.flat_start ? 1.0 : bus.v_setpoint);
    va[i] = 0.0;
  }

  // Row maps for the reduced unknown vector: angles for all non-slack buses,
  // magnitudes for PQ buses.
  std::vector<int> ang_rows, mag_rows;
  for (int i = 0; i < n; ++i) {
    if (gc.buses[i].kind != BusKind::Slack) ang_rows.push_back(i);
    if (gc.buses[i].kind == BusKind::PQ) mag_rows.push_back(i);
  }
  const int na = static_cast<int>(ang_rows.size());
  const int nm = static_cast<int>(mag_rows.size());

  auto injections = [&](Eigen::VectorXd& p, Eigen::VectorXd& q) {
    p.setZero(n);
    q.setZero(n);
    for (int i = 0; i < n; ++i) {
      double pi = 0, qi = 0;
      for (int j = 0; j < n; ++j) {
        if (g(i, j) == 0.0 && b(i, j) == 0.0) continue;
        double th = va[i] - va[j];
        double ct = std::cos(th), st = std::sin(th);
        pi += vm[j] * (g(i, j) * ct + b(i, j) * st);
        qi += vm[j] * (g(i, j) * st - b(i, j) * ct);
      }
      p[i] = vm[i] * pi;
      q[i] = vm[i] * qi;
    }
  };

  Eigen::VectorXd p(n), q(n);
  PowerFlowSolution sol;
  sol.iterations = 0;

  for (;;) {
    injections(p, q);
    Eigen::VectorXd rhs(na + nm);
    for (int k = 0; k < na; ++k) rhs[k] = p_spec[ang_rows[k]] - p[ang_rows[k]];
    for (int k = 0; k < nm; ++k) rhs[na + k] = q_spec[mag_rows[k]] - q[mag_rows[k]];

    sol.mismatch_norm = rhs.size() ? rhs.cwiseAbs().maxCoeff() : 0.0;
    if (sol.mismatch_norm <= opt.tol) break;
    if (sol.iterations >= opt.max_iter)
      throw NumericalError("power flow did not converge in " +
                           std::to_string(opt.max_iter) + " iterations (mismatch " +
                           std::to_string(sol.mismatch_norm) + " pu)");

    Eigen::MatrixXd jac(na + nm, na + nm);
    for (int r = 0; r < na; ++r) {
      int i = ang_rows[r];
      for (int c = 0; c < na; ++c) {
        int j = ang_rows[c];
        if (i == j)
          jac(r, c) = -q[i] - b(i, i) * vm[i] * vm[i];
        else {
          double th = va[i] - va[j];
          jac(r, c) = vm[i] * vm[j] * (g(i, j) * std::sin(th) - b(i, j) * std::cos(th));
        }
      }
      for (int c = 0; c < nm; ++c) {
        int j = mag_rows[c];
        if (i == j)
          jac(r, na + c) = p[i] / vm[i] + g(i, i) * vm[i];
        else {
          double th = va[i] - va[j];
          jac(r, na + c) = vm[i] * (g(i, j) * std::cos(th) + b(i, j) * std::sin(th));
        }
      }
    }
    for (int r = 0; r < nm; ++r) {
      int i = mag_rows[r];
      for (int c = 0; c < na; ++c) {
        int j = ang_rows[c];
        if (i == j)
          jac(na + r, c) = p[i] - g(i, i) * vm[i] * vm[i];
        else {
          double th = va[i] - va[j];
          jac(na + r, c) = -vm[i] * vm[j] * (g(i, j) * std::cos(th) + b(i, j) * std::sin(th));
        }
      }
      for (int c = 0; c < nm; ++c) {
        int j = mag_rows[c];
        if (i == j)
          jac(na + r, na + c) = q[i] / vm[i] - b(i, i) * vm[i];
        else {
          double th = va[i] - va[j];
          jac(na + r, na + c) = vm[i] * (g(i, j) * std::sin(th) - b(i, j) * std::cos(th));
        }
      }
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible())
      throw NumericalError("power flow Jacobian is singular");
    Eigen::VectorXd dx = lu.solve(rhs);
    if (!dx.allFinite())
      throw NumericalError("power flow update is not finite");

    for (int k = 0; k < na; ++k) va[ang_rows[k]] += dx[k];
    for (int k = 0; k < nm; ++k) vm[mag_rows[k]] += dx[na + k];
    ++sol.iterations;
  }

  injections(p, q);
  sol.v_mag = vm;
  sol.v_angle = va;
  sol.p_inj = p;
  sol.q_inj = q;
  return sol;
}

}  // namespace lfo
