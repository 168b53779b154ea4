#include "lfo/dynamics.hpp"

#include <cmath>

namespace lfo {

MachineSystemParams to_system_base(const GridCase& gc) {
  const int ng = static_cast<int>(gc.generators.size());
  MachineSystemParams mp;
  mp.h.resize(ng);
  mp.d.resize(ng);
  mp.xd.resize(ng);
  mp.xdp.resize(ng);
  mp.td0p.resize(ng);
  mp.ka.resize(ng);
  mp.ta.resize(ng);
  mp.efd_min.resize(ng);
  mp.efd_max.resize(ng);
  mp.vref = Eigen::VectorXd::Zero(ng);
  mp.omega_s = 2.0 * M_PI * gc.nominal_freq;
  for (int k = 0; k < ng; ++k) {
    const Generator& g = gc.generators[k];
    double to_sys = g.rating / gc.system_base;  // power quantities
    mp.h[k] = g.h * to_sys;
    mp.d[k] = g.d * to_sys;
    mp.xd[k] = g.xd / to_sys;  // impedances scale the other way
    mp.xdp[k] = g.xd_prime / to_sys;
    mp.td0p[k] = g.td0_prime;
    mp.ka[k] = g.ka;
    mp.ta[k] = g.ta;
    mp.efd_min[k] = g.efd_min;
    mp.efd_max[k] = g.efd_max;
  }
  return mp;
}

Eigen::VectorXd DynamicState::flat() const {
  const int ng = static_cast<int>(delta.size());
  Eigen::VectorXd x(4 * ng);
  x << delta, omega, eqp, efd;
  return x;
}

void DynamicState::set_flat(const Eigen::VectorXd& x) {
  const int ng = static_cast<int>(x.size()) / 4;
  delta = x.segment(0, ng);
  omega = x.segment(ng, ng);
  eqp = x.segment(2 * ng, ng);
  efd = x.segment(3 * ng, ng);
}

NetworkOutputs electrical_outputs(const ReducedNetwork& red,
                                  const Eigen::VectorXd& delta,
                                  const Eigen::VectorXd& eqp) {
  const int ng = red.gens();
  VecC e(ng);
  for (int k = 0; k < ng; ++k) e[k] = std::polar(eqp[k], delta[k]);

  NetworkOutputs out;
  out.current = red.y_red * e;
  out.bus_voltage = red.recovery * e;
  out.pe.resize(ng);
  out.vt.resize(ng);
  out.id.resize(ng);
  for (int k = 0; k < ng; ++k) {
    out.pe[k] = (e[k] * std::conj(out.current[k])).real();
    out.vt[k] = std::abs(out.bus_voltage[red.gen_bus_row[k]]);
    // rotate into the machine frame: id + j iq = j I exp(-j delta)
    Cplx idq = Cplx(0, 1) * out.current[k] * std::polar(1.0, -delta[k]);
    out.id[k] = idq.real();
  }
  return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> electrical_power(
    const ReducedNetwork& red, const Eigen::VectorXd& delta,
    const Eigen::VectorXd& eqp) {
  NetworkOutputs out = electrical_outputs(red, delta, eqp);
  return {std::move(out.pe), std::move(out.vt)};
}

Eigen::VectorXd derivatives(const DynamicState& s, const ReducedNetwork& red,
                            const Eigen::VectorXd& vpss,
                            const MachineSystemParams& mp) {
  const int ng = mp.gens();
  if (vpss.size() != ng) throw ConfigError("vpss length must equal generator count");

  NetworkOutputs net = electrical_outputs(red, s.delta, s.eqp);
  Eigen::VectorXd dx(4 * ng);
  for (int k = 0; k < ng; ++k) {
    double dw = s.omega[k] - 1.0;
    dx[k] = mp.omega_s * dw;
    dx[ng + k] = (s.pm[k] - net.pe[k] - mp.d[k] * dw) / (2.0 * mp.h[k]);
    dx[2 * ng + k] =
        (s.efd[k] - s.eqp[k] - (mp.xd[k] - mp.xdp[k]) * net.id[k]) / mp.td0p[k];
    double defd =
        (mp.ka[k] * (mp.vref[k] + vpss[k] - net.vt[k]) - s.efd[k]) / mp.ta[k];
    // anti-windup: hold at a limit instead of integrating past it
    if ((s.efd[k] >= mp.efd_max[k] && defd > 0) ||
        (s.efd[k] <= mp.efd_min[k] && defd < 0))
      defd = 0;
    dx[3 * ng + k] = defd;
  }
  return dx;
}

DynamicState init_dynamic_state(const GridCase& gc, const PowerFlowSolution& pf,
                                const ReducedNetwork& red,
                                MachineSystemParams& mp) {
  const int ng = static_cast<int>(gc.generators.size());
  DynamicState s;
  s.t = 0;
  s.delta.resize(ng);
  s.omega = Eigen::VectorXd::Ones(ng);
  s.eqp.resize(ng);
  s.efd.resize(ng);
  s.pm.resize(ng);

  for (int k = 0; k < ng; ++k) {
    const Generator& g = gc.generators[k];
    int row = gc.bus_index(g.bus);
    Cplx vt = pf.voltage(row);

    // Generator output = net injection plus whatever the local load draws.
    const Bus& bus = gc.buses[row];
    double p_gen = pf.p_inj[row] + bus.p_load / gc.system_base;
    double q_gen = pf.q_inj[row] + bus.q_load / gc.system_base;
    for (size_t u = 0; u < gc.pv_units.size(); ++u)
      if (gc.bus_index(gc.pv_units[u].bus) == row) {
        // solar output at the generator bus would alias into p_gen; the
        // bundled cases keep pv units on load buses, so reject it
        throw ConfigError("pv unit shares a bus with a generator");
      }
    Cplx i = std::conj(Cplx(p_gen, q_gen) / vt);

    Cplx e = vt + Cplx(0.0, mp.xdp[k]) * i;
    s.delta[k] = std::arg(e);
    s.eqp[k] = std::abs(e);
  }

  // Close the loop through the reduced network itself so the exciter and
  // torque balances hold to machine precision, not just power flow tolerance
  // (Ka/Ta multiplies any terminal voltage discrepancy by ~2e4).
  NetworkOutputs net = electrical_outputs(red, s.delta, s.eqp);
  for (int k = 0; k < ng; ++k) {
    s.efd[k] = s.eqp[k] + (mp.xd[k] - mp.xdp[k]) * net.id[k];
    if (s.efd[k] > mp.efd_max[k] || s.efd[k] < mp.efd_min[k])
      throw NumericalError("dispatch needs Efd " + std::to_string(s.efd[k]) +
                           " outside limits at bus " +
                           std::to_string(gc.generators[k].bus));
    s.pm[k] = net.pe[k];
    mp.vref[k] = net.vt[k] + s.efd[k] / mp.ka[k];
  }
  return s;
}

DynamicState step_rk4(const DynamicState& s, const ReducedNetwork& red,
                      const Eigen::VectorXd& vpss, double dt,
                      const MachineSystemParams& mp) {
  DynamicState work = s;
  auto rhs = [&](const Eigen::VectorXd& x, double) {
    work.set_flat(x);
    return derivatives(work, red, vpss, mp);
  };
  Eigen::VectorXd x1 = rk4_advance(rhs, s.flat(), s.t, dt);
  if (!x1.allFinite()) throw NumericalError("integration produced non-finite state");

  DynamicState out = s;
  out.set_flat(x1);
  out.efd = out.efd.cwiseMax(mp.efd_min).cwiseMin(mp.efd_max);
  out.t = s.t + dt;
  return out;
}

}  // namespace lfo
