#pragma once

#include "lfo/network.hpp"

namespace lfo {

// One-axis flux-decay machines with first-order static exciters.
// Everything here is on the system base; to_system_base() converts the
// machine-base case data once.
struct MachineSystemParams {
  Eigen::VectorXd h;        // effective inertia, s (H * rating / system_base)
  Eigen::VectorXd d;        // damping on system base
  Eigen::VectorXd xd, xdp;  // pu on system base
  Eigen::VectorXd td0p;     // s
  Eigen::VectorXd ka, ta;
  Eigen::VectorXd efd_min, efd_max;
  Eigen::VectorXd vref;     // filled by init_dynamic_state
  double omega_s = 2.0 * 3.14159265358979323846 * 60.0;  // rad/s

  int gens() const { return static_cast<int>(h.size()); }
};

MachineSystemParams to_system_base(const GridCase& gc);

struct DynamicState {
  double t = 0.0;
  Eigen::VectorXd delta;  // rad
  Eigen::VectorXd omega;  // pu
  Eigen::VectorXd eqp;    // pu
  Eigen::VectorXd efd;    // pu
  Eigen::VectorXd pm;     // pu, constant over an episode

  Eigen::VectorXd flat() const;  // [delta; omega; eqp; efd]
  void set_flat(const Eigen::VectorXd& x);
};

struct NetworkOutputs {
  Eigen::VectorXd pe;   // air-gap power per generator, pu
  Eigen::VectorXd vt;   // terminal voltage magnitude, pu
  Eigen::VectorXd id;   // d-axis stator current, pu
  VecC current;         // injection from each internal EMF
  VecC bus_voltage;     // recovered voltages of every network bus
};

// Solves the reduced network for internal EMFs E_k = eqp_k * exp(j delta_k).
NetworkOutputs electrical_outputs(const ReducedNetwork& red,
                                  const Eigen::VectorXd& delta,
                                  const Eigen::VectorXd& eqp);

// (pe, vt) only; convenience wrapper over electrical_outputs.
std::pair<Eigen::VectorXd, Eigen::VectorXd> electrical_power(
    const ReducedNetwork& red, const Eigen::VectorXd& delta,
    const Eigen::VectorXd& eqp);

// Right-hand side as a flat vector [d delta; d omega; d eqp; d efd].
// `vpss` is the per-generator stabilizing input to the exciter summing
// junction. Exciter derivatives are zeroed when pushing past an Efd limit.
Eigen::VectorXd derivatives(const DynamicState& s, const ReducedNetwork& red,
                            const Eigen::VectorXd& vpss,
                            const MachineSystemParams& mp);

// Back-solves machine states from a converged power flow so that the
// initial derivatives vanish against `red` (the pre-disturbance reduction).
// Fills mp.vref. Throws NumericalError when a machine would need Efd outside
// its limits.
DynamicState init_dynamic_state(const GridCase& gc, const PowerFlowSolution& pf,
                                const ReducedNetwork& red,
                                MachineSystemParams& mp);

// Generic classical RK4 step, used by the stepper and by convergence tests.
template <class F, class V>
V rk4_advance(F&& f, const V& x, double t, double dt) {
  V k1 = f(x, t);
  V k2 = f(x + (dt / 2) * k1, t + dt / 2);
  V k3 = f(x + (dt / 2) * k2, t + dt / 2);
  V k4 = f(x + dt * k3, t + dt);
  return x + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

// One RK4 step of dt; clamps Efd into limits afterwards and advances t.
DynamicState step_rk4(const DynamicState& s, const ReducedNetwork& red,
                      const Eigen::VectorXd& vpss, double dt,
                      const MachineSystemParams& mp);

}  // namespace lfo
