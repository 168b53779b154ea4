#pragma once

#include <vector>

#include "lfo/admittance.hpp"

namespace lfo {

struct PowerFlowOptions {
  bool flat_start = true;
  double tol = 1e-8;  // max abs mismatch, pu
  int max_iter = 20;
};

struct PowerFlowSolution {
  Eigen::VectorXd v_mag;    // pu, case bus order
  Eigen::VectorXd v_angle;  // rad, slack at its setpoint angle (0)
  Eigen::VectorXd p_inj;    // pu net injection at the solution
  Eigen::VectorXd q_inj;
  double mismatch_norm = 0.0;
  int iterations = 0;

  Cplx voltage(int bus_row) const {
    return std::polar(v_mag[bus_row], v_angle[bus_row]);
  }
};

// Full-Jacobian Newton-Raphson in polar form. `pv_output_mw` gives the
// active injection of each entry of gc.pv_units (defaults to zero output).
// Throws NumericalError if the iteration does not reach tol.
PowerFlowSolution solve_power_flow(const GridCase& gc,
                                   const PowerFlowOptions& opt = {},
                                   const std::vector<double>& pv_output_mw = {});

}  // namespace lfo
