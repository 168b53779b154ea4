#pragma once

#include <complex>

#include <Eigen/Dense>

#include "lfo/grid_case.hpp"

namespace lfo {

using Cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;

// Bus admittance matrix in case bus order. Entry (i,j), i != j, is the
// negated series admittance sum of in-service lines between i and j;
// diagonals carry the series terms plus half the line charging per end.
MatC build_admittance(const GridCase& gc);

struct LineFlow {
  double p_from, q_from;  // pu into the line at the from end
  double p_to, q_to;      // pu into the line at the to end
};

LineFlow line_flow(const Line& ln, Cplx v_from, Cplx v_to);

}  // namespace lfo
