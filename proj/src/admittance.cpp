#include "lfo/admittance.hpp"

namespace lfo {

MatC build_admittance(const GridCase& gc) {
  const int n = static_cast<int>(gc.buses.size());
  MatC y = MatC::Zero(n, n);
  for (const auto& ln : gc.lines) {
    if (!ln.in_service) continue;
    int i = gc.bus_index(ln.from_bus);
    int j = gc.bus_index(ln.to_bus);
    Cplx ys = 1.0 / Cplx(ln.r, ln.x);
    Cplx yc(0.0, ln.b_shunt / 2.0);
    y(i, i) += ys + yc;
    y(j, j) += ys + yc;
    y(i, j) -= ys;
    y(j, i) -= ys;
  }
  return y;
}

LineFlow line_flow(const Line& ln, Cplx vf, Cplx vt) {
  Cplx ys = 1.0 / Cplx(ln.r, ln.x);
  Cplx yc(0.0, ln.b_shunt / 2.0);
  Cplx i_from = (vf - vt) * ys + vf * yc;
  Cplx i_to = (vt - vf) * ys + vt * yc;
  Cplx s_from = vf * std::conj(i_from);
  Cplx s_to = vt * std::conj(i_to);
  return {s_from.real(), s_from.imag(), s_to.real(), s_to.imag()};
}

}  // namespace lfo
