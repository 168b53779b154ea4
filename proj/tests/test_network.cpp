#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "lfo/dynamics.hpp"
#include "lfo/network.hpp"

using namespace lfo;

namespace {

GridCase kundur() {
  return load_grid_case(std::string(LFO_SOURCE_DATA_DIR) + "/kundur_2area.json");
}

}  // namespace

// Oracle: eliminating the center of a star yields the classic delta
// equivalent y_ij = y_i y_j / (y_1 + y_2 + y_3).
TEST_CASE("star-delta transformation") {
  Cplx y1(1.0, -2.0), y2(0.5, -1.5), y3(2.0, -4.0);
  Cplx ysum = y1 + y2 + y3;

  MatC ybus = MatC::Zero(1, 1);  // the star center carries no shunt
  VecC shunts = VecC::Zero(1);
  std::vector<InternalBranch> br = {{0, y1}, {0, y2}, {0, y3}};
  ReducedNetwork red = kron_reduce(ybus, shunts, br);

  REQUIRE(red.gens() == 3);
  Cplx ys[3] = {y1, y2, y3};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Cplx expect = (i == j) ? ys[i] - ys[i] * ys[i] / ysum : -ys[i] * ys[j] / ysum;
      CHECK(std::abs(red.y_red(i, j) - expect) < 1e-14);
    }
}

TEST_CASE("reduction is symmetric and matches a bordered full solve") {
  GridCase gc = kundur();
  PowerFlowSolution pf = solve_power_flow(gc);
  NetworkContext ctx(gc, pf);
  const ReducedNetwork& red = ctx.reduced();
  const int n = static_cast<int>(gc.buses.size());
  const int ng = red.gens();

  CHECK((red.y_red - red.y_red.transpose()).cwiseAbs().maxCoeff() < 1e-10);

  // independent assembly of the full extended system
  MatC ynn = build_admittance(gc);
  for (int i = 0; i < n; ++i) {
    Cplx s(gc.buses[i].p_load / gc.system_base, gc.buses[i].q_load / gc.system_base);
    ynn(i, i) += std::conj(s) / (pf.v_mag[i] * pf.v_mag[i]);
  }
  MatC yng = MatC::Zero(n, ng);
  MatC ygg = MatC::Zero(ng, ng);
  for (int k = 0; k < ng; ++k) {
    const Generator& g = gc.generators[k];
    Cplx yb = 1.0 / Cplx(0.0, g.xd_prime * gc.system_base / g.rating);
    int row = gc.bus_index(g.bus);
    ynn(row, row) += yb;
    yng(row, k) = -yb;
    ygg(k, k) = yb;
  }

  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> mag(0.8, 1.2), ang(-0.7, 0.7);
  Eigen::FullPivLU<MatC> lu(ynn);
  REQUIRE(lu.isInvertible());

  for (int trial = 0; trial < 100; ++trial) {
    VecC e(ng);
    for (int k = 0; k < ng; ++k) e[k] = std::polar(mag(rng), ang(rng));
    VecC i_red = red.y_red * e;
    VecC v_net = lu.solve(-(yng * e));
    VecC i_full = yng.transpose() * v_net + ygg * e;
    double rel = (i_red - i_full).norm() / i_full.norm();
    CHECK(rel < 1e-10);
    // recovered bus voltages agree as well
    VecC v_rec = red.recovery * e;
    CHECK((v_rec - v_net).norm() / v_net.norm() < 1e-10);
  }
}

TEST_CASE("bus fault collapses the faulted bus voltage") {
  GridCase gc = kundur();
  PowerFlowSolution pf = solve_power_flow(gc);
  MachineSystemParams mp = to_system_base(gc);
  NetworkContext ctx(gc, pf);
  DynamicState x0 = init_dynamic_state(gc, pf, ctx.reduced(), mp);
  ctx.apply_event({EventKind::BusFault, 1.0, 8, 1e4});
  NetworkOutputs out = electrical_outputs(ctx.reduced(), x0.delta, x0.eqp);
  int row8 = gc.bus_index(8);
  CHECK(std::abs(out.bus_voltage[row8]) < 0.01);
  CHECK(ctx.has_fault());
}

TEST_CASE("fault apply and clear restores the reduction exactly") {
  GridCase gc = kundur();
  PowerFlowSolution pf = solve_power_flow(gc);
  NetworkContext ctx(gc, pf);
  MatC before = ctx.reduced().y_red;

  ctx.apply_event({EventKind::BusFault, 1.0, 8, 1e4});
  CHECK((ctx.reduced().y_red - before).cwiseAbs().maxCoeff() > 1e-3);
  ctx.apply_event({EventKind::FaultClear, 1.1, 8, 0.0});
  CHECK((ctx.reduced().y_red - before).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(ctx.apply_event({EventKind::FaultClear, 1.2, 8, 0.0}), ConfigError);
}

TEST_CASE("line trip and load step perturb the reduction") {
  GridCase gc = kundur();
  PowerFlowSolution pf = solve_power_flow(gc);
  NetworkContext ctx(gc, pf);
  MatC base = ctx.reduced().y_red;

  NetworkContext trip_ctx(gc, pf);
  trip_ctx.apply_event({EventKind::LineTrip, 1.0, 6, 0.0});  // one tie circuit
  CHECK((trip_ctx.reduced().y_red - base).cwiseAbs().maxCoeff() > 1e-4);

  NetworkContext load_ctx(gc, pf);
  load_ctx.apply_event({EventKind::LoadStep, 1.0, 7, 100.0});
  CHECK((load_ctx.reduced().y_red - base).cwiseAbs().maxCoeff() > 1e-5);
}

TEST_CASE("pv shunts scale with the fluctuation factor") {
  GridCase gc = kundur();
  PowerFlowSolution pf = solve_power_flow(gc, {}, {100.0, 100.0});
  NetworkContext ctx(gc, pf, {100.0, 100.0});
  MatC base = ctx.reduced().y_red;
  ctx.set_pv_scale(1.1);
  CHECK((ctx.reduced().y_red - base).cwiseAbs().maxCoeff() > 1e-8);
  ctx.set_pv_scale(1.0);
  CHECK((ctx.reduced().y_red - base).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("isolated bus makes the reduction singular") {
  MatC ybus = MatC::Zero(2, 2);
  ybus(0, 0) = Cplx(1.0, -5.0);  // bus 1 grounded through a shunt; bus 2 floats
  VecC shunts = VecC::Zero(2);
  std::vector<InternalBranch> br = {{0, Cplx(0.0, -3.0)}};
  CHECK_THROWS_AS(kron_reduce(ybus, shunts, br), NumericalError);
}
