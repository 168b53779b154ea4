#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lfo/admittance.hpp"

using namespace lfo;

TEST_CASE("two-bus admittance follows the sign convention") {
  GridCase gc = parse_grid_case(R"({
    "buses": [
      {"id": 1, "kind": "slack"},
      {"id": 2, "kind": "PQ"}
    ],
    "lines": [{"from_bus": 1, "to_bus": 2, "r": 0.0, "x": 0.1}],
    "generators": [{"bus": 1, "rating": 100.0, "H": 5.0, "Xd": 1.8,
                    "Xd_prime": 0.3, "Td0_prime": 8.0}]
  })");
  MatC y = build_admittance(gc);
  // series admittance 1/(j0.1) = -10j; off-diagonal is its negation
  CHECK(y(0, 1).real() == doctest::Approx(0.0));
  CHECK(y(0, 1).imag() == doctest::Approx(10.0));
  CHECK(std::abs(y(0, 1)) == doctest::Approx(10.0));
  CHECK(y(0, 0).imag() == doctest::Approx(-10.0));
  CHECK((y - y.transpose()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("charging shunt lands on both diagonals only") {
  GridCase gc = parse_grid_case(R"({
    "buses": [{"id": 1, "kind": "slack"}, {"id": 2, "kind": "PQ"}],
    "lines": [{"from_bus": 1, "to_bus": 2, "r": 0.01, "x": 0.1, "b_shunt": 0.2}],
    "generators": [{"bus": 1, "rating": 100.0, "H": 5.0, "Xd": 1.8,
                    "Xd_prime": 0.3, "Td0_prime": 8.0}]
  })");
  MatC y = build_admittance(gc);
  Cplx ys = 1.0 / Cplx(0.01, 0.1);
  CHECK(y(0, 0).real() == doctest::Approx(ys.real()));
  CHECK(y(0, 0).imag() == doctest::Approx(ys.imag() + 0.1));
  CHECK(y(0, 1).real() == doctest::Approx(-ys.real()));
  CHECK(y(0, 1).imag() == doctest::Approx(-ys.imag()));
}

TEST_CASE("out-of-service lines are skipped") {
  GridCase gc = parse_grid_case(R"({
    "buses": [{"id": 1, "kind": "slack"}, {"id": 2, "kind": "PQ"}],
    "lines": [
      {"from_bus": 1, "to_bus": 2, "r": 0.0, "x": 0.1},
      {"from_bus": 1, "to_bus": 2, "r": 0.0, "x": 0.1, "in_service": false}
    ],
    "generators": [{"bus": 1, "rating": 100.0, "H": 5.0, "Xd": 1.8,
                    "Xd_prime": 0.3, "Td0_prime": 8.0}]
  })");
  MatC y = build_admittance(gc);
  CHECK(y(0, 1).imag() == doctest::Approx(10.0));  // one circuit, not two
}

// Oracle: the full 11-bus matrix assembled with independent bookkeeping
// (explicit per-bus accumulation over a literal branch list).
TEST_CASE("kundur case matches an independently assembled matrix") {
  GridCase gc = load_grid_case(std::string(LFO_SOURCE_DATA_DIR) + "/kundur_2area.json");
  MatC y = build_admittance(gc);
  REQUIRE(y.rows() == 11);

  struct Branch { int f, t; double r, x, b; };
  const Branch branches[] = {
      {1, 5, 0.0, 0.016667, 0.0},   {2, 6, 0.0, 0.016667, 0.0},
      {3, 11, 0.0, 0.016667, 0.0},  {4, 10, 0.0, 0.016667, 0.0},
      {5, 6, 0.0025, 0.025, 0.04375}, {6, 7, 0.001, 0.01, 0.0175},
      {7, 8, 0.011, 0.11, 0.1925},  {7, 8, 0.011, 0.11, 0.1925},
      {8, 9, 0.011, 0.11, 0.1925},  {8, 9, 0.011, 0.11, 0.1925},
      {9, 10, 0.001, 0.01, 0.0175}, {10, 11, 0.0025, 0.025, 0.04375},
  };

  MatC expect = MatC::Zero(11, 11);
  for (const auto& br : branches) {
    int i = br.f - 1, j = br.t - 1;  // ids are 1..11 in file order
    Cplx ys = Cplx(1.0, 0.0) / Cplx(br.r, br.x);
    expect(i, i) += ys + Cplx(0, br.b / 2);
    expect(j, j) += ys + Cplx(0, br.b / 2);
    expect(i, j) -= ys;
    expect(j, i) -= ys;
  }

  CHECK((y - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((y - y.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("line flow balances power and losses") {
  Line ln{1, 2, 0.01, 0.1, 0.0, true};
  Cplx vf = std::polar(1.02, 0.1);
  Cplx vt = std::polar(0.98, -0.05);
  LineFlow lf = line_flow(ln, vf, vt);

  // with no charging, loss = |I|^2 r and flows sum to the loss
  Cplx i = (vf - vt) / Cplx(0.01, 0.1);
  double loss = std::norm(i) * 0.01;
  CHECK(lf.p_from + lf.p_to == doctest::Approx(loss).epsilon(1e-10));
  CHECK(lf.p_from > 0.0);
  CHECK(lf.p_to < 0.0);
}
