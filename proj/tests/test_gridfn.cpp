#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fracsparse/gridfn.hpp"
#include "fracsparse/quadrature.hpp"
#include "test_support.hpp"

using namespace fracsparse;

namespace {

DyadicFrame unit_frame(int depth) { return DyadicFrame(1, {Rat(0)}, Rat(1), depth); }
DyadicFrame sym_frame(int depth) { return DyadicFrame(1, {Rat(-1)}, Rat(2), depth); }

IntBox box1(long long lo, long long hi) { return IntBox{1, {lo}, {hi}}; }

}  // namespace

TEST_CASE("power moments in closed form") {
  DyadicFrame f = unit_frame(4);
  // gamma = 0 over [1/4, 1/2)
  CHECK(power_moment(f, 0.0, box1(4, 8)) == doctest::Approx(0.25).epsilon(1e-14));
  // gamma = 1 over [0,1)
  CHECK(power_moment(f, 1.0, box1(0, 16)) == doctest::Approx(0.5).epsilon(1e-14));
  // gamma = -1/2 over [0,1)
  CHECK(power_moment(f, -0.5, box1(0, 16)) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(power_moment(f, -1.0, box1(0, 16)), std::domain_error);
}

TEST_CASE("power moments agree with the quadrature oracle") {
  DyadicFrame f = sym_frame(5);
  testsup::Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    double gamma = rng.uniform(-0.9, 2.5);
    long long lo = rng.below(f.cells_per_axis() - 1);
    long long hi = lo + 1 + rng.below(f.cells_per_axis() - lo);
    double a = f.coord_d(lo, 0), b = f.coord_d(hi, 0);
    double exact = power_moment(f, gamma, box1(lo, hi));
    // independent route: endpoint-transformed adaptive panels
    double oracle;
    if (a < 0.0 && b > 0.0) {
      oracle = quad::integrate_power_right([](double) { return 1.0; }, a, 0.0, gamma) +
               quad::integrate_power_left([](double) { return 1.0; }, 0.0, b, gamma);
      // the transforms above integrate (0-y)^g resp (y-0)^g = |y|^g
    } else {
      oracle = quad::integrate([&](double y) { return std::pow(std::abs(y), gamma); },
                               std::min(std::abs(a), std::abs(b)),
                               std::max(std::abs(a), std::abs(b)));
    }
    CHECK(exact == doctest::Approx(oracle).epsilon(1e-8));
  }
}

TEST_CASE("n=2 power moments via adaptive boxes") {
  DyadicFrame f(2, {Rat(0), Rat(0)}, Rat(1), 2);
  IntBox all = f.domain_box();
  CHECK(power_moment(f, 0.0, all) == doctest::Approx(1.0).epsilon(1e-7));
  // int over [0,1]^2 of x^2+y^2 = 2/3
  CHECK(power_moment(f, 2.0, all) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  // int over [0,1]^2 of 1/|x| = 2 ln(1+sqrt 2)
  CHECK(power_moment(f, -1.0, all) ==
        doctest::Approx(2.0 * std::log(1.0 + std::sqrt(2.0))).epsilon(1e-5));
}

TEST_CASE("local norms: constants, powers, indicators") {
  DyadicFrame f = unit_frame(6);
  GridFunction c = GridFunction::constant(f, -3.0);
  CHECK(local_norm(c, 2.0, box1(8, 24)) == doctest::Approx(3.0).epsilon(1e-14));

  double eps = 0.125, r = 2.0;
  GridFunction pw = GridFunction::power(f, 1.0, (eps - 1.0) / r);
  // ((1/1) int_0^1 x^{eps-1})^{1/r} = eps^{-1/r}
  CHECK(local_norm(pw, r, f.domain_box()) ==
        doctest::Approx(std::pow(eps, -1.0 / r)).epsilon(1e-12));

  GridFunction ind = GridFunction::indicator(f, box1(0, 32));
  CHECK(local_norm(ind, 2.0, f.domain_box()) ==
        doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-14));
}

TEST_CASE("local norm over a cube sticking out keeps the full normalization") {
  DyadicFrame f = unit_frame(4);
  GridFunction one = GridFunction::constant(f, 1.0);
  // box [-16, 16) has measure 2, only half carries f
  CHECK(local_norm(one, 1.0, box1(-16, 16)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(local_norm(one, 0.5, box1(0, 1)), std::invalid_argument);
}

TEST_CASE("local norm scaling and r-monotonicity") {
  DyadicFrame f = unit_frame(5);
  testsup::Rng rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    GridFunction g = testsup::random_step(f, rng, 3, false);
    long long lo = rng.below(16), hi = lo + 1 + rng.below(f.cells_per_axis() - lo);
    IntBox q = box1(lo, hi);
    double c = rng.uniform(0.1, 3.0);
    double r1 = rng.uniform(1.0, 2.0), r2 = r1 + rng.uniform(0.1, 2.0);
    CHECK(local_norm(g.scaled(c), r1, q) ==
          doctest::Approx(c * local_norm(g, r1, q)).epsilon(1e-12));
    CHECK(local_norm(g, r1, q) <= local_norm(g, r2, q) * (1 + 1e-12));
  }
}

TEST_CASE("integral additivity matches the prefix table") {
  DyadicFrame f = sym_frame(6);
  testsup::Rng rng(23);
  GridFunction g = testsup::random_step(f, rng, 4, false);
  double r = 1.7;
  CellTable table = integral_table(g, r);
  for (int trial = 0; trial < 40; ++trial) {
    long long lo = rng.below(f.cells_per_axis());
    long long hi = lo + 1 + rng.below(f.cells_per_axis() - lo);
    double direct = 0.0;
    for (long long cell = lo; cell < hi; ++cell) direct += cell_abs_pow_integral(g, cell, r);
    CHECK(table.box_sum(box1(lo, hi)) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("weighted norms") {
  DyadicFrame f = unit_frame(6);
  GridFunction one = GridFunction::constant(f, 1.0);
  Weight leb = PowerWeight{0.0, 1.0};
  CHECK(weighted_norm(one, 1.5, leb) == doctest::Approx(1.0).epsilon(1e-14));
  // f = chi_[0,1), w = |x|^{1/2}, p = 2: (int_0^1 x)^{1/2} = 2^{-1/2}
  Weight w = PowerWeight{0.5, 1.0};
  CHECK(weighted_norm(one, 2.0, w) == doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-14));
  // homogeneity in f
  GridFunction two = one.scaled(2.0);
  CHECK(weighted_norm(two, 2.0, w) == doctest::Approx(2.0 * weighted_norm(one, 2.0, w)));
}

TEST_CASE("the section-4 pair has eps^{1/p}-flat weighted norms") {
  DyadicFrame f = sym_frame(8);
  double r = 1.0, p = 4.0 / 3.0, prp = 4.0;
  for (int e = 2; e <= 8; ++e) {
    double eps = std::ldexp(1.0, -e);
    GridFunction feps = GridFunction::power(f, 1.0, (eps - 1.0) / r);
    Weight weps = PowerWeight{(1.0 - eps) / (r * prp), 1.0};
    double norm = weighted_norm(feps, p, weps);
    // || f w ||_p = (2/eps)^{1/p} exactly
    CHECK(norm * std::pow(eps, 1.0 / p) ==
          doctest::Approx(std::pow(2.0, 1.0 / p)).epsilon(1e-12));
  }
}

TEST_CASE("weighted norm rejects non-integrable combinations") {
  DyadicFrame f = unit_frame(4);
  GridFunction pw = GridFunction::power(f, 1.0, -0.5);
  Weight w = PowerWeight{-0.6, 1.0};
  CHECK_THROWS_AS(weighted_norm(pw, 1.0, w), std::domain_error);
}

TEST_CASE("superlevel measures") {
  DyadicFrame f = unit_frame(6);
  Weight leb = PowerWeight{0.0, 1.0};
  GridFunction c = GridFunction::constant(f, 0.75);
  CHECK(superlevel_measure(c, 0.75, leb) == doctest::Approx(0.0));
  CHECK(superlevel_measure(c, 0.5, leb) == doctest::Approx(1.0).epsilon(1e-14));
  // g = |x|^{-1/2} on [0,1): {g > 2} = {x < 1/4}
  GridFunction g = GridFunction::power(f, 1.0, -0.5);
  CHECK(superlevel_measure(g, 2.0, leb) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(superlevel_measure(g, 0.0, leb), std::invalid_argument);
}

TEST_CASE("superlevel measure is monotone and right-continuous in lambda") {
  DyadicFrame f = sym_frame(6);
  GridFunction g = GridFunction::power(f, 1.3, -0.4);
  Weight mu = PowerWeight{0.25, 1.0};
  double prev = superlevel_measure(g, 0.25, mu);
  for (double lambda : {0.5, 1.0, 1.7, 2.9, 4.0}) {
    double cur = superlevel_measure(g, lambda, mu);
    CHECK(cur <= prev + 1e-15);
    // right continuity: approaching from above converges to the value
    CHECK(superlevel_measure(g, lambda * (1 + 1e-9), mu) ==
          doctest::Approx(cur).epsilon(1e-6));
    prev = cur;
  }
}

TEST_CASE("grid weights power and combine") {
  DyadicFrame f = unit_frame(3);
  std::vector<double> vals(8, 1.0);
  vals[0] = 2.0;
  GridWeight gw{GridFunction::from_values(f, vals)};
  Weight w{gw};
  Weight w2 = weight_pow(w, 2.0);
  PowTerm t = weight_cell_term(f, w2, 1.0, 0);
  CHECK(t.coeff == doctest::Approx(4.0));
  CHECK(weight_is_global(w) == false);
  CHECK(weight_is_global(Weight{PowerWeight{1.0, 1.0}}));
}

TEST_CASE("weight specs parse") {
  Weight w = parse_weight("power:0.5:2");
  const auto* p = std::get_if<PowerWeight>(&w);
  REQUIRE(p != nullptr);
  CHECK(p->exponent == doctest::Approx(0.5));
  CHECK(p->coeff == doctest::Approx(2.0));
  CHECK_THROWS_AS(parse_weight("exp:1:1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_weight("power:1:-2"), std::invalid_argument);
}

TEST_CASE("function files round-trip") {
  DyadicFrame f = sym_frame(4);
  GridFunction g = GridFunction::power(f, 1.5, -0.25);
  g.set_piece(3, CellPiece{PieceKind::Constant, -2.5, 0.0});
  std::stringstream ss;
  write_function(ss, g);
  GridFunction back = read_function(ss);
  REQUIRE(back.frame() == f);
  for (long long i = 0; i < f.cell_count(); ++i) {
    CHECK(back.piece(i).kind == g.piece(i).kind);
    CHECK(back.piece(i).value == doctest::Approx(g.piece(i).value));
  }
}

TEST_CASE("refinement preserves values and integrals") {
  DyadicFrame f = sym_frame(4);
  testsup::Rng rng(31);
  GridFunction g = testsup::random_step(f, rng, 2, false);
  GridFunction fine = g.refined();
  CHECK(fine.frame().depth() == f.depth() + 1);
  CellTable coarse_table = integral_table(g, 2.0);
  CellTable fine_table = integral_table(fine, 2.0);
  CHECK(coarse_table.total() == doctest::Approx(fine_table.total()).epsilon(1e-13));
}

TEST_CASE("power pieces near the origin must be integrable") {
  DyadicFrame f = unit_frame(3);
  CHECK_THROWS_AS(GridFunction::power(f, 1.0, -1.0), std::domain_error);
  CHECK_THROWS_AS(GridFunction::power(f, -1.0, -0.5), std::invalid_argument);
}
