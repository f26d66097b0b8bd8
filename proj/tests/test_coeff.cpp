#include <doctest.h>

#include <cmath>
#include <random>

#include "neck/correctors.hpp"
#include "neck/errors.hpp"

using namespace neck;

namespace {

NeckProfile quad_flat(double eps) {
  return make_profile("quad-flat", eps, ProfileFn({0, 0, 1}), ProfileFn({0}));
}

double table_eval(Coeff c, double x1) { return Program(*c.pool(), std::span<const Coeff>(&c, 1)).eval1(x1); }

}  // namespace

TEST_CASE("constants, integrals of constants and of profile slopes") {
  CoeffPool pool(quad_flat(0.01));
  CHECK(coeff_eval(pool.constant(3.5), 0.123) == 3.5);
  CHECK(coeff_eval(antideriv(pool.constant(2.0), 0.0), 0.3) == doctest::Approx(0.6).epsilon(1e-14));
  const Coeff slope_integral = antideriv(pool.profile_deriv(1, 1), 0.0);
  CHECK(coeff_eval(slope_integral, 0.2) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(table_eval(slope_integral, 0.2) == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("derivative of x1 squared") {
  CoeffPool pool(quad_flat(0.01));
  const Coeff sq = pool.x1() * pool.x1();
  CHECK(coeff_eval(coeff_diff(sq), 0.3) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(coeff_eval(coeff_diff(sq, 2), -0.4) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("local simplification rules") {
  CoeffPool pool(quad_flat(0.01));
  const Coeff x = pool.x1();
  CHECK((x * 0.0).is_zero());
  CHECK(x * 1.0 == x);
  CHECK(x + 0.0 == x);
  CHECK((pool.constant(2.0) * pool.constant(3.0)).const_value() == 6.0);
  CHECK(coeff_diff(pool.constant(4.0)).is_zero());
  // hash-consing: structurally equal expressions share one node
  CHECK(x * pool.profile_deriv(1, 0) == x * pool.profile_deriv(1, 0));
}

TEST_CASE("negative powers need a certified positive base") {
  NeckSymbols s = make_symbols(quad_flat(0.01));
  CHECK_NOTHROW(pow(s.delta, -2));
  CHECK_THROWS_AS(pow(s.diff, -1), ConstructionError);
  CHECK_THROWS_AS(s.x1 / s.h1, ConstructionError);
  CHECK_THROWS_AS(s.x1 / 0.0, ConstructionError);
}

TEST_CASE("evaluation outside [-2R, 2R] and over the derivative cap") {
  NeckProfile p = named_profile("sym-quartic", 0.01);
  p.M = 2;
  CoeffPool pool(p);
  CHECK_THROWS_AS(coeff_eval(pool.x1(), 1.5), DomainError);
  CHECK_THROWS_AS(coeff_eval(pool.profile_deriv(1, 3), 0.1), CapabilityError);
  CHECK_THROWS_AS(coeff_eval(pool.x1(), 0.1, 0.0), InputError);
}

TEST_CASE("fundamental theorem: d/dx1 of an antiderivative is its integrand") {
  NeckSymbols s = make_symbols(named_profile("asym-quadratic", 1e-3));
  const Coeff g = s.diff * pow(s.delta, -3);
  const Coeff G = antideriv(g, s.pool->profile().R);
  CHECK(coeff_diff(G) == g);

  const Program prog(*s.pool, std::span<const Coeff>(&g, 1));
  auto central = [&](double x1, double h) { return (coeff_eval(G, x1 + h) - coeff_eval(G, x1 - h)) / (2 * h); };
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 100; ++i) {
    const double x1 = u(rng);
    const double exact = coeff_eval(g, x1);
    CHECK(std::abs(prog.eval1(x1) - exact) <= 1e-8 * std::abs(exact) + 1e-12);
    // Richardson-extrapolated central difference of the integral itself
    const double h = 1e-2 * delta(s.pool->profile(), x1);
    const double fd = (4.0 * central(x1, 0.5 * h) - central(x1, h)) / 3.0;
    CHECK(std::abs(fd - exact) <= 1e-6 * std::abs(exact) + 1e-8);
  }
}

TEST_CASE("quotient derivative against central differences") {
  NeckSymbols s = make_symbols(named_profile("asym-quadratic", 0.01));
  const Coeff q = s.h1 / s.delta;
  const Coeff dq = coeff_diff(q);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 100; ++i) {
    const double x1 = u(rng);
    const double h = 1e-4 * delta(s.pool->profile(), x1);
    const double fd = (coeff_eval(q, x1 + h) - coeff_eval(q, x1 - h)) / (2 * h);
    const double exact = coeff_eval(dq, x1);
    CHECK(std::abs(fd - exact) <= 1e-6 * std::max(std::abs(exact), 1e-3));
  }
}

TEST_CASE("derivatives of corrector coefficients match differences of their values") {
  const NeckProfile p = named_profile("asym-quadratic", 0.01);
  for (int alpha : {1, 2, 3}) {
    const CorrectorHierarchy h = build_hierarchy(p, alpha, 2);
    const CorrectorLevel& lv = h.level(2);
    std::vector<Coeff> cs{lv.pbar.pure};
    for (const PolyField* f : {&lv.v.u1, &lv.v.u2, &lv.pbar.poly})
      cs.insert(cs.end(), f->coeffs().begin(), f->coeffs().end());
    std::vector<Coeff> roots;
    for (const Coeff& c : cs) {
      roots.push_back(c);
      roots.push_back(coeff_diff(c));
    }
    const Program prog(*h.sym.pool, roots);
    std::vector<double> lo(roots.size()), hi(roots.size()), mid(roots.size()), work;
    std::mt19937_64 rng(alpha);
    std::uniform_real_distribution<double> u(-p.R, p.R);
    for (int i = 0; i < 100; ++i) {
      const double x1 = u(rng);
      const double step = 1e-4 * delta(p, x1);
      prog.eval(x1 - step, lo, work);
      prog.eval(x1 + step, hi, work);
      prog.eval(x1, mid, work);
      for (std::size_t k = 0; k < roots.size(); k += 2) {
        const double fd = (hi[k] - lo[k]) / (2 * step);
        const double exact = mid[k + 1];
        const double scale = std::max(std::abs(exact), 1e-6 * std::abs(mid[k]) / delta(p, x1));
        CHECK(std::abs(fd - exact) <= 1e-5 * scale + 1e-12);
      }
      if (i % 25 == 0) {
        // the direct quadrature route agrees with the compiled table route
        for (std::size_t k = 0; k < roots.size(); k += 2) {
          const double direct = coeff_eval(roots[k], x1);
          CHECK(std::abs(direct - mid[k]) <= 1e-9 * std::max(1.0, std::abs(direct)));
        }
      }
    }
  }
}

TEST_CASE("evaluation is deterministic") {
  const CorrectorHierarchy h = build_hierarchy(named_profile("sym-quartic", 1e-3), 2, 2);
  const Coeff c = h.level(2).pbar.pure;
  const Program a(*h.sym.pool, std::span<const Coeff>(&c, 1));
  const Program b(*h.sym.pool, std::span<const Coeff>(&c, 1));
  for (double x1 : {-0.4, -0.01, 0.0, 0.2}) {
    CHECK(a.eval1(x1) == b.eval1(x1));
    CHECK(coeff_eval(c, x1) == coeff_eval(c, x1));
  }
}

TEST_CASE("antiderivative table against a closed form with a sharp peak") {
  // int_0^x y / (eps + y^2)^2 dy = (1/eps - 1/(eps + x^2)) / 2
  const double eps = 1e-6;
  const AntiderivTable t = AntiderivTable::build(
      [&](double y) { return y / ((eps + y * y) * (eps + y * y)); }, 0.0, 1.0, std::vector<double>{0.0});
  for (double x : {-1.0, -0.3, -1e-3, 0.0, 2e-4, 0.05, 0.7, 1.0}) {
    const double exact = 0.5 * (1.0 / eps - 1.0 / (eps + x * x));
    CHECK(std::abs(t(x) - exact) <= 1e-10 * std::max(1.0, std::abs(exact)));
  }
}

TEST_CASE("golden s-expressions") {
  NeckSymbols s = make_symbols(named_profile("asym-quadratic", 0.01));
  const double R = s.pool->profile().R;
  CHECK(to_sexpr(antideriv(s.diff * pow(s.delta, -3), R) * -6.0) ==
        "(* -6 (int 0.5 (* (+ (h1 0) (* -1 (h2 0))) (^ (+ 0.01 (h1 0) (h2 0)) -3))))");
  CHECK(to_sexpr(coeff_diff(s.h1 / s.delta)) ==
        "(+ (* (^ (+ 0.01 (h1 0) (h2 0)) -1) (h1 1)) (* -1 (* (h1 0) (^ (+ 0.01 (h1 0) (h2 0)) -2) "
        "(+ (h1 1) (h2 1)))))");
  const Coeff roots[] = {s.delta, pow(s.delta, -2)};
  const std::string dag = to_sexpr_dag(roots);
  CHECK(dag.find("= (+ 0.01 (h1 0) (h2 0))") != std::string::npos);
  CHECK(dag.find("-2)") != std::string::npos);
}
