#include <doctest.h>

#include <cmath>
#include <functional>

#include "neck/correctors.hpp"
#include "neck/errors.hpp"
#include "neck/verifier.hpp"

using namespace neck;

namespace {

NeckProfile quad_flat(double eps) {
  return make_profile("quad-flat", eps, ProfileFn({0, 0, 1}), ProfileFn({0}));
}

// Largest |field| over a 101 x 33 sampling grid of the neck |x1| <= R.
double sup_on_grid(const NeckProfile& p, const std::vector<PolyField>& fields) {
  const FieldSampler sampler(fields);
  double worst = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double x1 = -p.R + 2 * p.R * i / 100.0;
    const auto fiber = sampler.at(x1);
    for (double x2 : fiber_nodes(p, x1)) {
      for (std::size_t k = 0; k < fields.size(); ++k) worst = std::max(worst, std::abs(fiber.value(k, x2)));
    }
  }
  return worst;
}

double sup_coeff(const NeckProfile& p, std::vector<Coeff> cs, std::function<double(std::size_t, double)> target) {
  const Program prog(*cs.front().pool(), cs);
  std::vector<double> out(cs.size()), work;
  double worst = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double x1 = -p.R + 2 * p.R * i / 200.0;
    prog.eval(x1, out, work);
    for (std::size_t k = 0; k < cs.size(); ++k) worst = std::max(worst, std::abs(out[k] - target(k, x1)));
  }
  return worst;
}

double value(const PolyField& f, double x1, double x2) {
  const PolyField fs[] = {f};
  return FieldSampler(fs).value(0, x1, x2);
}

double flux(const PolyField& f, const NeckProfile& p, double x1) {
  // composite Simpson across the gap; exact up to rounding for the cubic pieces, and
  // f is a polynomial of modest degree
  const int n = 400;
  const PolyField fs[] = {f};
  const FieldSampler sampler(fs);
  const auto fiber = sampler.at(x1);
  const double a = bottom_wall(p, x1), h = delta(p, x1) / n;
  double sum = fiber.value(0, a) + fiber.value(0, a + n * h);
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * fiber.value(0, a + i * h);
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("mode 1, first level: coefficient values at the midline") {
  // symmetric: F = 0 and G = (h1' + h2')/2, so at the midline v = (1/2, -G/4)
  const NeckProfile sym = named_profile("sym-quadratic", 0.01);
  const CorrectorHierarchy hs = build_hierarchy(sym, 1, 1);
  CHECK(value(hs.level(1).v.u1, 0.1, 0.0) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(value(hs.level(1).v.u2, 0.1, 0.0) == doctest::Approx(-0.1 / 4).epsilon(1e-13));

  // h1 = x1^2, h2 = 0: F = -3 (h1 - h2) / delta = -1.5 at x1 = 0.1, midline x2 = 0.005
  const NeckProfile flat = quad_flat(0.01);
  const CorrectorHierarchy hf = build_hierarchy(flat, 1, 1);
  CHECK(value(hf.level(1).v.u1, 0.1, 0.005) == doctest::Approx(0.5 + 1.5 / 4).epsilon(1e-13));
}

TEST_CASE("mode 1, first level: cancellation of the x2 pressure derivative") {
  const NeckProfile p = named_profile("asym-quadratic", 0.01);
  const CorrectorHierarchy h = build_hierarchy(p, 1, 1);
  const CorrectorLevel& l1 = h.level(1);
  const PolyField id = partial(l1.v.u2, Axis::X2, 2) * p.mu - partial(l1.pbar.poly, Axis::X2);
  CHECK(sup_on_grid(p, {id}) < 1e-8);
}

TEST_CASE("boundary traces of the first level for each mode") {
  const NeckProfile p = named_profile("asym-quadratic", 0.01);
  for (int alpha : {1, 2, 3}) {
    CAPTURE(alpha);
    const CorrectorHierarchy h = build_hierarchy(p, alpha, 1);
    const VectorField2& v = h.level(1).v;
    auto want = [&](std::size_t k, double x1) -> double {
      switch (k) {
        case 0: return alpha == 1 ? 1.0 : alpha == 2 ? 0.0 : top_wall(p, x1);
        case 1: return alpha == 1 ? 0.0 : alpha == 2 ? 1.0 : -x1;
        default: return 0.0;
      }
    };
    const double err = sup_coeff(p,
                                 {trace(v.u1, Side::Top), trace(v.u2, Side::Top), trace(v.u1, Side::Bottom),
                                  trace(v.u2, Side::Bottom)},
                                 want);
    CHECK(err < 1e-10);
  }
  const CorrectorHierarchy h3 = build_hierarchy(p, 3, 1);
  const double t1 = coeff_eval(trace(h3.level(1).v.u1, Side::Top), 0.1);
  const double t2 = coeff_eval(trace(h3.level(1).v.u2, Side::Top), 0.1);
  CHECK(std::abs(t1 - (0.005 + 0.01)) < 1e-10);
  CHECK(std::abs(t2 + 0.1) < 1e-10);
}

TEST_CASE("mode 2, first level: leading coefficient 6 x1 / delta through the flux") {
  // int (F b) dx2 = -F delta / 6 while every flux correction carries no net flux
  const NeckProfile p = named_profile("sym-quadratic", 0.01);
  const CorrectorHierarchy h = build_hierarchy(p, 2, 1);
  const double F = 6 * 0.1 / delta(p, 0.1);
  CHECK(F == doctest::Approx(30.0).epsilon(1e-13));
  CHECK(flux(h.level(1).v.u1, p, 0.1) == doctest::Approx(-F * delta(p, 0.1) / 6).epsilon(1e-9));
  CHECK(flux(h.level(1).v.u1, p, -0.3) == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("mode 3, first level: value at the origin") {
  // F(0, 0) = 1 and the bubble equals -1/4 there
  const NeckProfile p = named_profile("sym-quadratic", 0.01);
  const CorrectorHierarchy h = build_hierarchy(p, 3, 1);
  CHECK(value(h.level(1).v.u1, 0.0, 0.0) == doctest::Approx(-0.25).epsilon(1e-13));
}

TEST_CASE("divergence, traces and residual degrees through four levels") {
  for (const char* id : {"sym-quadratic", "asym-quadratic"}) {
    for (double eps : {1e-2, 1e-3}) {
      const NeckProfile p = named_profile(id, eps);
      for (int alpha : {1, 2, 3}) {
        const CorrectorHierarchy h = build_hierarchy(p, alpha, 4);
        for (int l = 1; l <= 4; ++l) {
          CAPTURE(id);
          CAPTURE(eps);
          CAPTURE(alpha);
          CAPTURE(l);
          const StructureCheck sc = certify_level(h, l);
          CHECK(sc.max_divergence < 1e-8);
          CHECK(sc.max_trace_error < 1e-10);
          CHECK(sc.degrees == sc.expected);
        }
      }
    }
  }
}

TEST_CASE("residual degrees of the construction") {
  const NeckProfile p = named_profile("asym-quadratic", 0.01);
  CHECK(build_hierarchy(p, 1, 2).level(2).f_cumulative.u1.degree() == 4);
  CHECK(build_hierarchy(p, 1, 2).level(2).f_cumulative.u2.degree() == 5);
  CHECK(build_hierarchy(p, 2, 2).level(2).f_cumulative.u1.degree() == 6);
  CHECK(build_hierarchy(p, 2, 2).level(2).f_cumulative.u2.degree() == 7);
  CHECK(expected_residual_degrees(1, 3) == std::pair{6, 7});
  CHECK(expected_residual_degrees(2, 3) == std::pair{8, 9});
  CHECK(expected_residual_degrees(1, 3, true) == std::pair{5, 6});
}

TEST_CASE("stored residual equals the residual recomputed from the fields") {
  for (int alpha : {1, 2, 3}) {
    const NeckProfile p = named_profile("asym-quadratic", 0.01);
    const CorrectorHierarchy h = build_hierarchy(p, alpha, 3);
    for (int l = 1; l <= 3; ++l) {
      const VectorField2 lap = laplacian(h.cumulative_v(l));
      const VectorField2 gp = gradient_p(h.cumulative_p(l));
      const VectorField2& f = h.level(l).f_cumulative;
      const double scale = sup_on_grid(p, {f.u1, f.u2});
      const double diff = sup_on_grid(p, {lap.u1 * p.mu - gp.u1 - f.u1, lap.u2 * p.mu - gp.u2 - f.u2});
      CAPTURE(alpha);
      CAPTURE(l);
      CHECK(diff <= 1e-9 * scale);
    }
  }
}

TEST_CASE("cumulative sums equal level-wise sums") {
  const CorrectorHierarchy h = build_hierarchy(named_profile("sym-quartic", 0.01), 2, 3);
  VectorField2 v = h.level(1).v;
  ScalarPressure q = h.level(1).pbar;
  for (int l = 2; l <= 3; ++l) {
    v = v + h.level(l).v;
    q = q + h.level(l).pbar;
  }
  const VectorField2 c = h.cumulative_v(3);
  const ScalarPressure cq = h.cumulative_p(3);
  CHECK(sup_on_grid(h.profile, {v.u1 - c.u1, v.u2 - c.u2, q.poly - cq.poly}) < 1e-12);
  CHECK(sup_coeff(h.profile, {q.pure - cq.pure}, [](std::size_t, double) { return 0.0; }) < 1e-12);
}

TEST_CASE("level cap and Green-function preconditions") {
  const NeckProfile p = named_profile("sym-quadratic", 0.01);
  CHECK_THROWS_AS(build_hierarchy(p, 1, kMaxLevels + 1), InputError);
  CHECK_THROWS_AS(build_hierarchy(p, 4, 1), InputError);
  CHECK_THROWS_AS(build_symmetric_green(named_profile("asym-quadratic", 0.01), 2), InputError);
}

TEST_CASE("Green kernel at the midpoint") {
  CHECK(green_kernel(0.02, 0.0, 0.0) == doctest::Approx(-0.005).epsilon(1e-15));
  // symmetric in its two arguments and zero on the walls
  CHECK(green_kernel(0.02, 0.003, -0.004) == doctest::Approx(green_kernel(0.02, -0.004, 0.003)));
  CHECK(green_kernel(0.02, 0.01, 0.002) == 0.0);
}

TEST_CASE("Green construction: first level and the level-2 identity") {
  const NeckProfile p = named_profile("sym-quadratic", 0.01);
  const CorrectorHierarchy g = build_symmetric_green(p, 3);
  CHECK(value(g.level(1).v.u1, 0.0, 0.005) == doctest::Approx(1.0).epsilon(1e-14));
  const PolyField id = partial(g.level(2).v.u1, Axis::X2, 2) * p.mu + g.level(1).f_cumulative.u1;
  CHECK(sup_on_grid(p, {id}) < 1e-8);
  for (int l = 1; l <= 3; ++l) {
    const StructureCheck sc = certify_level(g, l);
    CHECK(sc.max_divergence < 1e-8);
    CHECK(sc.max_trace_error < 1e-10);
    CHECK(sc.degrees == sc.expected);
  }
}

TEST_CASE("Green construction against an independent symbolic derivation") {
  // Values from tests/oracles/green_level2.py (sympy, exact rational arithmetic):
  // x1, x2 / delta, then v1, v2, pbar, f1, f2 of the second level.
  struct Row {
    double x1, frac, v1, v2, p, f1, f2;
  };
  const Row rows[] = {
      {0.1, 0.3, 0.00064, 0.00010666666666666667, -0.02, -0.076, 0.0912},
      {0.3, -0.2, -0.00728, 0.0033432, 0.01568, 0.44202666666666667, 0.202344},
      {-0.25, 0.4, 0.00426, -0.001118625, 0.064735632183908046, -2.3153642489100277, -0.015057669441141498},
  };
  const NeckProfile p = named_profile("sym-quadratic", 0.01);
  const CorrectorHierarchy g = build_symmetric_green(p, 2);
  const CorrectorHierarchy a = build_hierarchy(p, 1, 2);
  for (const CorrectorHierarchy* h : {&g, &a}) {
    const CorrectorLevel& l2 = h->level(2);
    const PolyField fs[] = {l2.v.u1, l2.v.u2, l2.f_cumulative.u1, l2.f_cumulative.u2};
    const FieldSampler sampler(fs);
    for (const Row& r : rows) {
      const double x2 = r.frac * delta(p, r.x1);
      CAPTURE(r.x1);
      CHECK(sampler.value(0, r.x1, x2) == doctest::Approx(r.v1).epsilon(1e-10));
      CHECK(sampler.value(1, r.x1, x2) == doctest::Approx(r.v2).epsilon(1e-10));
      CHECK(sampler.value(2, r.x1, x2) == doctest::Approx(r.f1).epsilon(1e-10));
      CHECK(sampler.value(3, r.x1, x2) == doctest::Approx(r.f2).epsilon(1e-10));
    }
  }
  // the Green pressure has no pure part and is pinned at x2 = 0
  const PolyField ps[] = {g.level(2).pbar.poly};
  const FieldSampler ps_sampler(ps);
  CHECK(g.level(2).pbar.pure.is_zero());
  for (const Row& r : rows)
    CHECK(ps_sampler.value(0, r.x1, r.frac * delta(p, r.x1)) == doctest::Approx(r.p).epsilon(1e-10));
}

TEST_CASE("general and Green constructions agree on the symmetric profile") {
  const NeckProfile p = named_profile("sym-quadratic", 1e-3);
  const CorrectorHierarchy a = build_hierarchy(p, 1, 3);
  const CorrectorHierarchy g = build_symmetric_green(p, 3);
  // level 1 first components: both reduce to x2 / delta + 1/2
  CHECK(sup_on_grid(p, {a.level(1).v.u1 - PolyField(a.sym.pool.get(), {a.sym.pool->constant(0.5), pow(a.sym.delta, -1)})}) <
        1e-12);
  CHECK(sup_on_grid(p, {g.level(1).v.u1 - PolyField(g.sym.pool.get(), {g.sym.pool->constant(0.5), pow(g.sym.delta, -1)})}) <
        1e-12);
  for (int l = 2; l <= 3; ++l) {
    const double ra = sup_on_grid(p, {a.level(l).f_cumulative.u1, a.level(l).f_cumulative.u2});
    const double rg = sup_on_grid(p, {g.level(l).f_cumulative.u1, g.level(l).f_cumulative.u2});
    CHECK(ra / rg <= 10.0);
    CHECK(rg / ra <= 10.0);
  }
}

TEST_CASE("s-expression dump is stable") {
  const NeckProfile p = named_profile("asym-quadratic", 0.01);
  const std::string a = hierarchy_to_sexpr(build_hierarchy(p, 3, 2));
  const std::string b = hierarchy_to_sexpr(build_hierarchy(p, 3, 2));
  CHECK(a == b);
  CHECK(a.rfind("(hierarchy asym-quadratic (mode 3) (green 0) (eps 0.01) (levels 2))", 0) == 0);
  CHECK(a.find("(level 2)") != std::string::npos);
}
