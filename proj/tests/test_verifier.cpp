#include <doctest.h>

#include <cmath>
#include <random>

#include "neck/errors.hpp"
#include "neck/verifier.hpp"

using namespace neck;

namespace {

std::vector<std::pair<double, double>> power_law(double a, double slope, int n, double lo, double hi,
                                                 double noise = 0.0, unsigned seed = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::pair<double, double>> out;
  for (int i = 0; i < n; ++i) {
    const double x = lo * std::pow(hi / lo, double(i) / (n - 1));
    out.emplace_back(x, a * std::pow(x, slope) * (1.0 + noise * u(rng)));
  }
  return out;
}

}  // namespace

TEST_CASE("slope of an exact power law") {
  const auto s = power_law(1.0, 2.0, 12, 1e-3, 1.0);
  const RateFit f = fit_decay_order(s);
  CHECK(std::abs(f.slope - 2.0) < 1e-12);
  CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.samples == 12);
}

TEST_CASE("slope of a noisy power law") {
  const auto s = power_law(3.0, -1.5, 20, 1e-3, 1e-1, 0.01, 42);
  const RateFit f = fit_decay_order(s);
  CHECK(std::abs(f.slope + 1.5) < 0.05);
  CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(0.05));
}

TEST_CASE("slope of constant samples") {
  const auto s = power_law(0.7, 0.0, 8, 1e-2, 1.0);
  CHECK(std::abs(fit_decay_order(s).slope) < 1e-12);
}

TEST_CASE("fit preconditions") {
  CHECK_THROWS_AS(fit_decay_order(power_law(1.0, 1.0, 5, 1e-3, 1.0)), InputError);
  CHECK_THROWS_AS(fit_decay_order(power_law(1.0, 1.0, 10, 0.1, 1.0)), InputError);
  auto bad = power_law(1.0, 1.0, 10, 1e-3, 1.0);
  bad[3].second = 0.0;
  CHECK_THROWS_AS(fit_decay_order(bad), InputError);
  CHECK_THROWS_AS(fit_eps_order(power_law(1.0, 1.0, 4, 1e-4, 1e-1)), InputError);
  CHECK_THROWS_AS(fit_eps_order(power_law(1.0, 1.0, 5, 1e-3, 1e-2)), InputError);
  CHECK(fit_eps_order(power_law(2.0, -1.0, 5, 1e-4, 1e-2)).slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(loglog_fit(power_law(1.0, 0.5, 3, 0.1, 0.2)).slope == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("fiber nodes span the gap") {
  const NeckProfile p = named_profile("asym-quadratic", 0.01);
  const auto nodes = fiber_nodes(p, 0.2, 33);
  REQUIRE(nodes.size() == 33);
  CHECK(std::min(nodes.front(), nodes.back()) == doctest::Approx(bottom_wall(p, 0.2)));
  CHECK(std::max(nodes.front(), nodes.back()) == doctest::Approx(top_wall(p, 0.2)));
}

TEST_CASE("tensor norms count mixed partials with multiplicity") {
  // g = x1 x2: |grad^2 g|^2 = 2 (the mixed partial appears twice)
  NeckSymbols s = make_symbols(named_profile("sym-quadratic", 0.01));
  const PolyField g = s.x2 * s.x1;
  NormEvaluator e;
  e.add_scalar(g, 2, 1.0);
  e.add_scalar(g, 1, 10.0);
  e.compile();
  const double x1 = 0.2, x2 = 0.01;
  CHECK(e.at(x1, x2) == doctest::Approx(std::sqrt(2.0) + 10.0 * std::hypot(x2, x1)).epsilon(1e-13));
}

TEST_CASE("residual decay orders on small examples") {
  const NeckProfile p = named_profile("sym-quadratic", 1e-4);
  const CorrectorHierarchy h1 = build_hierarchy(p, 1, 2);
  CHECK(residual_order(h1, 0).slope >= 0.0 - 0.25);
  const CorrectorHierarchy h2 = build_hierarchy(p, 1, 3);
  CHECK(residual_order(h2, 1).slope >= (2 - 1 - 1) - 0.25);
  CHECK(residual_order(h2, 0).slope >= (2 - 0 - 1) - 0.25);
  const CorrectorHierarchy h3 = build_hierarchy(p, 2, 2);
  CHECK(residual_order(h3, 0).slope >= -0.25);
  CHECK_THROWS_AS(residual_order(h3, 2), InputError);
  CHECK_THROWS_AS(residual_order(build_hierarchy(named_profile("sym-quadratic", 0.1), 1, 2), 0), InputError);
}

TEST_CASE("first corrector blow-up rates in eps") {
  const NeckProfile base = named_profile("sym-quadratic", 1e-2);
  const auto eps = default_eps_sweep();
  for (int m : {0, 1, 2}) {
    BlowupSpec spec;
    spec.k1 = m;
    const RateFit f = corrector_blowup_order(base, eps, spec);
    const double predicted = -(m + 2) / 2.0;
    CHECK(std::abs(f.slope - predicted) < (m == 0 ? 0.01 : 0.05));
  }
  // closed form behind m = 0: d_x2 v1 = 1 / delta at (r sqrt(eps), 0)
  BlowupSpec spec;
  const std::vector<double> two{1e-2, 1e-3};
  CHECK_THROWS_AS(corrector_blowup_order(base, two, spec), InputError);
}

TEST_CASE("structural certification of one level") {
  const CorrectorHierarchy h = build_hierarchy(named_profile("asym-quadratic", 1e-3), 3, 2);
  const StructureCheck sc = certify_level(h, 2);
  CHECK(sc.pass());
  CHECK(sc.degrees == expected_residual_degrees(3, 2));
}

TEST_CASE("envelope exponents") {
  const std::vector<NeckProfile> profiles{named_profile("sym-quadratic", 1e-2), named_profile("asym-quadratic", 1e-2)};
  const std::vector<int> ms{0, 1};
  const auto rows = theorem_rate_table(profiles, ms, envelope_eps_sweep());
  auto find = [&](const std::string& id, int m, const std::string& fit) -> const EnvelopeRow& {
    for (const auto& r : rows)
      if (r.profile_id == id && r.m == m && r.fit == fit) return r;
    FAIL("missing envelope row");
    return rows.front();
  };
  CHECK(std::abs(find("sym-quadratic", 0, "eps").measured.slope + 0.5) < 0.05);
  CHECK(std::abs(find("asym-quadratic", 1, "delta").measured.slope + 2.0) < 0.1);
  CHECK(std::abs(find("sym-quadratic", 1, "delta").measured.slope + 1.5) < 0.1);
  for (const auto& r : rows) {
    CAPTURE(r.profile_id);
    CAPTURE(r.m);
    CAPTURE(r.fit);
    CHECK(r.predicted == (r.fit == "delta" ? -(r.m + (r.symmetric ? 2 : 3)) / 2.0
                                           : 0.5 - (r.m + (r.symmetric ? 2 : 3)) / 2.0));
    CHECK(r.pass);
  }
}
