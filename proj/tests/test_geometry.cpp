#include <doctest.h>

#include <cmath>
#include <random>

#include "neck/errors.hpp"
#include "neck/geometry.hpp"

using namespace neck;

namespace {

NeckProfile quad_flat(double eps) {
  return make_profile("quad-flat", eps, ProfileFn({0, 0, 1}), ProfileFn({0}));
}

}  // namespace

TEST_CASE("gap width by direct substitution") {
  const NeckProfile sym = named_profile("sym-quadratic", 0.01);
  CHECK(delta(sym, 0.0) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(delta(sym, 0.1) == doctest::Approx(0.02).epsilon(1e-14));
  CHECK(delta(quad_flat(0.01), 0.2) == doctest::Approx(0.05).epsilon(1e-14));
}

TEST_CASE("gap width outside the chart is a domain error") {
  const NeckProfile p = named_profile("sym-quadratic", 0.01);
  CHECK_THROWS_AS(delta(p, 2.0 * p.R + 0.01), DomainError);
  CHECK_NOTHROW(delta(p, -2.0 * p.R));
}

TEST_CASE("gap width is even for even profiles") {
  for (const auto& id : named_profile_ids()) {
    const NeckProfile p = named_profile(id, 1e-3);
    for (double x : {0.05, 0.2, 0.7, 1.0}) CHECK(delta(p, x) == delta(p, -x));
  }
}

TEST_CASE("keller function boundary and midline values") {
  const NeckProfile p = named_profile("asym-quadratic", 0.01);
  for (double x1 : {-0.4, -0.1, 0.0, 0.25}) {
    CHECK(keller(p, x1, top_wall(p, x1)) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(keller(p, x1, bottom_wall(p, x1)) == doctest::Approx(-0.5).epsilon(1e-14));
    const double mid = 0.5 * (p.h1.eval(x1) - p.h2.eval(x1));
    CHECK(std::abs(keller(p, x1, mid)) < 1e-14);
  }
  const NeckProfile sym = named_profile("sym-quadratic", 0.01);
  CHECK(keller(sym, 0.0, 0.01 / 4) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("keller function rejects points outside the gap") {
  const NeckProfile p = named_profile("sym-quadratic", 0.01);
  CHECK_THROWS_AS(keller(p, 0.0, 0.02), DomainError);
}

TEST_CASE("keller gradient closed-form values") {
  const NeckProfile sym = named_profile("sym-quadratic", 0.01);
  CHECK(keller_grad(sym, 0.0, 0.003).first == 0.0);
  // delta(0.1) = 0.02 on the symmetric quadratic profile
  CHECK(keller_grad(sym, 0.1, 0.004).second == doctest::Approx(50.0).epsilon(1e-13));
  CHECK(keller_grad(sym, -0.1, -0.009).second == doctest::Approx(50.0).epsilon(1e-13));
}

TEST_CASE("keller gradient against central differences") {
  auto fd_check = [](const NeckProfile& p, double x1, double x2) {
    const double h = 1e-6 * delta(p, x1);
    const double d1 = (keller(p, x1 + h, x2) - keller(p, x1 - h, x2)) / (2 * h);
    const double d2 = (keller(p, x1, x2 + h) - keller(p, x1, x2 - h)) / (2 * h);
    const auto g = keller_grad(p, x1, x2);
    const double scale = std::hypot(g.first, g.second);
    CHECK(std::abs(g.first - d1) <= 1e-6 * scale);
    CHECK(std::abs(g.second - d2) <= 1e-6 * scale);
  };
  fd_check(quad_flat(0.01), 0.1, 0.0);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& id : named_profile_ids()) {
    const NeckProfile p = named_profile(id, 0.01);
    for (int i = 0; i < 1000; ++i) {
      const double x1 = 0.95 * p.R * u(rng);
      // interior point, kept a little away from the walls so the stencil stays inside
      const double x2 = 0.5 * (top_wall(p, x1) + bottom_wall(p, x1)) + 0.45 * delta(p, x1) * u(rng);
      fd_check(p, x1, x2);
    }
  }
}

TEST_CASE("bubble vanishes on both walls") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const NeckProfile p = named_profile("sym-quartic", 0.003);
  for (int i = 0; i < 1000; ++i) {
    const double x1 = 2.0 * p.R * u(rng);
    for (double x2 : {top_wall(p, x1), bottom_wall(p, x1)}) {
      const double k = keller(p, x1, x2);
      CHECK(std::abs(k * k - 0.25) < 1e-12);
    }
  }
}

TEST_CASE("profile construction validates the neck assumptions") {
  CHECK_THROWS_AS(make_profile("bad", 0.01, ProfileFn({0, 1, 1}), ProfileFn({0, 0, 1})), InputError);
  CHECK_THROWS_AS(make_profile("bad", 0.01, ProfileFn({0.1, 0, 1}), ProfileFn({0, 0, 1})), InputError);
  CHECK_THROWS_AS(make_profile("bad", -0.01, ProfileFn({0, 0, 1}), ProfileFn({0, 0, 1})), InputError);
  CHECK_THROWS_AS(make_profile("bad", 0.01, ProfileFn({0, 0, -1}), ProfileFn({0, 0, 0.5})), InputError);
  const NeckProfile ok = make_profile("ok", 0.01, ProfileFn({0, 0, 0.5}), ProfileFn({0, 0, 0.5}));
  CHECK(ok.kappa > 0.0);
}

TEST_CASE("profile derivatives are exact and vanish above the degree") {
  const ProfileFn f({0, 0, 0.5, 0, 1});
  CHECK(f.eval(0.3) == doctest::Approx(0.5 * 0.09 + 0.0081));
  CHECK(f.eval(0.3, 1) == doctest::Approx(0.3 + 4 * 0.027));
  CHECK(f.eval(0.3, 4) == doctest::Approx(24.0));
  CHECK(f.eval(0.3, 5) == 0.0);
  CHECK(ProfileFn::half_square() == ProfileFn({0, 0, 0.5}));
}

TEST_CASE("named profiles") {
  CHECK(named_profile("sym-quadratic", 0.01).symmetric);
  CHECK_FALSE(named_profile("asym-quadratic", 0.01).symmetric);
  // flat-plus-quartic: the quartic term sits on one wall only
  CHECK_FALSE(named_profile("sym-quartic", 0.01).symmetric);
  CHECK(named_profile("sym-quartic", 0.01).h1.eval(0.5) == doctest::Approx(0.125 + 0.0625));
  CHECK_THROWS_AS(named_profile("nope", 0.01), InputError);
  CHECK(with_eps(named_profile("asym-quadratic", 0.01), 1e-4).eps == 1e-4);
}

TEST_CASE("profile JSON round trip and errors") {
  const nlohmann::json j = {{"eps", 0.02}, {"R", 0.4}, {"mu", 2.0}, {"h1", {{"poly", {0, 0, 1}}}},
                            {"h2", {{"poly", {0, 0, 0.5}}}}};
  const NeckProfile p = profile_from_json(j, "file");
  CHECK(p.eps == 0.02);
  CHECK(p.R == 0.4);
  CHECK(p.mu == 2.0);
  const NeckProfile q = profile_from_json(profile_to_json(p), "file");
  CHECK(q.h1 == p.h1);
  CHECK(q.h2 == p.h2);
  CHECK(q.kappa == doctest::Approx(p.kappa));

  nlohmann::json missing = j;
  missing.erase("eps");
  CHECK_THROWS_AS(profile_from_json(missing, "x"), InputError);
  nlohmann::json bad = j;
  bad["h1"] = 3;
  CHECK_THROWS_AS(profile_from_json(bad, "x"), InputError);
  nlohmann::json liar = j;
  liar["symmetric"] = true;
  CHECK_THROWS_AS(profile_from_json(liar, "x"), InputError);
}
