#include "neck/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "neck/errors.hpp"

namespace neck {

namespace {

void check_x1(const NeckProfile& p, double x1) {
  if (!(std::abs(x1) <= 2.0 * p.R * (1.0 + 1e-12))) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "x1 = %.6g outside neck chart [-%.6g, %.6g]", x1, 2.0 * p.R,
                  2.0 * p.R);
    throw DomainError(buf);
  }
}

void check_point(const NeckProfile& p, double x1, double x2) {
  check_x1(p, x1);
  const double slack = 1e-9 * delta(p, x1);
  if (x2 > top_wall(p, x1) + slack || x2 < bottom_wall(p, x1) - slack) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "point (%.6g, %.6g) outside the neck", x1, x2);
    throw DomainError(buf);
  }
}

}  // namespace

ProfileFn::ProfileFn(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
}

ProfileFn ProfileFn::half_square() { return ProfileFn({0.0, 0.0, 0.5}); }

double ProfileFn::eval(double x, int order) const {
  const int n = static_cast<int>(coeffs_.size());
  if (order >= n) return 0.0;
  double acc = 0.0;
  for (int i = n - 1; i >= order; --i) {
    double c = coeffs_[i];
    for (int j = 0; j < order; ++j) c *= static_cast<double>(i - j);
    acc = acc * x + c;
  }
  return acc;
}

NeckProfile make_profile(std::string id, double eps, ProfileFn h1, ProfileFn h2, double R,
                         double mu, int M, std::optional<double> kappa) {
  if (!(eps > 0.0) || !(R > 0.0) || !(mu > 0.0)) throw InputError("eps, R and mu must be positive");
  if (M < 1) throw InputError("derivative cap M must be at least 1");
  NeckProfile p;
  p.id = std::move(id);
  p.eps = eps;
  p.R = R;
  p.mu = mu;
  p.M = M;
  p.h1 = std::move(h1);
  p.h2 = std::move(h2);
  p.symmetric = p.h1 == p.h2;

  for (int i = 1; i <= 2; ++i) {
    const ProfileFn& h = p.wall(i);
    if (std::abs(h.eval(0.0)) > 1e-12 || std::abs(h.eval(0.0, 1)) > 1e-12)
      throw InputError("profile h" + std::to_string(i) + " must satisfy h(0) = h'(0) = 0");
  }

  // Sample [-2R, 2R]; the polynomial bounds |h| <= C x^2, |h'| <= C|x| follow from
  // h(0) = h'(0) = 0, so only positivity and convexity need checking.
  const int n = 4001;
  double kmin = INFINITY;
  for (int s = 0; s < n; ++s) {
    const double x = -2.0 * R + 4.0 * R * s / (n - 1);
    const double sum = p.h1.eval(x) + p.h2.eval(x);
    if (!(eps + sum > 0.0)) throw InputError("gap width must stay positive on [-2R, 2R]");
    if (std::abs(x) > 1e-9 * R) kmin = std::min(kmin, sum / (x * x));
  }
  if (kappa) {
    if (!(*kappa > 0.0)) throw InputError("kappa must be positive");
    if (kmin < *kappa * (1.0 - 1e-12))
      throw InputError("h1 + h2 >= kappa x1^2 fails on [-2R, 2R]");
    p.kappa = *kappa;
  } else {
    if (!(kmin > 0.0)) throw InputError("h1 + h2 is not bounded below by kappa x1^2");
    p.kappa = kmin;
  }
  return p;
}

NeckProfile named_profile(std::string_view name, double eps) {
  if (name == "sym-quadratic")
    return make_profile("sym-quadratic", eps, ProfileFn::half_square(), ProfileFn::half_square());
  if (name == "asym-quadratic")
    return make_profile("asym-quadratic", eps, ProfileFn({0.0, 0.0, 1.0}),
                        ProfileFn::half_square());
  if (name == "sym-quartic")
    return make_profile("sym-quartic", eps, ProfileFn({0.0, 0.0, 0.5, 0.0, 1.0}),
                        ProfileFn::half_square());
  throw InputError("unknown profile name '" + std::string(name) + "'");
}

std::vector<std::string> named_profile_ids() {
  return {"sym-quadratic", "asym-quadratic", "sym-quartic"};
}

bool is_named_profile(std::string_view name) {
  for (const auto& s : named_profile_ids())
    if (s == name) return true;
  return false;
}

NeckProfile with_eps(const NeckProfile& p, double eps) {
  return make_profile(p.id, eps, p.h1, p.h2, p.R, p.mu, p.M, p.kappa);
}

NeckProfile profile_from_json(const nlohmann::json& j, std::string id) {
  auto poly = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_object() || !j[key].contains("poly") ||
        !j[key]["poly"].is_array())
      throw InputError(std::string("profile field '") + key + "' must be {\"poly\": [...]}");
    std::vector<double> c;
    for (const auto& v : j[key]["poly"]) {
      if (!v.is_number()) throw InputError(std::string("profile field '") + key + ".poly' must hold numbers");
      c.push_back(v.get<double>());
    }
    return ProfileFn(std::move(c));
  };
  auto num = [&](const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_number()) throw InputError(std::string("profile field '") + key + "' must be a number");
    return j[key].get<double>();
  };
  if (!j.is_object()) throw InputError("profile must be a JSON object");
  if (!j.contains("eps")) throw InputError("profile field 'eps' is required");
  std::optional<double> kappa;
  if (j.contains("kappa")) kappa = num("kappa", 0.0);
  const int M = j.contains("M") ? j["M"].get<int>() : 6;
  NeckProfile p = make_profile(std::move(id), num("eps", 0.0), poly("h1"), poly("h2"),
                               num("R", 0.5), num("mu", 1.0), M, kappa);
  if (j.contains("symmetric") && j["symmetric"].get<bool>() && !p.symmetric)
    throw InputError("profile declared symmetric but h1 != h2");
  return p;
}

nlohmann::json profile_to_json(const NeckProfile& p) {
  return {{"id", p.id},   {"eps", p.eps}, {"R", p.R},
          {"mu", p.mu},   {"kappa", p.kappa}, {"M", p.M},
          {"h1", {{"poly", p.h1.coeffs()}}}, {"h2", {{"poly", p.h2.coeffs()}}}};
}

double delta(const NeckProfile& p, double x1) {
  check_x1(p, x1);
  return p.eps + p.h1.eval(x1) + p.h2.eval(x1);
}

double delta_prime(const NeckProfile& p, double x1) {
  check_x1(p, x1);
  return p.h1.eval(x1, 1) + p.h2.eval(x1, 1);
}

double top_wall(const NeckProfile& p, double x1) { return 0.5 * p.eps + p.h1.eval(x1); }
double bottom_wall(const NeckProfile& p, double x1) { return -0.5 * p.eps - p.h2.eval(x1); }

double keller(const NeckProfile& p, double x1, double x2) {
  check_point(p, x1, x2);
  return (x2 - 0.5 * (p.h1.eval(x1) - p.h2.eval(x1))) / delta(p, x1);
}

std::pair<double, double> keller_grad(const NeckProfile& p, double x1, double x2) {
  const double k = keller(p, x1, x2);
  const double d = delta(p, x1);
  const double d1 = p.h1.eval(x1, 1), d2 = p.h2.eval(x1, 1);
  return {-(d1 - d2) / (2.0 * d) - (d1 + d2) * k / d, 1.0 / d};
}

}  // namespace neck
