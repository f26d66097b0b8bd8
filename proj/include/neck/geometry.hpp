#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace neck {

// Polynomial wall profile h(x1) = sum c_i x1^i. Derivatives of any order are exact.
class ProfileFn {
 public:
  ProfileFn() = default;
  explicit ProfileFn(std::vector<double> coeffs);

  static ProfileFn half_square();  // x1^2 / 2

  const std::vector<double>& coeffs() const { return coeffs_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  double eval(double x, int order = 0) const;

  bool operator==(const ProfileFn& o) const { return coeffs_ == o.coeffs_; }

 private:
  std::vector<double> coeffs_;
};

struct NeckProfile {
  std::string id;
  double eps = 0.01;
  double R = 0.5;
  double kappa = 0.0;
  double mu = 1.0;
  ProfileFn h1;
  ProfileFn h2;
  int M = 6;
  bool symmetric = false;

  const ProfileFn& wall(int i) const { return i == 1 ? h1 : h2; }
};

// Validates and completes a profile: h_i(0) = h_i'(0) = 0, delta > 0 and
// h1 + h2 >= kappa x1^2 on [-2R, 2R]. kappa is estimated when not given.
NeckProfile make_profile(std::string id, double eps, ProfileFn h1, ProfileFn h2,
                         double R = 0.5, double mu = 1.0, int M = 6,
                         std::optional<double> kappa = std::nullopt);

// Built-in profiles: sym-quadratic, asym-quadratic, sym-quartic.
NeckProfile named_profile(std::string_view name, double eps);
std::vector<std::string> named_profile_ids();
bool is_named_profile(std::string_view name);

NeckProfile with_eps(const NeckProfile& p, double eps);

// {"eps":..,"R":..,"mu":..,"h1":{"poly":[..]},"h2":{"poly":[..]}}
NeckProfile profile_from_json(const nlohmann::json& j, std::string id);
nlohmann::json profile_to_json(const NeckProfile& p);

double delta(const NeckProfile& p, double x1);
double delta_prime(const NeckProfile& p, double x1);
double top_wall(const NeckProfile& p, double x1);     //  eps/2 + h1
double bottom_wall(const NeckProfile& p, double x1);  // -eps/2 - h2

double keller(const NeckProfile& p, double x1, double x2);
std::pair<double, double> keller_grad(const NeckProfile& p, double x1, double x2);

}  // namespace neck
