#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "neck/fields.hpp"

namespace neck {

// Symbolic geometry shared by every construction on one profile.
struct NeckSymbols {
  std::shared_ptr<CoeffPool> pool;
  double mu = 1.0;
  Coeff x1;
  Coeff h1, h2;
  Coeff delta;  // eps + h1 + h2
  Coeff diff;   // h1 - h2
  Coeff gram;   // (eps + 2 h1)(eps + 2 h2) / 4, so that k^2 - 1/4 = (x2^2 - diff x2 - gram) / delta^2
  PolyField x2;
  PolyField k;       // Keller-type function
  PolyField bubble;  // k^2 - 1/4
  PolyField k_x1;    // d k / d x1
};

NeckSymbols make_symbols(const NeckProfile& profile);

// Residual stored in pieces; for mode 2 the second component is split into the part
// the next level removes with a polynomial pressure first and the remainder.
struct ResidualParts {
  PolyField first;
  PolyField second_lead;
  PolyField second_rest;

  VectorField2 total() const { return {first, second_lead + second_rest}; }
};

struct CorrectorLevel {
  int alpha = 1;
  int level = 1;
  VectorField2 v;
  ScalarPressure pbar;
  VectorField2 f_cumulative;  // mu Lap(sum v) - grad(sum pbar) through this level
  ResidualParts parts;
};

struct CorrectorHierarchy {
  NeckProfile profile;
  NeckSymbols sym;
  int alpha = 1;
  bool green = false;
  std::vector<CorrectorLevel> levels;

  VectorField2 cumulative_v(int through_level) const;
  ScalarPressure cumulative_p(int through_level) const;
  const CorrectorLevel& level(int l) const { return levels.at(l - 1); }
};

constexpr int kMaxLevels = 6;

// Boundary data on the top wall for mode alpha: (1,0), (0,1), (x2,-x1).
VectorField2 rigid_mode(const NeckSymbols& s, int alpha);

CorrectorLevel build_first_level(const NeckSymbols& s, int alpha);
CorrectorLevel extend(const CorrectorHierarchy& h);

// Full hierarchy of the given number of levels for general profiles.
CorrectorHierarchy build_hierarchy(const NeckProfile& profile, int alpha, int levels);
// Same, sharing an existing symbol pool (fields of several modes can then be sampled together).
CorrectorHierarchy build_hierarchy(const NeckSymbols& sym, int alpha, int levels);

// Mode-1 hierarchy for h1 = h2 built with the Dirichlet Green function of d^2/dx2^2.
CorrectorHierarchy build_symmetric_green(const NeckProfile& profile, int levels);
double green_kernel(double delta, double x2, double y);

// Text dump of every level's coefficient trees (shared nodes written once).
std::string hierarchy_to_sexpr(const CorrectorHierarchy& h);

// Expected x2-degrees of the cumulative residual after level l.
std::pair<int, int> expected_residual_degrees(int alpha, int level, bool green = false);

// Building blocks, exposed for tests.
// P with mu d22(P (k^2 - 1/4)) = -S.
PolyField bubble_solve(const NeckSymbols& s, const PolyField& S);
// Companion Q with div(P b, Q b) = R(x1), b = k^2 - 1/4; returns (Q, R).
std::pair<PolyField, Coeff> flux_companion(const NeckSymbols& s, const PolyField& P);

struct FluxFix {
  Coeff first;       // pure-x1 coefficient added to the first component's polynomial
  PolyField second;  // linear-in-x2 polynomial added to the second component's
  Coeff pressure;    // pure pressure with d1 pressure = mu d22(first b)
};
// Divergence-free completion removing R: div(first b, second b) = -R.
FluxFix flux_fix(const NeckSymbols& s, Coeff R);

}  // namespace neck
