#include "neck/correctors.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "neck/errors.hpp"

namespace neck {

namespace {

PolyField cst(Coeff c) { return PolyField::constant(c); }

struct Step {
  VectorField2 v;
  ScalarPressure p;
  ResidualParts parts;
};

// One level of the generic construction. With lead_first the second component's lead
// part is removed by a polynomial pressure before the bubble solve; otherwise the
// polynomial pressure is chosen afterwards to absorb the second component. trunc1/trunc2
// restrict which x2-degrees are cancelled (negative: all).
Step extend_step(const NeckSymbols& s, const ResidualParts& prev, bool lead_first, int trunc1,
                 int trunc2) {
  CoeffPool* pool = s.pool.get();
  const double mu = s.mu;
  PolyField poly_p(pool);
  PolyField first = prev.first;
  if (lead_first) {
    poly_p = integrate_x2(prev.second_lead);
    first = first - partial(poly_p, Axis::X1);
  }
  const PolyField target = trunc1 >= 0 ? first.truncated(trunc1) : first;
  const PolyField keep1 = trunc1 >= 0 ? first.above(trunc1 + 1) : PolyField(pool);

  const PolyField P1 = bubble_solve(s, target);
  const auto [P2, R] = flux_companion(s, P1);
  const FluxFix fix = flux_fix(s, R);
  const PolyField v1 = (P1 + cst(fix.first)) * s.bubble;
  const PolyField v2 = (P2 + fix.second) * s.bubble;
  const PolyField d22v2 = partial(v2, Axis::X2, 2) * mu;

  Step st;
  st.v = {v1, v2};
  if (lead_first) {
    st.p = {poly_p, fix.pressure};
    st.parts.first = keep1 + partial(v1, Axis::X1, 2) * mu;
    st.parts.second_lead = prev.second_rest + d22v2;
    st.parts.second_rest = partial(v2, Axis::X1, 2) * mu;
  } else {
    const PolyField comp2 = prev.second_lead + prev.second_rest + d22v2;
    const PolyField target2 = trunc2 >= 0 ? comp2.truncated(trunc2) : comp2;
    const PolyField keep2 = trunc2 >= 0 ? comp2.above(trunc2 + 1) : PolyField(pool);
    const PolyField pp = integrate_x2(target2);
    st.p = {pp, fix.pressure};
    st.parts.first = keep1 + partial(v1, Axis::X1, 2) * mu - partial(pp, Axis::X1);
    st.parts.second_lead = keep2;
    st.parts.second_rest = partial(v2, Axis::X1, 2) * mu;
  }
  return st;
}

void finalize(CorrectorLevel& L) {
  L.f_cumulative = L.parts.total();
  const int cap = 2 * L.level + 3;
  if (L.f_cumulative.u1.degree() > cap || L.f_cumulative.u2.degree() > cap ||
      L.v.u1.degree() > cap || L.v.u2.degree() > cap) {
    throw ConstructionError("polynomial degree cap exceeded at level " + std::to_string(L.level) +
                            " (mode " + std::to_string(L.alpha) + ")");
  }
}

// v with mu v'' = -f and v(+-delta/2) = 0, integrating f against the piecewise-linear kernel.
PolyField green_solve(const NeckSymbols& s, const PolyField& f) {
  CoeffPool* pool = s.pool.get();
  const Coeff h = s.delta * 0.5;
  const PolyField below(pool, {h, pool->one()});         // x2 + h
  const PolyField above(pool, {-1.0 * h, pool->one()});  // x2 - h
  const PolyField I1 = integrate_x2(below * f);
  const PolyField A = I1 - cst(substitute(I1, -1.0 * h));
  const PolyField I2 = integrate_x2(above * f);
  const PolyField B = cst(substitute(I2, h)) - I2;
  return (above * A + below * B) * (pow(s.delta, -1) * (-1.0 / s.mu));
}

// Second component making (v1, v2) divergence-free and zero on the bottom wall.
PolyField green_partner(const NeckSymbols& s, const PolyField& v1) {
  const PolyField I = integrate_x2(partial(v1, Axis::X1));
  return (I - cst(substitute(I, s.delta * -0.5))) * -1.0;
}

CorrectorLevel green_level(const NeckSymbols& s, const ResidualParts* prev, int level) {
  CoeffPool* pool = s.pool.get();
  const double mu = s.mu;
  CorrectorLevel L;
  L.alpha = 1;
  L.level = level;
  PolyField v1;
  if (!prev) {
    v1 = PolyField(pool, {pool->constant(0.5), pow(s.delta, -1)});
  } else {
    v1 = green_solve(s, prev->first);
  }
  const PolyField v2 = green_partner(s, v1);
  const PolyField prev2 = prev ? prev->second_lead + prev->second_rest : PolyField(pool);
  const PolyField pp = integrate_x2(prev2 + partial(v2, Axis::X2, 2) * mu);
  L.v = {v1, v2};
  L.pbar = {pp, pool->zero()};
  L.parts.first = partial(v1, Axis::X1, 2) * mu - partial(pp, Axis::X1);
  L.parts.second_lead = PolyField(pool);
  L.parts.second_rest = partial(v2, Axis::X1, 2) * mu;
  finalize(L);
  return L;
}

}  // namespace

NeckSymbols make_symbols(const NeckProfile& profile) {
  NeckSymbols s;
  s.pool = std::make_shared<CoeffPool>(profile);
  CoeffPool* pool = s.pool.get();
  s.mu = profile.mu;
  s.x1 = pool->x1();
  s.h1 = pool->profile_deriv(1, 0);
  s.h2 = pool->profile_deriv(2, 0);
  s.delta = s.h1 + s.h2 + profile.eps;
  pool->declare_positive(s.delta);
  s.diff = s.h1 - s.h2;
  s.gram = (s.h1 * 2.0 + profile.eps) * (s.h2 * 2.0 + profile.eps) * 0.25;
  const Coeff inv = pow(s.delta, -1);
  const Coeff inv2 = pow(s.delta, -2);
  s.x2 = PolyField::monomial(pool->one(), 1);
  s.k = PolyField(pool, {s.diff * inv * -0.5, inv});
  s.bubble = PolyField(pool, {s.gram * inv2 * -1.0, s.diff * inv2 * -1.0, inv2});
  s.k_x1 = partial(s.k, Axis::X1);
  return s;
}

VectorField2 rigid_mode(const NeckSymbols& s, int alpha) {
  CoeffPool* pool = s.pool.get();
  switch (alpha) {
    case 1:
      return {cst(pool->one()), PolyField(pool)};
    case 2:
      return {PolyField(pool), cst(pool->one())};
    case 3:
      return {s.x2, cst(s.x1 * -1.0)};
    default:
      throw InputError("boundary mode must be 1, 2 or 3");
  }
}

PolyField bubble_solve(const NeckSymbols& s, const PolyField& S) {
  CoeffPool* pool = s.pool.get();
  const int n = S.degree();
  if (n < 0) return PolyField(pool);
  std::vector<Coeff> F(n + 3, pool->zero());
  const Coeff d2 = pow(s.delta, 2);
  for (int i = n; i >= 0; --i) {
    const double w = -1.0 / (s.mu * (i + 1) * (i + 2));
    F[i] = d2 * S.coeff(i) * w + s.diff * F[i + 1] + s.gram * F[i + 2];
  }
  F.resize(n + 1);
  return PolyField(pool, std::move(F));
}

std::pair<PolyField, Coeff> flux_companion(const NeckSymbols& s, const PolyField& P) {
  CoeffPool* pool = s.pool.get();
  const int n = P.degree();
  if (n < 0) return {PolyField(pool), pool->zero()};
  const Coeff inv2 = pow(s.delta, -2);
  const Coeff d2 = pow(s.delta, 2);
  // D_i: x2^i coefficient of P (x2^2 - diff x2 - gram) / delta^2
  auto D = [&](int i) {
    return (P.coeff(i - 2) - s.diff * P.coeff(i - 1) - s.gram * P.coeff(i)) * inv2;
  };
  std::vector<Coeff> Q(n + 4, pool->zero());
  for (int i = n + 1; i >= 0; --i) {
    const Coeff T = d2 * coeff_diff(D(i + 1)) * (-1.0 / (i + 2));
    Q[i] = s.diff * Q[i + 1] + s.gram * Q[i + 2] + T;
  }
  const Coeff R = (s.diff * Q[0] + s.gram * Q[1]) * inv2 * -1.0 -
                  coeff_diff(s.gram * P.coeff(0) * inv2);
  Q.resize(n + 2);
  return {PolyField(pool, std::move(Q)), R};
}

FluxFix flux_fix(const NeckSymbols& s, Coeff R) {
  CoeffPool* pool = s.pool.get();
  if (R.is_zero()) return {pool->zero(), PolyField(pool), pool->zero()};
  FluxFix f;
  f.first = antideriv(s.delta * R, 0.0) * pow(s.delta, -1) * 6.0;
  f.second = s.k * (s.delta * R * -2.0) - s.k_x1 * (s.delta * f.first);
  f.pressure = antideriv(f.first * pow(s.delta, -2), 0.0) * (2.0 * s.mu);
  return f;
}

CorrectorLevel build_first_level(const NeckSymbols& s, int alpha) {
  CoeffPool* pool = s.pool.get();
  const double mu = s.mu;
  const double R = pool->profile().R;
  const double eps = pool->profile().eps;
  const Coeff dh1 = coeff_diff(s.h1), dh2 = coeff_diff(s.h2);
  const Coeff inv = pow(s.delta, -1);
  const PolyField half = cst(pool->constant(0.5));
  CorrectorLevel L;
  L.alpha = alpha;
  L.level = 1;
  switch (alpha) {
    case 1: {
      const Coeff F = s.diff * inv * -3.0;
      const PolyField G = s.k * (dh1 - dh2) + cst((dh1 + dh2) * 0.5) + s.k_x1 * (s.diff * 3.0);
      const PolyField v1 = s.k + half + s.bubble * F;
      const PolyField v2 = G * s.bubble;
      L.v = {v1, v2};
      L.pbar = {partial(v2, Axis::X2) * mu,
                antideriv(s.diff * pow(s.delta, -3), R) * (-6.0 * mu)};
      L.parts.first = partial(partial(v1, Axis::X1) - partial(v2, Axis::X2), Axis::X1) * mu;
      L.parts.second_lead = PolyField(pool);
      L.parts.second_rest = partial(v2, Axis::X1, 2) * mu;
      break;
    }
    case 2: {
      const PolyField t1 = s.bubble * (s.x1 * inv * 6.0);
      const PolyField G = s.k * -2.0 - s.k_x1 * (s.x1 * 6.0);
      const PolyField t2 = s.k + half + G * s.bubble;
      const ScalarPressure tp{partial(t2, Axis::X2) * mu,
                              antideriv(s.x1 * pow(s.delta, -3), R) * (12.0 * mu)};
      ResidualParts r;
      r.first = partial(partial(t1, Axis::X1) - partial(t2, Axis::X2), Axis::X1) * mu;
      r.second_lead = PolyField(pool);
      r.second_rest = partial(t2, Axis::X1, 2) * mu;
      const Step st = extend_step(s, r, true, -1, -1);
      L.v = VectorField2{t1, t2} + st.v;
      L.pbar = tp + st.p;
      L.parts = st.parts;
      break;
    }
    case 3: {
      const PolyField kh = s.k + half;
      const Coeff F0 = 1.0 - (s.h1 + s.h2 + s.x1 * s.x1 * 3.0) * inv;
      const PolyField Frest = s.x2 * (s.diff * inv * -1.5) - s.k * s.x2 * 5.0;
      const PolyField Gpart = s.k * (s.x1 * 2.0) - s.k_x1 * (eps - s.x1 * s.x1 * 3.0);
      const PolyField Grest = s.k * s.k_x1 * s.x2 * (s.delta * 3.0) + s.k_x1 * s.x2 * (s.diff * 1.5);
      const PolyField v1 = s.x2 * kh + (cst(F0) + Frest) * s.bubble;
      const PolyField v2 = kh * (s.x1 * -1.0) + (Gpart + Grest) * s.bubble;
      const Coeff g = (s.x1 * (dh1 + dh2) * 2.0 - s.h1 - s.h2 - s.x1 * s.x1 * 3.0) * pow(s.delta, -3);
      const PolyField r = partial(Gpart * s.bubble, Axis::X2) * mu;
      L.v = {v1, v2};
      L.pbar = {r, s.x1 * pow(s.delta, -2) * (2.0 * mu) + antideriv(g, R) * (2.0 * mu)};
      L.parts.first = partial(v1, Axis::X1, 2) * mu +
                      partial(s.x2 * kh + Frest * s.bubble, Axis::X2, 2) * mu -
                      partial(r, Axis::X1);
      L.parts.second_lead = PolyField(pool);
      L.parts.second_rest = partial(v2, Axis::X1, 2) * mu + partial(Grest * s.bubble, Axis::X2, 2) * mu;
      break;
    }
    default:
      throw InputError("boundary mode must be 1, 2 or 3");
  }
  finalize(L);
  return L;
}

CorrectorLevel extend(const CorrectorHierarchy& h) {
  const int l = static_cast<int>(h.levels.size()) + 1;
  if (h.levels.empty()) throw ConstructionError("extend needs a first level");
  if (l > kMaxLevels) throw InputError("level cap exceeded: at most " + std::to_string(kMaxLevels) + " levels");
  const ResidualParts& prev = h.levels.back().parts;
  if (h.green) return green_level(h.sym, &prev, l);
  Step st;
  switch (h.alpha) {
    case 1:
      st = extend_step(h.sym, prev, false, -1, -1);
      break;
    case 2:
      st = extend_step(h.sym, prev, true, -1, -1);
      break;
    case 3:
      st = l == 2 ? extend_step(h.sym, prev, false, 2, 3) : extend_step(h.sym, prev, false, -1, -1);
      break;
    default:
      throw InputError("boundary mode must be 1, 2 or 3");
  }
  CorrectorLevel L;
  L.alpha = h.alpha;
  L.level = l;
  L.v = st.v;
  L.pbar = st.p;
  L.parts = st.parts;
  finalize(L);
  return L;
}

CorrectorHierarchy build_hierarchy(const NeckProfile& profile, int alpha, int levels) {
  return build_hierarchy(make_symbols(profile), alpha, levels);
}

CorrectorHierarchy build_hierarchy(const NeckSymbols& sym, int alpha, int levels) {
  if (levels < 1 || levels > kMaxLevels)
    throw InputError("number of levels must be in [1, " + std::to_string(kMaxLevels) + "]");
  CorrectorHierarchy h;
  h.profile = sym.pool->profile();
  h.sym = sym;
  h.alpha = alpha;
  h.levels.push_back(build_first_level(h.sym, alpha));
  while (static_cast<int>(h.levels.size()) < levels) h.levels.push_back(extend(h));
  return h;
}

CorrectorHierarchy build_symmetric_green(const NeckProfile& profile, int levels) {
  if (!profile.symmetric) throw InputError("Green-function construction needs h1 = h2");
  if (levels < 1 || levels > kMaxLevels)
    throw InputError("number of levels must be in [1, " + std::to_string(kMaxLevels) + "]");
  CorrectorHierarchy h;
  h.profile = profile;
  h.sym = make_symbols(profile);
  h.alpha = 1;
  h.green = true;
  h.levels.push_back(green_level(h.sym, nullptr, 1));
  while (static_cast<int>(h.levels.size()) < levels) h.levels.push_back(extend(h));
  return h;
}

double green_kernel(double delta, double x2, double y) {
  const double h = 0.5 * delta;
  return y <= x2 ? (y + h) * (x2 - h) / delta : (x2 + h) * (y - h) / delta;
}

std::pair<int, int> expected_residual_degrees(int alpha, int level, bool green) {
  if (green) return {2 * level - 1, 2 * level};
  switch (alpha) {
    case 1:
      return {2 * level, 2 * level + 1};
    case 2:
      return {2 * level + 2, 2 * level + 3};
    case 3:
      return level == 1 ? std::pair{4, 5} : std::pair{2 * level, 2 * level + 1};
    default:
      throw InputError("boundary mode must be 1, 2 or 3");
  }
}

std::string hierarchy_to_sexpr(const CorrectorHierarchy& h) {
  std::vector<Coeff> roots;
  std::string head;
  auto field = [&](const std::string& name, const PolyField& f) {
    head += "(" + name;
    for (const Coeff& c : f.coeffs()) {
      roots.push_back(c);
      head += " " + (c.node().kind == NodeKind::Sum || c.node().kind == NodeKind::Prod ||
                             c.node().kind == NodeKind::IntPow || c.node().kind == NodeKind::Antideriv
                         ? "#" + std::to_string(c.id())
                         : to_sexpr(c));
    }
    head += ")\n";
  };
  char buf[160];
  std::snprintf(buf, sizeof buf, "(hierarchy %s (mode %d) (green %d) (eps %.17g) (levels %zu))\n",
                h.profile.id.c_str(), h.alpha, h.green ? 1 : 0, h.profile.eps, h.levels.size());
  head += buf;
  for (const auto& L : h.levels) {
    head += "(level " + std::to_string(L.level) + ")\n";
    field("v1", L.v.u1);
    field("v2", L.v.u2);
    field("pbar-poly", L.pbar.poly);
    field("pbar-pure", PolyField::constant(L.pbar.pure));
    field("f1", L.f_cumulative.u1);
    field("f2", L.f_cumulative.u2);
  }
  return head + to_sexpr_dag(roots);
}

VectorField2 CorrectorHierarchy::cumulative_v(int through_level) const {
  VectorField2 v{PolyField(sym.pool.get()), PolyField(sym.pool.get())};
  for (int l = 1; l <= through_level; ++l) v = v + level(l).v;
  return v;
}

ScalarPressure CorrectorHierarchy::cumulative_p(int through_level) const {
  ScalarPressure p{PolyField(sym.pool.get()), sym.pool->zero()};
  for (int l = 1; l <= through_level; ++l) p = p + level(l).pbar;
  return p;
}

}  // namespace neck
