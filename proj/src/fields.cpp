#include "neck/fields.hpp"

#include <algorithm>

#include "neck/errors.hpp"

namespace neck {

namespace {

CoeffPool* pick_pool(const PolyField& a, const PolyField& b) {
  if (a.pool() && b.pool() && a.pool() != b.pool())
    throw ConstructionError("fields from different pools combined");
  return a.pool() ? a.pool() : b.pool();
}

}  // namespace

PolyField::PolyField(CoeffPool* pool, std::vector<Coeff> coeffs)
    : pool_(pool), coeffs_(std::move(coeffs)) {
  for (const Coeff& c : coeffs_)
    if (c.pool() != pool_) throw ConstructionError("field coefficient from a different pool");
  trim();
}

void PolyField::trim() {
  while (!coeffs_.empty() && coeffs_.back().is_zero()) coeffs_.pop_back();
}

PolyField PolyField::constant(Coeff c) { return PolyField(c.pool(), {c}); }

PolyField PolyField::monomial(Coeff c, int power) {
  std::vector<Coeff> v(power + 1, c.pool()->zero());
  v[power] = c;
  return PolyField(c.pool(), std::move(v));
}

Coeff PolyField::coeff(int j) const {
  if (j < 0 || j > degree()) return pool_->zero();
  return coeffs_[j];
}

PolyField PolyField::truncated(int max_degree) const {
  std::vector<Coeff> v;
  for (int j = 0; j <= std::min(max_degree, degree()); ++j) v.push_back(coeffs_[j]);
  return PolyField(pool_, std::move(v));
}

PolyField PolyField::above(int min_degree) const {
  std::vector<Coeff> v;
  for (int j = 0; j <= degree(); ++j) v.push_back(j >= min_degree ? coeffs_[j] : pool_->zero());
  return PolyField(pool_, std::move(v));
}

PolyField operator+(const PolyField& a, const PolyField& b) {
  CoeffPool* pool = pick_pool(a, b);
  const int n = std::max(a.degree(), b.degree()) + 1;
  std::vector<Coeff> v;
  for (int j = 0; j < n; ++j) {
    if (j > a.degree()) v.push_back(b.coeff(j));
    else if (j > b.degree()) v.push_back(a.coeff(j));
    else v.push_back(a.coeff(j) + b.coeff(j));
  }
  return PolyField(pool, std::move(v));
}

PolyField operator-(const PolyField& a) { return a * -1.0; }

PolyField operator-(const PolyField& a, const PolyField& b) {
  CoeffPool* pool = pick_pool(a, b);
  const int n = std::max(a.degree(), b.degree()) + 1;
  std::vector<Coeff> v;
  for (int j = 0; j < n; ++j) {
    if (j > a.degree()) v.push_back(-b.coeff(j));
    else if (j > b.degree()) v.push_back(a.coeff(j));
    else v.push_back(a.coeff(j) - b.coeff(j));
  }
  return PolyField(pool, std::move(v));
}

PolyField operator*(const PolyField& a, const PolyField& b) {
  CoeffPool* pool = pick_pool(a, b);
  if (a.is_zero() || b.is_zero()) return PolyField(pool);
  const int n = a.degree() + b.degree() + 1;
  std::vector<std::vector<Coeff>> terms(n);
  for (int i = 0; i <= a.degree(); ++i)
    for (int j = 0; j <= b.degree(); ++j) {
      if (a.coeff(i).is_zero() || b.coeff(j).is_zero()) continue;
      terms[i + j].push_back(a.coeff(i) * b.coeff(j));
    }
  std::vector<Coeff> v;
  for (auto& t : terms) {
    std::vector<double> w(t.size(), 1.0);
    v.push_back(pool->sum(t, w));
  }
  return PolyField(pool, std::move(v));
}

PolyField operator*(const PolyField& a, Coeff c) {
  std::vector<Coeff> v;
  for (const Coeff& x : a.coeffs()) v.push_back(x * c);
  return PolyField(c.pool(), std::move(v));
}
PolyField operator*(Coeff c, const PolyField& a) { return a * c; }

PolyField operator*(const PolyField& a, double s) {
  std::vector<Coeff> v;
  for (const Coeff& x : a.coeffs()) v.push_back(x * s);
  return PolyField(a.pool(), std::move(v));
}
PolyField operator*(double s, const PolyField& a) { return a * s; }

VectorField2 operator+(const VectorField2& a, const VectorField2& b) {
  return {a.u1 + b.u1, a.u2 + b.u2};
}
VectorField2 operator-(const VectorField2& a, const VectorField2& b) {
  return {a.u1 - b.u1, a.u2 - b.u2};
}

ScalarPressure operator+(const ScalarPressure& a, const ScalarPressure& b) {
  return {a.poly + b.poly, a.pure + b.pure};
}

PolyField partial(const PolyField& f, Axis axis, int order) {
  if (order < 0) throw ConstructionError("negative derivative order");
  PolyField g = f;
  for (int o = 0; o < order; ++o) {
    std::vector<Coeff> v;
    if (axis == Axis::X1) {
      for (const Coeff& c : g.coeffs()) v.push_back(coeff_diff(c));
    } else {
      for (int j = 1; j <= g.degree(); ++j) v.push_back(g.coeff(j) * static_cast<double>(j));
    }
    g = PolyField(f.pool(), std::move(v));
  }
  return g;
}

PolyField partial(const PolyField& f, int k1, int k2) {
  return partial(partial(f, Axis::X2, k2), Axis::X1, k1);
}

PolyField divergence(const VectorField2& v) {
  return partial(v.u1, Axis::X1) + partial(v.u2, Axis::X2);
}

VectorField2 laplacian(const VectorField2& v) {
  return {partial(v.u1, Axis::X1, 2) + partial(v.u1, Axis::X2, 2),
          partial(v.u2, Axis::X1, 2) + partial(v.u2, Axis::X2, 2)};
}

VectorField2 gradient_p(const ScalarPressure& p) {
  CoeffPool* pool = p.pure.pool();
  return {partial(p.poly, Axis::X1) + PolyField(pool, {coeff_diff(p.pure)}),
          partial(p.poly, Axis::X2)};
}

PolyField integrate_x2(const PolyField& f) {
  if (f.is_zero()) return f;
  std::vector<Coeff> v{f.pool()->zero()};
  for (int j = 0; j <= f.degree(); ++j) v.push_back(f.coeff(j) / static_cast<double>(j + 1));
  return PolyField(f.pool(), std::move(v));
}

Coeff substitute(const PolyField& f, Coeff s) {
  CoeffPool* pool = s.pool();
  Coeff acc = pool->zero();
  for (int j = f.degree(); j >= 0; --j) acc = acc * s + f.coeff(j);
  return acc;
}

Coeff trace(const PolyField& f, Side side) {
  CoeffPool* pool = f.pool();
  const double half = 0.5 * pool->profile().eps;
  Coeff wall = side == Side::Top ? pool->profile_deriv(1, 0) + half
                                 : -1.0 * pool->profile_deriv(2, 0) - half;
  return substitute(f, wall);
}

FieldSampler::FieldSampler(std::span<const PolyField> fields, std::span<const Coeff> extra) {
  std::vector<Coeff> roots;
  CoeffPool* pool = nullptr;
  for (const PolyField& f : fields) {
    offsets_.push_back(roots.size());
    sizes_.push_back(f.degree() + 1);
    for (const Coeff& c : f.coeffs()) roots.push_back(c);
    if (f.pool()) pool = f.pool();
  }
  extra_offset_ = roots.size();
  for (const Coeff& c : extra) {
    roots.push_back(c);
    pool = c.pool();
  }
  if (!pool) throw ConstructionError("sampler needs at least one coefficient");
  program_ = Program(*pool, roots);
}

FieldSampler::Fiber FieldSampler::at(double x1) const {
  std::vector<double> work;
  return at(x1, work);
}

FieldSampler::Fiber FieldSampler::at(double x1, std::vector<double>& work) const {
  Fiber f;
  f.owner_ = this;
  f.values_.resize(program_.roots());
  f.extra_offset_ = extra_offset_;
  program_.eval(x1, f.values_, work);
  return f;
}

double FieldSampler::Fiber::value(std::size_t field, double x2) const {
  const std::size_t off = owner_->offsets_[field];
  double acc = 0.0;
  for (int j = owner_->sizes_[field] - 1; j >= 0; --j) acc = acc * x2 + values_[off + j];
  return acc;
}

double FieldSampler::value(std::size_t field, double x1, double x2) const {
  return at(x1).value(field, x2);
}

}  // namespace neck
