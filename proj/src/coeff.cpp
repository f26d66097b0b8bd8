#include "neck/coeff.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "neck/errors.hpp"

namespace neck {

namespace {

double ipow_d(double b, int n) {
  if (n < 0) return 1.0 / ipow_d(b, -n);
  double r = 1.0;
  while (n) {
    if (n & 1) r *= b;
    b *= b;
    n >>= 1;
  }
  return r;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

std::uint64_t node_hash(const Node& n) {
  std::uint64_t h = static_cast<std::uint64_t>(n.kind);
  h = mix(h, std::bit_cast<std::uint64_t>(n.value));
  h = mix(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(n.p)));
  h = mix(h, static_cast<std::uint64_t>(n.order));
  for (auto k : n.kids) h = mix(h, k);
  for (double w : n.weights) h = mix(h, std::bit_cast<std::uint64_t>(w));
  return h;
}

bool same_node(const Node& a, const Node& b) {
  return a.kind == b.kind && std::bit_cast<std::uint64_t>(a.value) == std::bit_cast<std::uint64_t>(b.value) &&
         a.p == b.p && a.order == b.order && a.kids == b.kids && a.weights == b.weights;
}

void check_x1_range(const NeckProfile& p, double x1) {
  if (!(std::abs(x1) <= 2.0 * p.R * (1.0 + 1e-12))) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "coefficient evaluated at x1 = %.6g outside [-2R, 2R]", x1);
    throw DomainError(buf);
  }
}

double profile_value(const NeckProfile& p, int wall, int order, double x) {
  if (order > p.M) {
    throw CapabilityError("profile derivative of order " + std::to_string(order) +
                          " exceeds the supported cap M = " + std::to_string(p.M));
  }
  return p.wall(wall).eval(x, order);
}

CoeffPool* common_pool(Coeff a, Coeff b) {
  if (a.pool() != b.pool()) throw ConstructionError("coefficients from different pools combined");
  return a.pool();
}

}  // namespace

// ---------------------------------------------------------------- Coeff

const Node& Coeff::node() const { return pool_->node(id_); }
bool Coeff::is_const() const { return node().kind == NodeKind::Const; }
bool Coeff::is_zero() const { return is_const() && node().value == 0.0; }
double Coeff::const_value() const { return node().value; }

Coeff operator+(Coeff a, Coeff b) {
  Coeff t[2] = {a, b};
  double w[2] = {1.0, 1.0};
  return common_pool(a, b)->sum(t, w);
}
Coeff operator-(Coeff a, Coeff b) {
  Coeff t[2] = {a, b};
  double w[2] = {1.0, -1.0};
  return common_pool(a, b)->sum(t, w);
}
Coeff operator*(Coeff a, Coeff b) {
  Coeff t[2] = {a, b};
  return common_pool(a, b)->prod(t);
}
Coeff operator/(Coeff a, Coeff b) {
  CoeffPool* pool = common_pool(a, b);
  Coeff t[2] = {a, pool->ipow(b, -1)};
  return pool->prod(t);
}
Coeff operator-(Coeff a) {
  double w = -1.0;
  return a.pool()->sum({&a, 1}, {&w, 1});
}
Coeff operator+(Coeff a, double b) {
  double w = 1.0;
  return a.pool()->sum({&a, 1}, {&w, 1}, b);
}
Coeff operator+(double a, Coeff b) { return b + a; }
Coeff operator-(Coeff a, double b) { return a + (-b); }
Coeff operator-(double a, Coeff b) {
  double w = -1.0;
  return b.pool()->sum({&b, 1}, {&w, 1}, a);
}
Coeff operator*(Coeff a, double b) { return a.pool()->prod({&a, 1}, b); }
Coeff operator*(double a, Coeff b) { return b * a; }
Coeff operator/(Coeff a, double b) {
  if (b == 0.0) throw ConstructionError("division by constant zero");
  return a * (1.0 / b);
}
Coeff pow(Coeff base, int n) { return base.pool()->ipow(base, n); }

Coeff coeff_diff(Coeff c) { return c.pool()->diff(c); }
Coeff coeff_diff(Coeff c, int order) {
  for (int i = 0; i < order; ++i) c = coeff_diff(c);
  return c;
}
Coeff antideriv(Coeff integrand, double lower) {
  return integrand.pool()->antideriv(integrand, lower);
}

// ---------------------------------------------------------------- CoeffPool

CoeffPool::CoeffPool(NeckProfile profile) : profile_(std::move(profile)) {
  constant(0.0);
  Node n;
  n.kind = NodeKind::X1;
  x1_id_ = intern(n);
}

std::uint32_t CoeffPool::intern(Node n) {
  const std::uint64_t h = node_hash(n);
  auto& bucket = buckets_[h];
  for (auto id : bucket)
    if (same_node(nodes_[id], n)) return id;
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  const bool is_int = n.kind == NodeKind::Antideriv;
  nodes_.push_back(std::move(n));
  bucket.push_back(id);
  if (is_int) {
    std::lock_guard lock(slot_mutex_);
    slots_.emplace(id, std::make_unique<Slot>());
  }
  return id;
}

Coeff CoeffPool::constant(double v) {
  if (!std::isfinite(v)) throw ConstructionError("non-finite constant in coefficient expression");
  Node n;
  n.kind = NodeKind::Const;
  n.value = v == 0.0 ? 0.0 : v;
  return {this, intern(std::move(n))};
}

Coeff CoeffPool::x1() { return {this, x1_id_}; }

Coeff CoeffPool::profile_deriv(int wall, int order) {
  if (wall != 1 && wall != 2) throw ConstructionError("wall index must be 1 or 2");
  if (order > profile_.wall(wall).degree()) return zero();
  Node n;
  n.kind = NodeKind::ProfileDeriv;
  n.p = wall;
  n.order = order;
  return {this, intern(std::move(n))};
}

std::uint32_t CoeffPool::strip_factor(std::uint32_t prod_id) {
  const Node& n = nodes_[prod_id];
  if (n.kids.size() == 1) return n.kids[0];
  Node m;
  m.kind = NodeKind::Prod;
  m.value = 1.0;
  m.kids = n.kids;
  return intern(std::move(m));
}

Coeff CoeffPool::sum(std::span<const Coeff> terms, std::span<const double> weights, double offset) {
  std::map<std::uint32_t, double> acc;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].pool() != this) throw ConstructionError("coefficient from a different pool");
    const double w = weights[i];
    if (w == 0.0) continue;
    const std::uint32_t id = terms[i].id();
    const Node& n = nodes_[id];
    switch (n.kind) {
      case NodeKind::Const:
        offset += w * n.value;
        break;
      case NodeKind::Sum:
        offset += w * n.value;
        for (std::size_t k = 0; k < n.kids.size(); ++k) acc[n.kids[k]] += w * n.weights[k];
        break;
      case NodeKind::Prod:
        if (n.value != 1.0) {
          const double f = n.value;
          acc[strip_factor(id)] += w * f;
        } else {
          acc[id] += w;
        }
        break;
      default:
        acc[id] += w;
    }
  }
  Node n;
  n.kind = NodeKind::Sum;
  n.value = offset == 0.0 ? 0.0 : offset;
  for (auto [id, w] : acc) {
    if (w == 0.0) continue;
    n.kids.push_back(id);
    n.weights.push_back(w);
  }
  if (n.kids.empty()) return constant(offset);
  if (n.kids.size() == 1 && n.value == 0.0) {
    if (n.weights[0] == 1.0) return {this, n.kids[0]};
    Coeff k{this, n.kids[0]};
    return prod({&k, 1}, n.weights[0]);
  }
  return {this, intern(std::move(n))};
}

bool CoeffPool::is_positive(Coeff c) const {
  const Node& n = nodes_[c.id()];
  if (positive_.count(c.id())) return true;
  switch (n.kind) {
    case NodeKind::Const:
      return n.value > 0.0;
    case NodeKind::IntPow:
      return is_positive({const_cast<CoeffPool*>(this), n.kids[0]});
    case NodeKind::Prod:
      if (!(n.value > 0.0)) return false;
      for (auto k : n.kids)
        if (!is_positive({const_cast<CoeffPool*>(this), k})) return false;
      return true;
    default:
      return false;
  }
}

void CoeffPool::declare_positive(Coeff c) { positive_.insert(c.id()); }

std::uint32_t CoeffPool::raw_prod(std::vector<std::pair<std::uint32_t, int>> factors, double factor) {
  if (factor == 0.0) return zero().id();
  std::vector<std::uint32_t> kids;
  for (auto [base, e] : factors) {
    if (e == 0) continue;
    if (e < 0 && !is_positive({this, base}))
      throw ConstructionError("negative power of a coefficient not certified positive");
    if (e == 1) {
      kids.push_back(base);
    } else {
      Node n;
      n.kind = NodeKind::IntPow;
      n.p = e;
      n.kids = {base};
      kids.push_back(intern(std::move(n)));
    }
  }
  if (kids.empty()) return constant(factor).id();
  std::sort(kids.begin(), kids.end());
  if (kids.size() == 1 && factor == 1.0) return kids[0];
  Node n;
  n.kind = NodeKind::Prod;
  n.value = factor;
  n.kids = std::move(kids);
  return intern(std::move(n));
}

Coeff CoeffPool::prod(std::span<const Coeff> factors, double factor) {
  std::map<std::uint32_t, int> acc;
  auto add = [&](auto&& self, std::uint32_t id, int e) -> void {
    const Node& n = nodes_[id];
    switch (n.kind) {
      case NodeKind::Const:
        if (n.value == 0.0 && e < 0) throw ConstructionError("negative power of zero");
        factor *= ipow_d(n.value, e);
        break;
      case NodeKind::Prod: {
        factor *= ipow_d(n.value, e);
        const auto kids = n.kids;
        for (auto k : kids) self(self, k, e);
        break;
      }
      case NodeKind::IntPow:
        acc[n.kids[0]] += e * n.p;
        break;
      default:
        acc[id] += e;
    }
  };
  for (const Coeff& f : factors) {
    if (f.pool() != this) throw ConstructionError("coefficient from a different pool");
    add(add, f.id(), 1);
    if (factor == 0.0) return zero();
  }
  std::vector<std::pair<std::uint32_t, int>> v(acc.begin(), acc.end());
  return {this, raw_prod(std::move(v), factor)};
}

Coeff CoeffPool::ipow(Coeff base, int n) {
  if (n == 0) return one();
  if (n == 1) return base;
  const Node& b = nodes_[base.id()];
  if (b.kind == NodeKind::Const) {
    if (b.value == 0.0 && n < 0) throw ConstructionError("negative power of zero");
    return constant(ipow_d(b.value, n));
  }
  if (n < 0 && !is_positive(base))
    throw ConstructionError("negative power of a coefficient not certified positive");
  double factor = 1.0;
  std::vector<std::pair<std::uint32_t, int>> f;
  if (b.kind == NodeKind::Prod) {
    factor = ipow_d(b.value, n);
    for (auto k : b.kids) {
      const Node& kn = nodes_[k];
      if (kn.kind == NodeKind::IntPow)
        f.emplace_back(kn.kids[0], kn.p * n);
      else
        f.emplace_back(k, n);
    }
  } else if (b.kind == NodeKind::IntPow) {
    f.emplace_back(b.kids[0], b.p * n);
  } else {
    f.emplace_back(base.id(), n);
  }
  return {this, raw_prod(std::move(f), factor)};
}

Coeff CoeffPool::antideriv(Coeff integrand, double lower) {
  if (integrand.pool() != this) throw ConstructionError("coefficient from a different pool");
  if (!(std::abs(lower) <= 2.0 * profile_.R * (1.0 + 1e-12)))
    throw ConstructionError("integration limit outside [-2R, 2R]");
  if (integrand.is_zero()) return zero();
  Node n;
  n.kind = NodeKind::Antideriv;
  n.value = lower == 0.0 ? 0.0 : lower;
  n.kids = {integrand.id()};
  return {this, intern(std::move(n))};
}

Coeff CoeffPool::diff(Coeff c) {
  if (auto it = diff_memo_.find(c.id()); it != diff_memo_.end()) return {this, it->second};
  const Node n = nodes_[c.id()];
  Coeff r;
  switch (n.kind) {
    case NodeKind::Const:
      r = zero();
      break;
    case NodeKind::X1:
      r = one();
      break;
    case NodeKind::ProfileDeriv:
      r = profile_deriv(n.p, n.order + 1);
      break;
    case NodeKind::Sum: {
      std::vector<Coeff> t;
      std::vector<double> w;
      for (std::size_t i = 0; i < n.kids.size(); ++i) {
        Coeff d = diff({this, n.kids[i]});
        if (d.is_zero()) continue;
        t.push_back(d);
        w.push_back(n.weights[i]);
      }
      r = sum(t, w);
      break;
    }
    case NodeKind::Prod: {
      std::vector<Coeff> terms;
      for (std::size_t i = 0; i < n.kids.size(); ++i) {
        Coeff d = diff({this, n.kids[i]});
        if (d.is_zero()) continue;
        std::vector<Coeff> f;
        for (std::size_t j = 0; j < n.kids.size(); ++j)
          if (j != i) f.emplace_back(this, n.kids[j]);
        f.push_back(d);
        terms.push_back(prod(f, n.value));
      }
      std::vector<double> w(terms.size(), 1.0);
      r = sum(terms, w);
      break;
    }
    case NodeKind::IntPow: {
      Coeff base{this, n.kids[0]};
      Coeff d = diff(base);
      Coeff f[2] = {ipow(base, n.p - 1), d};
      r = prod(f, static_cast<double>(n.p));
      break;
    }
    case NodeKind::Antideriv:
      r = {this, n.kids[0]};
      break;
  }
  diff_memo_[c.id()] = r.id();
  return r;
}

const AntiderivTable& CoeffPool::table(std::uint32_t id) const {
  Slot* slot;
  {
    std::lock_guard lock(slot_mutex_);
    auto it = slots_.find(id);
    if (it == slots_.end()) throw ConstructionError("table requested for a non-integral node");
    slot = it->second.get();
  }
  std::call_once(slot->once, [&] {
    const Node& n = nodes_[id];
    Coeff g{const_cast<CoeffPool*>(this), n.kids[0]};
    Program prog(*this, {&g, 1});
    std::vector<double> work;
    auto f = [&](double y) {
      double v;
      prog.eval(y, {&v, 1}, work);
      return v;
    };
    std::vector<double> hints = {0.0, -profile_.R, profile_.R};
    const double L = 2.0 * profile_.R;
    for (double s = 0.125 * std::sqrt(profile_.eps); s < L; s *= 2.0) {
      hints.push_back(s);
      hints.push_back(-s);
    }
    slot->table = AntiderivTable::build(f, n.value, L, hints);
  });
  return slot->table;
}

// ---------------------------------------------------------------- AntiderivTable

namespace {

constexpr int kN = AntiderivTable::kOrder;

double clenshaw(const double* c, int n, double t) {
  double b1 = 0.0, b2 = 0.0;
  for (int k = n - 1; k >= 1; --k) {
    const double b0 = c[k] + 2.0 * t * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return c[0] + t * b1 - b2;
}

}  // namespace

AntiderivTable AntiderivTable::build(const std::function<double(double)>& g, double lower,
                                     double L, std::span<const double> hints) {
  std::vector<double> br = {-L, L, lower};
  for (double h : hints)
    if (h > -L && h < L) br.push_back(h);
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());

  static const auto cosines = [] {
    std::array<std::array<double, kN>, kN> c{};
    for (int k = 0; k < kN; ++k)
      for (int j = 0; j < kN; ++j) c[k][j] = std::cos(M_PI * k * (j + 0.5) / kN);
    return c;
  }();

  AntiderivTable t;
  std::vector<double> integrals;
  const std::size_t max_panels = 200000;

  auto accept = [&](double a, double b, const std::array<double, kN>& c) {
    const double h = 0.5 * (b - a);
    std::array<double, kN + 1> C{};
    C[1] = (2.0 * c[0] - (kN > 2 ? c[2] : 0.0)) / 2.0;
    for (int k = 2; k <= kN; ++k) {
      const double cm = c[k - 1];
      const double cp = k + 1 < kN ? c[k + 1] : 0.0;
      C[k] = (cm - cp) / (2.0 * k);
    }
    double at_left = 0.0;
    for (int k = 1; k <= kN; ++k) at_left += (k % 2 ? -C[k] : C[k]);
    C[0] = -at_left;
    for (auto& v : C) v *= h;
    t.series_.push_back(C);
    if (t.breaks_.empty()) t.breaks_.push_back(a);
    t.breaks_.push_back(b);
    integrals.push_back(clenshaw(C.data(), kN + 1, 1.0));
  };

  // Tolerance is relative to the integrand's largest magnitude over the whole range, so
  // regions where it is tiny (and dominated by roundoff) do not force endless bisection.
  double global = 0.0;
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    const double m = 0.5 * (br[i] + br[i + 1]), h = 0.5 * (br[i + 1] - br[i]);
    for (int j = 0; j < kN; ++j) global = std::max(global, std::abs(g(m + h * std::cos(M_PI * (j + 0.5) / kN))));
  }

  auto refine = [&](auto&& self, double a, double b, int depth, double parent_tail) -> void {
    if (t.series_.size() >= max_panels)
      throw QuadratureError("antiderivative table exceeded the panel budget");
    const double m = 0.5 * (a + b), h = 0.5 * (b - a);
    std::array<double, kN> f{};
    for (int j = 0; j < kN; ++j) {
      f[j] = g(m + h * std::cos(M_PI * (j + 0.5) / kN));
      if (!std::isfinite(f[j])) throw QuadratureError("non-finite integrand value while tabulating");
    }
    std::array<double, kN> c{};
    double scale = 0.0;
    for (int k = 0; k < kN; ++k) {
      double s = 0.0;
      for (int j = 0; j < kN; ++j) s += f[j] * cosines[k][j];
      c[k] = (k == 0 ? 1.0 : 2.0) * s / kN;
      scale = std::max(scale, std::abs(c[k]));
    }
    const double tail = std::max(std::abs(c[kN - 1]), std::abs(c[kN - 2]));
    const double ref = std::max(scale, 1e-3 * global);
    // A tail that stopped shrinking under bisection is roundoff in the integrand.
    const bool plateau = tail > 0.25 * parent_tail && tail <= 1e-9 * ref;
    if (tail <= 5e-14 * ref || plateau || depth >= 40 || h < 1e-9 * L) {
      accept(a, b, c);
      return;
    }
    self(self, a, m, depth + 1, tail);
    self(self, m, b, depth + 1, tail);
  };

  for (std::size_t i = 0; i + 1 < br.size(); ++i) refine(refine, br[i], br[i + 1], 0, 0.0);

  const std::size_t np = integrals.size();
  t.offset_.assign(np, 0.0);
  std::size_t base = 0;
  while (base < np && t.breaks_[base] != lower) ++base;
  if (base == np && t.breaks_[np] == lower) {
    // lower at the right end: every panel lies to its left
    double acc = 0.0;
    for (std::size_t j = np; j-- > 0;) {
      acc -= integrals[j];
      t.offset_[j] = acc;
    }
    return t;
  }
  for (std::size_t j = base + 1; j < np; ++j) t.offset_[j] = t.offset_[j - 1] + integrals[j - 1];
  for (std::size_t j = base; j-- > 0;) t.offset_[j] = t.offset_[j + 1] - integrals[j];
  return t;
}

double AntiderivTable::operator()(double x) const {
  const double lo = breaks_.front(), hi = breaks_.back();
  x = std::clamp(x, lo, hi);
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
  std::size_t j = it == breaks_.begin() ? 0 : static_cast<std::size_t>(it - breaks_.begin()) - 1;
  if (j >= series_.size()) j = series_.size() - 1;
  const double a = breaks_[j], b = breaks_[j + 1];
  const double tt = (2.0 * x - a - b) / (b - a);
  return offset_[j] + clenshaw(series_[j].data(), kN + 1, tt);
}

// ---------------------------------------------------------------- Program

Program::Program(const CoeffPool& pool, std::span<const Coeff> roots) : profile_(&pool.profile()) {
  std::vector<char> seen(pool.size(), 0);
  std::vector<std::uint32_t> stack;
  for (const Coeff& r : roots) {
    if (r.pool() != &pool) throw ConstructionError("program root from a different pool");
    stack.push_back(r.id());
  }
  while (!stack.empty()) {
    const auto id = stack.back();
    stack.pop_back();
    if (seen[id]) continue;
    seen[id] = 1;
    const Node& n = pool.node(id);
    if (n.kind == NodeKind::Antideriv) continue;  // tabulated, integrand not needed here
    for (auto k : n.kids) stack.push_back(k);
  }
  std::vector<std::uint32_t> local(pool.size(), 0);
  for (std::uint32_t id = 0; id < pool.size(); ++id) {
    if (!seen[id]) continue;
    const Node& n = pool.node(id);
    Op op{n.kind, n.value, n.p, n.order, static_cast<std::uint32_t>(args_.size()), 0, nullptr};
    if (n.kind == NodeKind::Antideriv) {
      op.table = &pool.table(id);
    } else {
      for (std::size_t k = 0; k < n.kids.size(); ++k) {
        args_.push_back(local[n.kids[k]]);
        if (n.kind == NodeKind::Sum) weights_.push_back(n.weights[k]);
      }
      op.count = static_cast<std::uint32_t>(n.kids.size());
    }
    local[id] = static_cast<std::uint32_t>(ops_.size());
    ops_.push_back(op);
  }
  // Sum weights are indexed by argument position; keep a parallel array.
  std::vector<double> w(args_.size(), 0.0);
  std::size_t wi = 0;
  for (const Op& op : ops_)
    if (op.kind == NodeKind::Sum)
      for (std::uint32_t k = 0; k < op.count; ++k) w[op.first + k] = weights_[wi++];
  weights_ = std::move(w);
  for (const Coeff& r : roots) roots_.push_back(local[r.id()]);
}

void Program::eval(double x1, std::span<double> out, std::vector<double>& work) const {
  check_x1_range(*profile_, x1);
  work.resize(ops_.size());
  double* v = work.data();
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    const Op& op = ops_[i];
    switch (op.kind) {
      case NodeKind::Const:
        v[i] = op.value;
        break;
      case NodeKind::X1:
        v[i] = x1;
        break;
      case NodeKind::ProfileDeriv:
        v[i] = profile_value(*profile_, op.p, op.order, x1);
        break;
      case NodeKind::Sum: {
        double acc = op.value;
        for (std::uint32_t k = 0; k < op.count; ++k) acc += weights_[op.first + k] * v[args_[op.first + k]];
        v[i] = acc;
        break;
      }
      case NodeKind::Prod: {
        double acc = op.value;
        for (std::uint32_t k = 0; k < op.count; ++k) acc *= v[args_[op.first + k]];
        v[i] = acc;
        break;
      }
      case NodeKind::IntPow:
        v[i] = ipow_d(v[args_[op.first]], op.p);
        break;
      case NodeKind::Antideriv:
        v[i] = (*op.table)(x1) - (*op.table)(op.value);
        break;
    }
  }
  for (std::size_t r = 0; r < roots_.size(); ++r) out[r] = v[roots_[r]];
}

double Program::eval1(double x1) const {
  std::vector<double> work;
  double v;
  eval(x1, {&v, 1}, work);
  return v;
}

// ---------------------------------------------------------------- direct evaluation

namespace {

struct DirectEval {
  const CoeffPool& pool;
  double x;
  double tol;
  std::vector<std::uint32_t>& path;
  std::unordered_map<std::uint32_t, double> memo;

  double value(std::uint32_t id);
};

struct QuadCtx {
  const CoeffPool* pool;
  std::uint32_t integrand;
  double tol;
  std::vector<std::uint32_t>* path;
};

double integrand_at(double y, void* params) {
  auto* c = static_cast<QuadCtx*>(params);
  DirectEval inner{*c->pool, y, c->tol, *c->path, {}};
  return inner.value(c->integrand);
}

std::string describe_path(const std::vector<std::uint32_t>& path) {
  std::string s;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) s += " > ";
    s += "Antideriv#" + std::to_string(path[i]);
  }
  return s;
}

double DirectEval::value(std::uint32_t id) {
  if (auto it = memo.find(id); it != memo.end()) return it->second;
  const Node& n = pool.node(id);
  double r = 0.0;
  switch (n.kind) {
    case NodeKind::Const:
      r = n.value;
      break;
    case NodeKind::X1:
      r = x;
      break;
    case NodeKind::ProfileDeriv:
      r = profile_value(pool.profile(), n.p, n.order, x);
      break;
    case NodeKind::Sum:
      r = n.value;
      for (std::size_t k = 0; k < n.kids.size(); ++k) r += n.weights[k] * value(n.kids[k]);
      break;
    case NodeKind::Prod:
      r = n.value;
      for (auto k : n.kids) r *= value(k);
      break;
    case NodeKind::IntPow:
      r = ipow_d(value(n.kids[0]), n.p);
      break;
    case NodeKind::Antideriv: {
      path.push_back(id);
      QuadCtx ctx{&pool, n.kids[0], tol * 0.1, &path};
      gsl_function F{&integrand_at, &ctx};
      const std::size_t limit = 2000;
      gsl_integration_workspace* ws = gsl_integration_workspace_alloc(limit);
      double err = 0.0;
      const int status =
          gsl_integration_qag(&F, n.value, x, tol, tol, limit, GSL_INTEG_GAUSS21, ws, &r, &err);
      gsl_integration_workspace_free(ws);
      if (status != GSL_SUCCESS) {
        const std::string where = describe_path(path);
        path.pop_back();
        throw QuadratureError(std::string("adaptive quadrature did not converge (") +
                              gsl_strerror(status) + ") at " + where);
      }
      path.pop_back();
      break;
    }
  }
  memo.emplace(id, r);
  return r;
}

const bool gsl_quiet = [] {
  gsl_set_error_handler_off();
  return true;
}();

}  // namespace

double coeff_eval(Coeff c, double x1, double tol) {
  if (!(tol > 0.0)) throw InputError("quadrature tolerance must be positive");
  (void)gsl_quiet;
  check_x1_range(c.pool()->profile(), x1);
  std::vector<std::uint32_t> path;
  DirectEval e{*c.pool(), x1, tol, path, {}};
  return e.value(c.id());
}

// ---------------------------------------------------------------- s-expressions

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void sexpr(const CoeffPool& pool, std::uint32_t id, std::ostringstream& os) {
  const Node& n = pool.node(id);
  switch (n.kind) {
    case NodeKind::Const:
      os << num(n.value);
      break;
    case NodeKind::X1:
      os << "x1";
      break;
    case NodeKind::ProfileDeriv:
      os << "(h" << n.p << ' ' << n.order << ')';
      break;
    case NodeKind::Sum:
      os << "(+";
      if (n.value != 0.0) os << ' ' << num(n.value);
      for (std::size_t k = 0; k < n.kids.size(); ++k) {
        os << ' ';
        if (n.weights[k] != 1.0) {
          os << "(* " << num(n.weights[k]) << ' ';
          sexpr(pool, n.kids[k], os);
          os << ')';
        } else {
          sexpr(pool, n.kids[k], os);
        }
      }
      os << ')';
      break;
    case NodeKind::Prod:
      os << "(*";
      if (n.value != 1.0) os << ' ' << num(n.value);
      for (auto k : n.kids) {
        os << ' ';
        sexpr(pool, k, os);
      }
      os << ')';
      break;
    case NodeKind::IntPow:
      os << "(^ ";
      sexpr(pool, n.kids[0], os);
      os << ' ' << n.p << ')';
      break;
    case NodeKind::Antideriv:
      os << "(int " << num(n.value) << ' ';
      sexpr(pool, n.kids[0], os);
      os << ')';
      break;
  }
}

}  // namespace

std::string to_sexpr_dag(std::span<const Coeff> roots) {
  if (roots.empty()) return "";
  const CoeffPool& pool = *roots[0].pool();
  auto leaf = [&](std::uint32_t id) {
    const NodeKind k = pool.node(id).kind;
    return k == NodeKind::Const || k == NodeKind::X1 || k == NodeKind::ProfileDeriv;
  };
  std::vector<char> seen(pool.size(), 0);
  std::vector<std::uint32_t> stack;
  for (const Coeff& c : roots) stack.push_back(c.id());
  while (!stack.empty()) {
    const std::uint32_t id = stack.back();
    stack.pop_back();
    if (seen[id]) continue;
    seen[id] = 1;
    for (auto k : pool.node(id).kids) stack.push_back(k);
  }
  std::ostringstream os;
  auto ref = [&](std::uint32_t id) {
    if (leaf(id)) {
      sexpr(pool, id, os);
    } else {
      os << '#' << id;
    }
  };
  // Kids always have smaller ids, so ascending order is topological.
  for (std::uint32_t id = 0; id < pool.size(); ++id) {
    if (!seen[id] || leaf(id)) continue;
    const Node& n = pool.node(id);
    os << '#' << id << " = ";
    switch (n.kind) {
      case NodeKind::Sum:
        os << "(+";
        if (n.value != 0.0) os << ' ' << num(n.value);
        for (std::size_t k = 0; k < n.kids.size(); ++k) {
          os << ' ';
          if (n.weights[k] != 1.0) {
            os << "(* " << num(n.weights[k]) << ' ';
            ref(n.kids[k]);
            os << ')';
          } else {
            ref(n.kids[k]);
          }
        }
        os << ')';
        break;
      case NodeKind::Prod:
        os << "(*";
        if (n.value != 1.0) os << ' ' << num(n.value);
        for (auto k : n.kids) {
          os << ' ';
          ref(k);
        }
        os << ')';
        break;
      case NodeKind::IntPow:
        os << "(^ ";
        ref(n.kids[0]);
        os << ' ' << n.p << ')';
        break;
      case NodeKind::Antideriv:
        os << "(int " << num(n.value) << ' ';
        ref(n.kids[0]);
        os << ')';
        break;
      default:
        break;
    }
    os << '\n';
  }
  return os.str();
}

std::string to_sexpr(Coeff c) {
  std::ostringstream os;
  sexpr(*c.pool(), c.id(), os);
  return os.str();
}

}  // namespace neck
