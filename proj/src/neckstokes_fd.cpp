#include "neck/neckstokes_fd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "neck/errors.hpp"

namespace neck {

namespace {

double mid_shift(const NeckProfile& p, double x1) {
  return 0.5 * (p.h1.eval(x1) - p.h2.eval(x1));
}
double mid_shift_prime(const NeckProfile& p, double x1) {
  return 0.5 * (p.h1.eval(x1, 1) - p.h2.eval(x1, 1));
}

// Metric of the map at (xi, t): delta, and c = -(a' + delta' t)/delta so that
// d/dx1 = d/dxi + c d/dt and d/dx2 = (1/delta) d/dt.
struct Metric {
  double delta;
  double c;
};
Metric metric(const NeckProfile& p, double xi, double t) {
  const double d = delta(p, xi);
  return {d, -(mid_shift_prime(p, xi) + delta_prime(p, xi) * t) / d};
}

const double kGauss2[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
const double kGauss3[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
const double kGauss3w[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

// Tensor lattice holding one velocity component.
struct Lattice {
  std::vector<double> xs, ts;
  int nx() const { return static_cast<int>(xs.size()); }
  int nt() const { return static_cast<int>(ts.size()); }
};

Lattice lattice1(const NeckGrid& g) { return {g.xi, g.w1_t()}; }
Lattice lattice2(const NeckGrid& g) { return {g.w2_xi(), g.t}; }

int locate(const std::vector<double>& xs, double x) {
  if (x < xs.front() - 1e-12 * (1 + std::abs(xs.front())) ||
      x > xs.back() + 1e-12 * (1 + std::abs(xs.back())))
    return -1;
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  int i = static_cast<int>(it - xs.begin()) - 1;
  return std::clamp(i, 0, static_cast<int>(xs.size()) - 2);
}

// Q1 value and mapped derivatives (d/dxi, d/dt) of lattice values at (xi, t).
std::array<double, 3> q1_eval(const Lattice& L, const Eigen::MatrixXd& v, double xi, double t) {
  const int I = locate(L.xs, xi), J = locate(L.ts, t);
  if (I < 0 || J < 0) throw InputError("point outside the grid");
  const double hx = L.xs[I + 1] - L.xs[I], ht = L.ts[J + 1] - L.ts[J];
  const double u = (xi - L.xs[I]) / hx, s = (t - L.ts[J]) / ht;
  const double a = v(I, J), b = v(I + 1, J), c = v(I, J + 1), d = v(I + 1, J + 1);
  const double val = a * (1 - u) * (1 - s) + b * u * (1 - s) + c * (1 - u) * s + d * u * s;
  const double dxi = ((b - a) * (1 - s) + (d - c) * s) / hx;
  const double dt = ((c - a) * (1 - u) + (d - b) * u) / ht;
  return {val, dxi, dt};
}

// int |grad v|^2 over elements of L, with the x1 extent clipped to [lo, hi].
double lattice_energy(const NeckProfile& p, const Lattice& L, const Eigen::MatrixXd& v, double lo,
                      double hi) {
  double total = 0.0;
  for (int I = 0; I + 1 < L.nx(); ++I) {
    const double a = std::max(L.xs[I], lo), b = std::min(L.xs[I + 1], hi);
    if (!(b > a)) continue;
    const double hx = L.xs[I + 1] - L.xs[I];
    for (int J = 0; J + 1 < L.nt(); ++J) {
      const double ht = L.ts[J + 1] - L.ts[J];
      const double v00 = v(I, J), v10 = v(I + 1, J), v01 = v(I, J + 1), v11 = v(I + 1, J + 1);
      for (int gx = 0; gx < 3; ++gx) {
        const double xi = a + (b - a) * kGauss3[gx];
        const double u = (xi - L.xs[I]) / hx;
        for (int gt = 0; gt < 3; ++gt) {
          const double s = kGauss3[gt];
          const double t = L.ts[J] + ht * s;
          const Metric m = metric(p, xi, t);
          const double dxi = ((v10 - v00) * (1 - s) + (v11 - v01) * s) / hx;
          const double dt = ((v01 - v00) * (1 - u) + (v11 - v10) * u) / ht;
          const double g1 = dxi + m.c * dt, g2 = dt / m.delta;
          total += (g1 * g1 + g2 * g2) * m.delta * (b - a) * ht * kGauss3w[gx] * kGauss3w[gt];
        }
      }
    }
  }
  return total;
}

// Three-point derivative on a nonuniform axis (one-sided at the ends).
double axis_diff(const std::vector<double>& x, const std::vector<double>& f, std::size_t i) {
  const std::size_t n = x.size();
  auto three = [&](std::size_t i0, double at) {
    const double x0 = x[i0], x1 = x[i0 + 1], x2 = x[i0 + 2];
    return f[i0] * ((at - x1) + (at - x2)) / ((x0 - x1) * (x0 - x2)) +
           f[i0 + 1] * ((at - x0) + (at - x2)) / ((x1 - x0) * (x1 - x2)) +
           f[i0 + 2] * ((at - x0) + (at - x1)) / ((x2 - x0) * (x2 - x1));
  };
  if (n < 3) return (f[1] - f[0]) / (x[1] - x[0]);
  if (i == 0) return three(0, x[0]);
  if (i == n - 1) return three(n - 3, x[n - 1]);
  return three(i - 1, x[i]);
}

// Dual numbers nest to give mixed derivatives of closed-form test fields.
template <class T>
struct Dual {
  T v{};
  T d{};
};
template <class T>
Dual<T> operator+(Dual<T> a, Dual<T> b) { return {a.v + b.v, a.d + b.d}; }
template <class T>
Dual<T> operator-(Dual<T> a, Dual<T> b) { return {a.v - b.v, a.d - b.d}; }
template <class T>
Dual<T> operator*(Dual<T> a, Dual<T> b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
template <class T>
Dual<T> operator/(Dual<T> a, Dual<T> b) { return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)}; }
template <class T>
Dual<T> operator+(Dual<T> a, double b) { return {a.v + b, a.d}; }
template <class T>
Dual<T> operator*(double a, Dual<T> b) { return {a * b.v, a * b.d}; }
template <class T>
Dual<T> operator*(Dual<T> a, double b) { return {a.v * b, a.d * b}; }
template <class T>
Dual<T> sin(Dual<T> a) {
  using std::cos;
  using std::sin;
  return {sin(a.v), cos(a.v) * a.d};
}
template <class T>
Dual<T> cos(Dual<T> a) {
  using std::cos;
  using std::sin;
  return {cos(a.v), -1.0 * (sin(a.v) * a.d)};
}

template <class T>
T poly_eval(const std::vector<double>& c, T x) {
  T r = x * 0.0;
  r = r + (c.empty() ? 0.0 : c.back());
  for (int i = static_cast<int>(c.size()) - 2; i >= 0; --i) r = r * x + c[i];
  return r;
}

using D1 = Dual<double>;
using D2 = Dual<D1>;
using D3 = Dual<D2>;

}  // namespace

// ---------------------------------------------------------------- grid

std::vector<double> NeckGrid::w1_t() const {
  std::vector<double> ts{-0.5};
  ts.insert(ts.end(), tc.begin(), tc.end());
  ts.push_back(0.5);
  return ts;
}

std::vector<double> NeckGrid::w2_xi() const {
  std::vector<double> xs{xi.front()};
  xs.insert(xs.end(), xc.begin(), xc.end());
  xs.push_back(xi.back());
  return xs;
}

double NeckGrid::x2(double x1, double tt) const {
  return mid_shift(profile, x1) + delta(profile, x1) * tt;
}

double NeckGrid::mapped_t(double x1, double x2v) const {
  return (x2v - mid_shift(profile, x1)) / delta(profile, x1);
}

NeckGrid make_grid(const NeckProfile& p, double r, int n1, int n2, Grading grading) {
  if (n1 < 4 || n2 < 2) throw InputError("grid needs at least 4 x1 cells and 2 t cells");
  if (!(r > 0) || r > 2 * p.R) throw InputError("grid half-width must lie in (0, 2R]");
  NeckGrid g;
  g.profile = p;
  g.r = r;
  g.n1 = n1;
  g.n2 = n2;
  g.xi.resize(n1 + 1);
  if (grading == Grading::Uniform) {
    for (int i = 0; i <= n1; ++i) g.xi[i] = -r + 2.0 * r * i / n1;
  } else {
    const int fine = 40000;
    std::vector<double> xs(fine + 1), phi(fine + 1, 0.0);
    for (int k = 0; k <= fine; ++k) xs[k] = -r + 2.0 * r * k / fine;
    for (int k = 1; k <= fine; ++k)
      phi[k] = phi[k - 1] + 0.5 * (xs[k] - xs[k - 1]) *
                                (1.0 / std::sqrt(delta(p, xs[k])) + 1.0 / std::sqrt(delta(p, xs[k - 1])));
    int k = 0;
    for (int i = 0; i <= n1; ++i) {
      const double target = phi[fine] * i / n1;
      while (k + 1 < fine && phi[k + 1] < target) ++k;
      const double w = (target - phi[k]) / (phi[k + 1] - phi[k]);
      g.xi[i] = xs[k] + w * (xs[k + 1] - xs[k]);
    }
    g.xi.front() = -r;
    g.xi.back() = r;
  }
  g.xc.resize(n1);
  for (int i = 0; i < n1; ++i) g.xc[i] = 0.5 * (g.xi[i] + g.xi[i + 1]);
  g.t.resize(n2 + 1);
  for (int j = 0; j <= n2; ++j) g.t[j] = -0.5 + static_cast<double>(j) / n2;
  g.tc.resize(n2);
  for (int j = 0; j < n2; ++j) g.tc[j] = 0.5 * (g.t[j] + g.t[j + 1]);
  return g;
}

// ---------------------------------------------------------------- solver

DiscreteSolution solve_w(const NeckGrid& g, const VectorFn& f, const SideData& side, double mu) {
  if (g.n2 < 32) throw InputError("grid must resolve the gap: at least 32 cells across");
  const int n1 = g.n1, n2 = g.n2;
  const NeckProfile& p = g.profile;
  const Lattice L1 = lattice1(g), L2 = lattice2(g);

  DiscreteSolution sol;
  sol.grid = g;
  sol.mu = mu;
  sol.side_zero = side.zero;
  sol.w1 = Eigen::MatrixXd::Zero(n1 + 1, n2 + 2);
  sol.w2 = Eigen::MatrixXd::Zero(n1 + 2, n2 + 1);
  sol.q = Eigen::MatrixXd::Zero(n1, n2);

  // Side values; the right-hand w1 column absorbs any net flux.
  if (!side.zero) {
    for (int I : {0, n1 + 1}) {
      const double x1 = L2.xs[I];
      for (int J = 1; J < n2; ++J) sol.w2(I, J) = side.values(x1, g.x2(x1, L2.ts[J]))[1];
    }
    for (int I : {0, n1}) {
      const double x1 = L1.xs[I];
      for (int J = 1; J <= n2; ++J) sol.w1(I, J) = side.values(x1, g.x2(x1, L1.ts[J]))[0];
    }
    double net = 0.0, weight = 0.0;
    for (int j = 0; j < n2; ++j) {
      const double dt = g.t[j + 1] - g.t[j];
      net += dt * (delta(p, g.r) * sol.w1(n1, j + 1) - delta(p, -g.r) * sol.w1(0, j + 1));
      weight += dt * delta(p, g.r);
    }
    for (int j = 0; j < n2; ++j) sol.w1(n1, j + 1) -= net / weight;
  }

  auto id1 = [&](int I, int J) { return (I >= 1 && I <= n1 - 1 && J >= 1 && J <= n2) ? (I - 1) * n2 + (J - 1) : -1; };
  const int n_w1 = (n1 - 1) * n2;
  auto id2 = [&](int I, int J) { return (I >= 1 && I <= n1 && J >= 1 && J <= n2 - 1) ? n_w1 + (I - 1) * (n2 - 1) + (J - 1) : -1; };
  const int n_w = n_w1 + n1 * (n2 - 1);
  auto idq = [&](int i, int j) { return n_w + i * n2 + j; };
  const int n_all = n_w + n1 * n2;

  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_all);

  // Viscous block and lumped load, one component lattice at a time.
  auto assemble = [&](const Lattice& L, const Eigen::MatrixXd& bc, auto&& id, int comp) {
    std::vector<double> mass(L.nx() * L.nt(), 0.0);
    for (int I = 0; I + 1 < L.nx(); ++I) {
      const double hx = L.xs[I + 1] - L.xs[I];
      for (int J = 0; J + 1 < L.nt(); ++J) {
        const double ht = L.ts[J + 1] - L.ts[J];
        const int ni[4] = {I, I + 1, I, I + 1}, nj[4] = {J, J, J + 1, J + 1};
        double K[4][4] = {};
        for (double u : kGauss2) {
          for (double s : kGauss2) {
            const double xi = L.xs[I] + hx * u, t = L.ts[J] + ht * s;
            const Metric m = metric(p, xi, t);
            const double N[4] = {(1 - u) * (1 - s), u * (1 - s), (1 - u) * s, u * s};
            const double Nu[4] = {-(1 - s), (1 - s), -s, s};
            const double Ns[4] = {-(1 - u), -u, (1 - u), u};
            const double wgt = m.delta * hx * ht * 0.25;
            double g1[4], g2[4];
            for (int a = 0; a < 4; ++a) {
              g1[a] = Nu[a] / hx + m.c * Ns[a] / ht;
              g2[a] = Ns[a] / (ht * m.delta);
              mass[ni[a] * L.nt() + nj[a]] += N[a] * wgt;
            }
            for (int a = 0; a < 4; ++a)
              for (int b = 0; b < 4; ++b) K[a][b] += mu * (g1[a] * g1[b] + g2[a] * g2[b]) * wgt;
          }
        }
        for (int a = 0; a < 4; ++a) {
          const int ra = id(ni[a], nj[a]);
          if (ra < 0) continue;
          for (int b = 0; b < 4; ++b) {
            const int cb = id(ni[b], nj[b]);
            if (cb >= 0) trips.emplace_back(ra, cb, K[a][b]);
            else rhs[ra] -= K[a][b] * bc(ni[b], nj[b]);
          }
        }
      }
    }
    for (int I = 0; I < L.nx(); ++I) {
      const double x1 = L.xs[I];
      for (int J = 0; J < L.nt(); ++J) {
        const int r = id(I, J);
        if (r < 0) continue;
        const auto fv = f(x1, g.x2(x1, L.ts[J]));
        if (!std::isfinite(fv[0]) || !std::isfinite(fv[1])) throw InputError("non-finite forcing sample");
        rhs[r] += fv[comp] * mass[I * L.nt() + J];
      }
    }
  };
  assemble(L1, sol.w1, id1, 0);
  assemble(L2, sol.w2, id2, 1);

  // Divergence rows: cell integral of div w in flux form. Entries go to -B (continuity) and
  // -B^T (pressure force), keeping the saddle system symmetric.
  const int pinned = idq(0, 0);
  auto add_div = [&](int cell, int col, double value, double bc_value) {
    if (col >= 0) {
      if (cell != pinned) trips.emplace_back(cell, col, -value);
      trips.emplace_back(col, cell, -value);
    } else if (cell != pinned) {
      rhs[cell] += value * bc_value;
    }
  };
  for (int i = 0; i < n1; ++i) {
    const double dxi = g.xi[i + 1] - g.xi[i];
    for (int j = 0; j < n2; ++j) {
      const int cell = idq(i, j);
      const double dt = g.t[j + 1] - g.t[j];
      add_div(cell, id1(i + 1, j + 1), delta(p, g.xi[i + 1]) * dt, sol.w1(i + 1, j + 1));
      add_div(cell, id1(i, j + 1), -delta(p, g.xi[i]) * dt, sol.w1(i, j + 1));
      for (int face : {j, j + 1}) {
        if (face == 0 || face == n2) continue;  // walls carry no flux
        const double sign = face == j + 1 ? 1.0 : -1.0;
        const double slope = mid_shift_prime(p, g.xc[i]) + delta_prime(p, g.xc[i]) * g.t[face];
        add_div(cell, id2(i + 1, face), sign * dxi, sol.w2(i + 1, face));
        for (int I : {i, i + 1})
          for (int J : {face, face + 1}) add_div(cell, id1(I, J), -sign * dxi * slope * 0.25, sol.w1(I, J));
      }
    }
  }
  trips.emplace_back(pinned, pinned, 1.0);
  rhs[pinned] = 0.0;

  Eigen::SparseMatrix<double> K(n_all, n_all);
  K.setFromTriplets(trips.begin(), trips.end());
  K.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(K);
  lu.factorize(K);
  if (lu.info() != Eigen::Success) throw ConstructionError("saddle-point factorization failed: " + lu.lastErrorMessage());
  Eigen::VectorXd x = lu.solve(rhs);
  // A few refinement sweeps push the continuity rows down to roundoff.
  for (int sweep = 0; sweep < 3; ++sweep) {
    const Eigen::VectorXd res = rhs - K * x;
    x += lu.solve(res);
  }
  const double bnorm = rhs.norm();
  sol.relative_residual = bnorm > 0 ? (K * x - rhs).norm() / bnorm : (K * x).norm();

  for (int I = 1; I <= n1 - 1; ++I)
    for (int J = 1; J <= n2; ++J) sol.w1(I, J) = x[id1(I, J)];
  for (int I = 1; I <= n1; ++I)
    for (int J = 1; J <= n2 - 1; ++J) sol.w2(I, J) = x[id2(I, J)];
  double mean = 0.0, area = 0.0;
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      const double a = delta(p, g.xc[i]) * (g.xi[i + 1] - g.xi[i]) * (g.t[j + 1] - g.t[j]);
      sol.q(i, j) = x[idq(i, j)];
      mean += a * sol.q(i, j);
      area += a;
    }
  sol.q.array() -= mean / area;

  // Cell-averaged divergence of the full field, pinned cell included.
  double worst = 0.0;
  for (int i = 0; i < n1; ++i) {
    const double dxi = g.xi[i + 1] - g.xi[i];
    for (int j = 0; j < n2; ++j) {
      const double dt = g.t[j + 1] - g.t[j];
      double flux = delta(p, g.xi[i + 1]) * dt * sol.w1(i + 1, j + 1) - delta(p, g.xi[i]) * dt * sol.w1(i, j + 1);
      for (int face : {j, j + 1}) {
        if (face == 0 || face == n2) continue;
        const double sign = face == j + 1 ? 1.0 : -1.0;
        const double slope = mid_shift_prime(p, g.xc[i]) + delta_prime(p, g.xc[i]) * g.t[face];
        const double avg = 0.25 * (sol.w1(i, face) + sol.w1(i, face + 1) + sol.w1(i + 1, face) + sol.w1(i + 1, face + 1));
        flux += sign * dxi * (sol.w2(i + 1, face) - slope * avg);
      }
      worst = std::max(worst, std::abs(flux) / (delta(p, g.xc[i]) * dxi * dt));
    }
  }
  sol.max_divergence = worst;
  return sol;
}

DiscreteSolution sample_velocity(const NeckGrid& g, const VectorFn& w, double mu) {
  DiscreteSolution s;
  s.grid = g;
  s.mu = mu;
  const Lattice L1 = lattice1(g), L2 = lattice2(g);
  s.w1.resize(L1.nx(), L1.nt());
  s.w2.resize(L2.nx(), L2.nt());
  s.q = Eigen::MatrixXd::Zero(g.n1, g.n2);
  for (int I = 0; I < L1.nx(); ++I)
    for (int J = 0; J < L1.nt(); ++J) s.w1(I, J) = w(L1.xs[I], g.x2(L1.xs[I], L1.ts[J]))[0];
  for (int I = 0; I < L2.nx(); ++I)
    for (int J = 0; J < L2.nt(); ++J) s.w2(I, J) = w(L2.xs[I], g.x2(L2.xs[I], L2.ts[J]))[1];
  return s;
}

// ---------------------------------------------------------------- diagnostics

std::array<double, 2> velocity_at(const DiscreteSolution& s, double x1, double x2) {
  const double t = s.grid.mapped_t(x1, x2);
  return {q1_eval(lattice1(s.grid), s.w1, x1, t)[0], q1_eval(lattice2(s.grid), s.w2, x1, t)[0]};
}

std::array<double, 4> gradient_at(const DiscreteSolution& s, double x1, double x2) {
  const double t = s.grid.mapped_t(x1, x2);
  const Metric m = metric(s.grid.profile, x1, t);
  const auto a = q1_eval(lattice1(s.grid), s.w1, x1, t);
  const auto b = q1_eval(lattice2(s.grid), s.w2, x1, t);
  return {a[1] + m.c * a[2], a[2] / m.delta, b[1] + m.c * b[2], b[2] / m.delta};
}

double global_energy(const DiscreteSolution& s) {
  const double r = s.grid.r;
  return lattice_energy(s.grid.profile, lattice1(s.grid), s.w1, -r, r) +
         lattice_energy(s.grid.profile, lattice2(s.grid), s.w2, -r, r);
}

double local_energy(const DiscreteSolution& s, double z1) {
  const double d = delta(s.grid.profile, z1);
  const double lo = z1 - d, hi = z1 + d;
  if (lo < -s.grid.r || hi > s.grid.r) throw InputError("local energy window lies outside the grid");
  return lattice_energy(s.grid.profile, lattice1(s.grid), s.w1, lo, hi) +
         lattice_energy(s.grid.profile, lattice2(s.grid), s.w2, lo, hi);
}

double forcing_work(const DiscreteSolution& s, const VectorFn& f) {
  const NeckGrid& g = s.grid;
  double total = 0.0;
  for (int i = 0; i < g.n1; ++i) {
    const double dxi = g.xi[i + 1] - g.xi[i];
    for (int j = 0; j < g.n2; ++j) {
      const double x2 = g.x2(g.xc[i], g.tc[j]);
      const auto fv = f(g.xc[i], x2);
      const auto wv = velocity_at(s, g.xc[i], x2);
      total += (fv[0] * wv[0] + fv[1] * wv[1]) * delta(g.profile, g.xc[i]) * dxi * (g.t[j + 1] - g.t[j]);
    }
  }
  return total;
}

double sup_grad(const DiscreteSolution& s, double region) {
  const NeckGrid& g = s.grid;
  double best = 0.0;
  for (int i = 2; i < g.n1 - 2; ++i) {
    if (std::abs(g.xc[i]) > region) continue;
    for (int j = 0; j < g.n2; ++j) {
      const auto d = gradient_at(s, g.xc[i], g.x2(g.xc[i], g.tc[j]));
      best = std::max(best, std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]));
    }
  }
  return best;
}

double sup_high_deriv(const DiscreteSolution& s, int order, double lo, double hi) {
  const NeckGrid& g = s.grid;
  if (order < 1 || order > 3) throw InputError("derivative order must be 1, 2 or 3");
  if (g.n1 < 2 * (order + 2) || g.n2 < order + 2) throw InputError("derivative order too high for the grid resolution");
  const NeckProfile& p = g.profile;
  const int n1 = g.n1, n2 = g.n2;
  // Both components on cell centres.
  std::vector<std::vector<double>> level;
  for (int comp = 0; comp < 2; ++comp) {
    std::vector<double> v(n1 * n2);
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j)
        v[i * n2 + j] = comp == 0 ? 0.5 * (s.w1(i, j + 1) + s.w1(i + 1, j + 1))
                                  : 0.5 * (s.w2(i + 1, j) + s.w2(i + 1, j + 1));
    level.push_back(std::move(v));
  }
  for (int k = 0; k < order; ++k) {
    std::vector<std::vector<double>> next;
    for (const auto& v : level) {
      std::vector<double> d1(n1 * n2), d2(n1 * n2), col(n1), row(n2);
      std::vector<double> dxi(n1 * n2), dt(n1 * n2);
      for (int j = 0; j < n2; ++j) {
        for (int i = 0; i < n1; ++i) col[i] = v[i * n2 + j];
        for (int i = 0; i < n1; ++i) dxi[i * n2 + j] = axis_diff(g.xc, col, i);
      }
      for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) row[j] = v[i * n2 + j];
        for (int j = 0; j < n2; ++j) dt[i * n2 + j] = axis_diff(g.tc, row, j);
      }
      for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
          const Metric m = metric(p, g.xc[i], g.tc[j]);
          d1[i * n2 + j] = dxi[i * n2 + j] + m.c * dt[i * n2 + j];
          d2[i * n2 + j] = dt[i * n2 + j] / m.delta;
        }
      next.push_back(std::move(d1));
      next.push_back(std::move(d2));
    }
    level = std::move(next);
  }
  double best = 0.0;
  for (int i = order; i < n1 - order; ++i) {
    if (g.xc[i] < lo || g.xc[i] > hi) continue;
    for (int j = 0; j < n2; ++j) {
      double sum = 0.0;
      for (const auto& v : level) sum += v[i * n2 + j] * v[i * n2 + j];
      best = std::max(best, std::sqrt(sum));
    }
  }
  return best;
}

double max_velocity_error(const DiscreteSolution& s, const VectorFn& exact) {
  const NeckGrid& g = s.grid;
  const Lattice L1 = lattice1(g), L2 = lattice2(g);
  double e = 0.0;
  for (int I = 0; I < L1.nx(); ++I)
    for (int J = 0; J < L1.nt(); ++J)
      e = std::max(e, std::abs(s.w1(I, J) - exact(L1.xs[I], g.x2(L1.xs[I], L1.ts[J]))[0]));
  for (int I = 0; I < L2.nx(); ++I)
    for (int J = 0; J < L2.nt(); ++J)
      e = std::max(e, std::abs(s.w2(I, J) - exact(L2.xs[I], g.x2(L2.xs[I], L2.ts[J]))[1]));
  return e;
}

// ---------------------------------------------------------------- manufactured solution

namespace {

// Stream function sin^2(pi s) sin^2(pi (t + 1/2)), s = (x1 + r)/(2r), in physical variables.
template <class T>
T stream(const NeckProfile& p, double r, T x1, T x2) {
  using std::sin;
  const T dl = poly_eval(p.h1.coeffs(), x1) + poly_eval(p.h2.coeffs(), x1) + p.eps;
  const T a = 0.5 * (poly_eval(p.h1.coeffs(), x1) - 1.0 * poly_eval(p.h2.coeffs(), x1));
  const T t = (x2 - a) / dl;
  const T s1 = sin((M_PI / (2.0 * r)) * (x1 + r));
  const T s2 = sin(M_PI * (t + 0.5));
  return s1 * s1 * (s2 * s2);
}

template <class T>
T pressure_fn(const NeckProfile& p, double r, T x1, T x2) {
  using std::cos;
  using std::sin;
  const T dl = poly_eval(p.h1.coeffs(), x1) + poly_eval(p.h2.coeffs(), x1) + p.eps;
  const T a = 0.5 * (poly_eval(p.h1.coeffs(), x1) - 1.0 * poly_eval(p.h2.coeffs(), x1));
  const T t = (x2 - a) / dl;
  return sin((M_PI / r) * x1) * cos(M_PI * t);
}

// d^3 psi / (d x_a d x_b d x_c), directions given as unit vectors.
double third(const NeckProfile& p, double r, double x1, double x2, int a, int b, int c) {
  auto var = [&](double x, int k) {
    const double ea = a == k, eb = b == k, ec = c == k;
    return D3{D2{D1{x, ec}, D1{eb, 0.0}}, D2{D1{ea, 0.0}, D1{0.0, 0.0}}};
  };
  return stream(p, r, var(x1, 0), var(x2, 1)).d.d.d;
}

double second(const NeckProfile& p, double r, double x1, double x2, int a, int b) {
  auto var = [&](double x, int k) { return D2{D1{x, double(b == k)}, D1{double(a == k), 0.0}}; };
  return stream(p, r, var(x1, 0), var(x2, 1)).d.d;
}

double first(const NeckProfile& p, double r, double x1, double x2, int a) {
  return stream(p, r, D1{x1, double(a == 0)}, D1{x2, double(a == 1)}).d;
}

}  // namespace

Manufactured manufactured_solution(const NeckProfile& p, double r, double mu) {
  Manufactured m;
  m.velocity = [p, r](double x1, double x2) -> std::array<double, 2> {
    return {first(p, r, x1, x2, 1), -first(p, r, x1, x2, 0)};
  };
  m.pressure = [p, r](double x1, double x2) { return pressure_fn(p, r, x1, x2); };
  m.gradient = [p, r](double x1, double x2) -> std::array<double, 4> {
    return {second(p, r, x1, x2, 0, 1), second(p, r, x1, x2, 1, 1), -second(p, r, x1, x2, 0, 0),
            -second(p, r, x1, x2, 0, 1)};
  };
  m.forcing = [p, r, mu](double x1, double x2) -> std::array<double, 2> {
    const double lap1 = third(p, r, x1, x2, 0, 0, 1) + third(p, r, x1, x2, 1, 1, 1);
    const double lap2 = -(third(p, r, x1, x2, 0, 0, 0) + third(p, r, x1, x2, 0, 1, 1));
    const double px1 = pressure_fn(p, r, D1{x1, 1.0}, D1{x2, 0.0}).d;
    const double px2 = pressure_fn(p, r, D1{x1, 0.0}, D1{x2, 1.0}).d;
    return {-mu * lap1 + px1, -mu * lap2 + px2};
  };
  return m;
}

VectorFn field_function(const VectorField2& f, std::shared_ptr<CoeffPool> keep) {
  const std::vector<PolyField> fields{f.u1, f.u2};
  auto sampler = std::make_shared<FieldSampler>(fields);
  struct Cache {
    double x1 = std::nan("");
    FieldSampler::Fiber fiber;
  };
  auto cache = std::make_shared<Cache>();
  return [sampler, cache, keep](double x1, double x2) -> std::array<double, 2> {
    if (!(cache->x1 == x1)) {
      cache->fiber = sampler->at(x1);
      cache->x1 = x1;
    }
    return {cache->fiber.value(0, x2), cache->fiber.value(1, x2)};
  };
}

void export_csv(const DiscreteSolution& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "x1,x2,w1,w2,q\n";
  const NeckGrid& g = s.grid;
  char buf[160];
  for (int i = 0; i < g.n1; ++i)
    for (int j = 0; j < g.n2; ++j) {
      const double x2 = g.x2(g.xc[i], g.tc[j]);
      const auto w = velocity_at(s, g.xc[i], x2);
      std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g\n", g.xc[i], x2, w[0], w[1], s.q(i, j));
      out << buf;
    }
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace neck
