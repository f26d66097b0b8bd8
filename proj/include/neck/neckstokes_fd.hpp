#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "neck/fields.hpp"

namespace neck {

using VectorFn = std::function<std::array<double, 2>(double x1, double x2)>;
using ScalarFn = std::function<double(double x1, double x2)>;

enum class Grading { Uniform, SqrtDelta };

// Body-fitted rectangle for the neck over [-r, r]: x1 = xi, x2 = a(xi) + delta(xi) t with
// a = (h1 - h2)/2 and t in [-1/2, 1/2]. Faces xi[0..n1], t[0..n2]; cells in between.
struct NeckGrid {
  NeckProfile profile;
  double r = 0.5;
  int n1 = 256;
  int n2 = 64;
  std::vector<double> xi, xc;  // faces and cell centres in x1
  std::vector<double> t, tc;   // faces and cell centres in t

  // Component lattices (Q1 nodes): w1 at (xi, {-1/2, tc, 1/2}), w2 at ({-r, xc, r}, t).
  std::vector<double> w1_t() const;
  std::vector<double> w2_xi() const;

  double x2(double x1, double tt) const;
  double mapped_t(double x1, double x2) const;
};

// n1 cells in x1 (SqrtDelta: spacing proportional to sqrt(delta)), n2 >= 2 cells in t.
NeckGrid make_grid(const NeckProfile& p, double r, int n1, int n2,
                   Grading g = Grading::SqrtDelta);

struct DiscreteSolution {
  NeckGrid grid;
  double mu = 1.0;
  Eigen::MatrixXd w1;  // (n1+1) x (n2+2), wall rows included
  Eigen::MatrixXd w2;  // (n1+2) x (n2+1), side columns included
  Eigen::MatrixXd q;   // n1 x n2, zero mean
  double relative_residual = 0.0;
  double max_divergence = 0.0;  // largest cell-averaged |div w|
  bool side_zero = true;
};

struct SideData {
  bool zero = true;
  VectorFn values;  // used when zero == false; net flux is corrected on the right side
};

// -mu Lap w + grad q = f, div w = 0, w = 0 on both walls, side data on x1 = +-r.
DiscreteSolution solve_w(const NeckGrid& grid, const VectorFn& f, const SideData& side = {},
                         double mu = 1.0);

// Lattice field sampled from a closed-form velocity (boundary nodes included), q = 0.
DiscreteSolution sample_velocity(const NeckGrid& grid, const VectorFn& w, double mu = 1.0);

// Q1 interpolant of w and its physical gradient at (x1, x2).
std::array<double, 2> velocity_at(const DiscreteSolution& s, double x1, double x2);
std::array<double, 4> gradient_at(const DiscreteSolution& s, double x1, double x2);  // d1w1 d2w1 d1w2 d2w2

double global_energy(const DiscreteSolution& s);  // int |grad w|^2 over the grid
// int |grad w|^2 over {|x1 - z1| < delta(z1)}.
double local_energy(const DiscreteSolution& s, double z1);
// int f.w by the cell-midpoint rule (independent of the stiffness quadrature).
double forcing_work(const DiscreteSolution& s, const VectorFn& f);

// max |grad w| at cell centres with |x1| <= region, at least two cells from the sides.
double sup_grad(const DiscreteSolution& s, double region);
// max |grad^order w| on cell centres with x1 in [lo, hi], by repeated differences.
double sup_high_deriv(const DiscreteSolution& s, int order, double lo, double hi);

// Max nodal velocity error against a closed-form field.
double max_velocity_error(const DiscreteSolution& s, const VectorFn& exact);

// Smooth divergence-free test solution vanishing on the whole boundary.
struct Manufactured {
  VectorFn velocity;
  ScalarFn pressure;
  VectorFn forcing;
  std::function<std::array<double, 4>(double, double)> gradient;
};
Manufactured manufactured_solution(const NeckProfile& p, double r, double mu = 1.0);

// Sampler for a polynomial field; keeps the pool alive.
VectorFn field_function(const VectorField2& f, std::shared_ptr<CoeffPool> keep);

void export_csv(const DiscreteSolution& s, const std::string& path);

}  // namespace neck
