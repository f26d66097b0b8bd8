#pragma once

#include <span>
#include <vector>

#include "neck/coeff.hpp"

namespace neck {

enum class Axis { X1, X2 };
enum class Side { Top, Bottom };

// Field sum_j c_j(x1) x2^j. Trailing coefficients that are the constant zero are trimmed.
class PolyField {
 public:
  PolyField() = default;
  explicit PolyField(CoeffPool* pool) : pool_(pool) {}
  PolyField(CoeffPool* pool, std::vector<Coeff> coeffs);

  static PolyField constant(Coeff c);
  static PolyField monomial(Coeff c, int power);

  CoeffPool* pool() const { return pool_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const { return coeffs_.empty(); }
  const std::vector<Coeff>& coeffs() const { return coeffs_; }
  Coeff coeff(int j) const;

  PolyField truncated(int max_degree) const;  // terms of degree <= max_degree
  PolyField above(int min_degree) const;      // terms of degree >= min_degree

 private:
  void trim();
  CoeffPool* pool_ = nullptr;
  std::vector<Coeff> coeffs_;
};

PolyField operator+(const PolyField& a, const PolyField& b);
PolyField operator-(const PolyField& a, const PolyField& b);
PolyField operator-(const PolyField& a);
PolyField operator*(const PolyField& a, const PolyField& b);
PolyField operator*(const PolyField& a, Coeff c);
PolyField operator*(Coeff c, const PolyField& a);
PolyField operator*(const PolyField& a, double s);
PolyField operator*(double s, const PolyField& a);

struct VectorField2 {
  PolyField u1;
  PolyField u2;
};

VectorField2 operator+(const VectorField2& a, const VectorField2& b);
VectorField2 operator-(const VectorField2& a, const VectorField2& b);

// value = poly(x1, x2) + pure(x1)
struct ScalarPressure {
  PolyField poly;
  Coeff pure;
};

ScalarPressure operator+(const ScalarPressure& a, const ScalarPressure& b);

PolyField partial(const PolyField& f, Axis axis, int order = 1);
PolyField partial(const PolyField& f, int k1, int k2);  // d^k1/dx1^k1 d^k2/dx2^k2
PolyField divergence(const VectorField2& v);
VectorField2 laplacian(const VectorField2& v);
VectorField2 gradient_p(const ScalarPressure& p);

// int_0^{x2} f dy as a polynomial in x2.
PolyField integrate_x2(const PolyField& f);

// Substitutes x2 = s (a coefficient) into the polynomial.
Coeff substitute(const PolyField& f, Coeff s);
// Substitutes the wall position x2 = eps/2 + h1 (top) or -eps/2 - h2 (bottom).
Coeff trace(const PolyField& f, Side side);

// Compiled evaluator for a list of fields (and extra coefficients).
class FieldSampler {
 public:
  FieldSampler() = default;
  explicit FieldSampler(std::span<const PolyField> fields, std::span<const Coeff> extra = {});

  // Coefficients of every field at one x1; value() then evaluates along the fiber.
  class Fiber {
   public:
    double value(std::size_t field, double x2) const;
    double extra(std::size_t i) const { return values_[extra_offset_ + i]; }

   private:
    friend class FieldSampler;
    const FieldSampler* owner_ = nullptr;
    std::vector<double> values_;
    std::size_t extra_offset_ = 0;
  };

  Fiber at(double x1) const;
  Fiber at(double x1, std::vector<double>& work) const;
  double value(std::size_t field, double x1, double x2) const;
  std::size_t fields() const { return offsets_.size(); }

 private:
  Program program_;
  std::vector<std::size_t> offsets_;
  std::vector<int> sizes_;
  std::size_t extra_offset_ = 0;
};

}  // namespace neck
