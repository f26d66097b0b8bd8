#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "neck/geometry.hpp"

namespace neck {

class CoeffPool;

enum class NodeKind : std::uint8_t { Const, X1, ProfileDeriv, Sum, Prod, IntPow, Antideriv };

// One node of the expression DAG. Quotients are stored as Prod with IntPow(den, -n) factors.
struct Node {
  NodeKind kind = NodeKind::Const;
  double value = 0.0;  // Const: value, Sum: offset, Prod: factor, Antideriv: lower limit
  int p = 0;           // ProfileDeriv: wall index, IntPow: exponent
  int order = 0;       // ProfileDeriv: derivative order
  std::vector<std::uint32_t> kids;
  std::vector<double> weights;  // Sum: weight per kid
};

// Handle to an immutable coefficient function of x1 living in a CoeffPool.
class Coeff {
 public:
  Coeff() = default;
  Coeff(CoeffPool* pool, std::uint32_t id) : pool_(pool), id_(id) {}

  CoeffPool* pool() const { return pool_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return pool_ != nullptr; }
  const Node& node() const;
  bool is_const() const;
  bool is_zero() const;
  double const_value() const;

  bool operator==(const Coeff& o) const { return pool_ == o.pool_ && id_ == o.id_; }

 private:
  CoeffPool* pool_ = nullptr;
  std::uint32_t id_ = 0;
};

Coeff operator+(Coeff a, Coeff b);
Coeff operator-(Coeff a, Coeff b);
Coeff operator*(Coeff a, Coeff b);
Coeff operator/(Coeff a, Coeff b);  // denominator must be certified positive
Coeff operator-(Coeff a);
Coeff operator+(Coeff a, double b);
Coeff operator+(double a, Coeff b);
Coeff operator-(Coeff a, double b);
Coeff operator-(double a, Coeff b);
Coeff operator*(Coeff a, double b);
Coeff operator*(double a, Coeff b);
Coeff operator/(Coeff a, double b);
Coeff pow(Coeff base, int n);

Coeff coeff_diff(Coeff c);
Coeff coeff_diff(Coeff c, int order);

// Antideriv(lower, g)(x1) = int_lower^x1 g(y) dy
Coeff antideriv(Coeff integrand, double lower);

// Direct evaluation: adaptive Gauss-Kronrod on every Antideriv node, nested integrals
// evaluated recursively with the tolerance tightened tenfold per nesting level.
double coeff_eval(Coeff c, double x1, double tol = 1e-10);

// s-expression dump of the tree below c.
std::string to_sexpr(Coeff c);
// Shared-node dump: one "#id = expr" line per interior node reachable from roots, in
// ascending id order, with leaves written inline.
std::string to_sexpr_dag(std::span<const Coeff> roots);

// Cumulative antiderivative of a smooth integrand on [-L, L], tabulated as
// piecewise Chebyshev series on adaptively bisected panels.
class AntiderivTable {
 public:
  static constexpr int kOrder = 32;

  AntiderivTable() = default;
  // Panels start from the sorted break hints (plus -L, L, lower) and are bisected
  // until the Chebyshev tail drops below the relative tolerance.
  static AntiderivTable build(const std::function<double(double)>& integrand, double lower,
                              double L, std::span<const double> hints);

  double operator()(double x) const;
  std::size_t panels() const { return breaks_.empty() ? 0 : breaks_.size() - 1; }

 private:
  std::vector<double> breaks_;
  std::vector<std::array<double, kOrder + 1>> series_;
  std::vector<double> offset_;
};

class Program;

// Arena of hash-consed nodes bound to one profile. Construction is single-threaded;
// evaluation (Program, coeff_eval) may run concurrently once construction is done.
class CoeffPool {
 public:
  explicit CoeffPool(NeckProfile profile);
  CoeffPool(const CoeffPool&) = delete;
  CoeffPool& operator=(const CoeffPool&) = delete;

  const NeckProfile& profile() const { return profile_; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::uint32_t id) const { return nodes_[id]; }

  Coeff constant(double v);
  Coeff zero() { return constant(0.0); }
  Coeff one() { return constant(1.0); }
  Coeff x1();
  Coeff profile_deriv(int wall, int order);
  Coeff sum(std::span<const Coeff> terms, std::span<const double> weights, double offset = 0.0);
  Coeff prod(std::span<const Coeff> factors, double factor = 1.0);
  Coeff ipow(Coeff base, int n);
  Coeff antideriv(Coeff integrand, double lower);
  Coeff diff(Coeff c);

  // Marks c as strictly positive on [-2R, 2R]; only such nodes may carry negative powers.
  void declare_positive(Coeff c);
  bool is_positive(Coeff c) const;

  // Tabulated antiderivative for an Antideriv node (built on first use, thread-safe).
  const AntiderivTable& table(std::uint32_t id) const;

 private:
  std::uint32_t intern(Node n);
  std::uint32_t raw_prod(std::vector<std::pair<std::uint32_t, int>> factors, double factor);
  std::uint32_t strip_factor(std::uint32_t prod_id);

  struct Slot {
    std::once_flag once;
    AntiderivTable table;
  };

  NeckProfile profile_;
  std::vector<Node> nodes_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets_;
  std::unordered_map<std::uint32_t, std::uint32_t> diff_memo_;
  std::unordered_set<std::uint32_t> positive_;
  mutable std::mutex slot_mutex_;
  mutable std::unordered_map<std::uint32_t, std::unique_ptr<Slot>> slots_;
  std::uint32_t x1_id_ = 0;
};

// Compiled evaluator for a set of root coefficients. Antideriv nodes read their tables.
class Program {
 public:
  Program() = default;
  Program(const CoeffPool& pool, std::span<const Coeff> roots);

  std::size_t size() const { return ops_.size(); }
  std::size_t roots() const { return roots_.size(); }
  // out.size() must equal roots(); work is scratch reused between calls.
  void eval(double x1, std::span<double> out, std::vector<double>& work) const;
  double eval1(double x1) const;

 private:
  struct Op {
    NodeKind kind;
    double value;
    int p;
    int order;
    std::uint32_t first;
    std::uint32_t count;
    const AntiderivTable* table;
  };
  const NeckProfile* profile_ = nullptr;
  std::vector<Op> ops_;
  std::vector<std::uint32_t> args_;
  std::vector<double> weights_;
  std::vector<std::uint32_t> roots_;
};

}  // namespace neck
