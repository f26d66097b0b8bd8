#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "neck/correctors.hpp"

namespace neck {

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int samples = 0;
};

// Least squares of log(magnitude) on log(scale). Needs at least 6 samples, positive
// magnitudes and scales spanning at least 1.5 decades.
RateFit fit_decay_order(std::span<const std::pair<double, double>> samples);
// Same fit against eps: at least 5 values spanning at least 2 decades.
RateFit fit_eps_order(std::span<const std::pair<double, double>> samples);
// The bare least-squares fit without sample-count or span checks.
RateFit loglog_fit(std::span<const std::pair<double, double>> samples);

// x1 in [c sqrt(eps), upper * R], log-spaced.
struct Window {
  double c = 2.0;
  double upper = 0.5;
  int samples = 40;
  std::string label() const;
};

// Chebyshev-Lobatto nodes across the gap at x1 (both walls included).
std::vector<double> fiber_nodes(const NeckProfile& p, double x1, int count = 33);

// Sums of weighted tensor norms |grad^n g| (Frobenius, each mixed partial counted with
// its binomial multiplicity), evaluated on fibers.
class NormEvaluator {
 public:
  void add_velocity(const VectorField2& v, int order, double weight);
  void add_scalar(const PolyField& f, int order, double weight);
  // For order 0 the pressure is measured relative to its value at (x1_ref, 0).
  void add_pressure(const ScalarPressure& p, int order, double weight, double x1_ref);
  // Keeps the pool behind added fields alive for the evaluator's lifetime.
  void retain(std::shared_ptr<CoeffPool> pool) { pools_.push_back(std::move(pool)); }
  void compile();
  double at(double x1, double x2) const;
  double fiber_sup(const NeckProfile& p, double x1, int nodes = 33) const;

 private:
  struct Entry {
    int field = -1;
    int extra = -1;
    double mult = 1.0;
  };
  struct Group {
    double weight = 1.0;
    std::vector<Entry> entries;
    int ref_field = -1;  // pressure gauge: subtract poly(x1_ref, 0) + pure(x1_ref)
    int ref_extra = -1;
    double x1_ref = 0.0;
    double offset = 0.0;
  };
  double group_value(const Group& g, const FieldSampler::Fiber& f, double x2) const;

  std::vector<std::shared_ptr<CoeffPool>> pools_;
  std::vector<PolyField> fields_;
  std::vector<Coeff> extras_;
  std::vector<Group> groups_;
  FieldSampler sampler_;
  bool compiled_ = false;
};

// Fitted slope of sup-over-fiber |grad^s f^{m+1}| against delta(x1) on the window,
// where m + 1 is the number of levels in the hierarchy.
RateFit residual_order(const CorrectorHierarchy& h, int s, const Window& w = {});

struct BlowupSpec {
  int alpha = 1;
  bool green = false;
  int level = 1;
  int k1 = 0;  // derivative orders in x1, x2
  int k2 = 1;
  int component = 1;
  double r = 0.5;  // evaluation point (r sqrt(eps), 0)
};

// Slope of log |d^(k1,k2) v_component(r sqrt(eps), 0)| against log eps.
RateFit corrector_blowup_order(const NeckProfile& base, std::span<const double> eps,
                               const BlowupSpec& spec);

// Structural certification of one level on a (x1, x2) sampling grid.
struct StructureCheck {
  int alpha = 1;
  int level = 1;
  bool green = false;
  double max_divergence = 0.0;
  double max_trace_error = 0.0;
  std::pair<int, int> degrees{0, 0};
  std::pair<int, int> expected{0, 0};
  bool pass() const {
    return max_divergence < 1e-8 && max_trace_error < 1e-10 && degrees == expected;
  }
};
StructureCheck certify_level(const CorrectorHierarchy& h, int level, int x1_nodes = 201,
                             int x2_nodes = 33);

// Envelope rows: predicted exponents for the singular part of the solution, assembled
// from the three corrector families with their coefficient scalings.
struct EnvelopeRow {
  std::string profile_id;
  bool symmetric = false;
  int m = 0;
  std::string fit;  // "delta" (fixed eps, x1 window) or "eps" (x1 = r sqrt(eps))
  std::string window;
  RateFit measured;
  double predicted = 0.0;
  double tolerance = 0.1;
  bool pass = false;
};

struct EnvelopeOptions {
  double window_eps = 1e-6;  // eps used for the delta-window fit
  Window window{10.0, 0.25, 40};
  double r = 0.5;
  double tolerance = 0.1;
};

std::vector<EnvelopeRow> theorem_rate_table(std::span<const NeckProfile> profiles,
                                            std::span<const int> ms,
                                            std::span<const double> eps_sweep,
                                            const EnvelopeOptions& opt = {});

// Default eps sweep for rate fits.
std::vector<double> default_eps_sweep();
// Sweep for envelope eps-fits: small enough that the leading singular term dominates at
// x1 = r sqrt(eps).
std::vector<double> envelope_eps_sweep();

}  // namespace neck
