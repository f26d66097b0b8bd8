#include "neck/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "neck/errors.hpp"
#include "neck/parallel.hpp"

namespace neck {

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::vector<double> window_points(const NeckProfile& p, const Window& w) {
  const double lo = w.c * std::sqrt(p.eps), hi = w.upper * p.R;
  if (w.c < 2.0) throw InputError("window lower cutoff must be at least 2 sqrt(eps)");
  if (w.samples < 6) throw InputError("window needs at least 6 samples");
  if (!(lo < hi)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "window too small at eps=%g: [%g, %g]", p.eps, lo, hi);
    throw InputError(buf);
  }
  std::vector<double> xs(w.samples);
  for (int i = 0; i < w.samples; ++i)
    xs[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (w.samples - 1));
  return xs;
}

}  // namespace

std::string Window::label() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "x1 in [%g*sqrt(eps), %g*R]", c, upper);
  return buf;
}

RateFit loglog_fit(std::span<const std::pair<double, double>> samples) {
  if (samples.size() < 2) throw InputError("slope fit needs at least 2 samples");
  for (const auto& [x, y] : samples) {
    if (!(x > 0.0)) throw InputError("slope fit: nonpositive scale");
    if (!(y > 0.0) || !std::isfinite(y)) throw InputError("slope fit: nonpositive magnitude");
  }
  const double n = static_cast<double>(samples.size());
  double sx = 0, sy = 0;
  for (const auto& [x, y] : samples) {
    sx += std::log(x);
    sy += std::log(y);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : samples) {
    const double dx = std::log(x) - mx, dy = std::log(y) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0)) throw InputError("slope fit: all scales equal");
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (const auto& [x, y] : samples) {
    const double e = std::log(y) - (f.intercept + f.slope * std::log(x));
    ss_res += e * e;
  }
  f.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  f.samples = static_cast<int>(samples.size());
  return f;
}

namespace {

double decades(std::span<const std::pair<double, double>> samples) {
  double lo = samples[0].first, hi = samples[0].first;
  for (const auto& s : samples) {
    lo = std::min(lo, s.first);
    hi = std::max(hi, s.first);
  }
  return std::log10(hi / lo);
}

}  // namespace

RateFit fit_decay_order(std::span<const std::pair<double, double>> samples) {
  if (samples.size() < 6) throw InputError("slope fit needs at least 6 samples");
  for (const auto& s : samples)
    if (!(s.first > 0.0)) throw InputError("slope fit: nonpositive scale");
  if (decades(samples) < 1.5 - 1e-12) throw InputError("slope fit: insufficient span (< 1.5 decades)");
  return loglog_fit(samples);
}

RateFit fit_eps_order(std::span<const std::pair<double, double>> samples) {
  if (samples.size() < 5) throw InputError("insufficient eps span: need at least 5 eps values");
  for (const auto& s : samples)
    if (!(s.first > 0.0)) throw InputError("eps values must be positive");
  if (decades(samples) < 2.0 - 1e-12) throw InputError("insufficient eps span (< 2 decades)");
  return loglog_fit(samples);
}

std::vector<double> fiber_nodes(const NeckProfile& p, double x1, int count) {
  const double a = bottom_wall(p, x1), b = top_wall(p, x1);
  std::vector<double> xs(count);
  for (int j = 0; j < count; ++j) {
    const double t = -std::cos(M_PI * j / (count - 1));
    xs[j] = 0.5 * (a + b) + 0.5 * (b - a) * t;
  }
  return xs;
}

// ---------------------------------------------------------------- NormEvaluator

void NormEvaluator::add_scalar(const PolyField& f, int order, double weight) {
  Group g;
  g.weight = weight;
  for (int k = 0; k <= order; ++k) {
    fields_.push_back(partial(f, k, order - k));
    g.entries.push_back({static_cast<int>(fields_.size()) - 1, -1, binomial(order, k)});
  }
  groups_.push_back(std::move(g));
  compiled_ = false;
}

void NormEvaluator::add_velocity(const VectorField2& v, int order, double weight) {
  Group g;
  g.weight = weight;
  for (const PolyField* c : {&v.u1, &v.u2}) {
    for (int k = 0; k <= order; ++k) {
      fields_.push_back(partial(*c, k, order - k));
      g.entries.push_back({static_cast<int>(fields_.size()) - 1, -1, binomial(order, k)});
    }
  }
  groups_.push_back(std::move(g));
  compiled_ = false;
}

void NormEvaluator::add_pressure(const ScalarPressure& p, int order, double weight, double x1_ref) {
  Group g;
  g.weight = weight;
  for (int k = 0; k <= order; ++k) {
    fields_.push_back(partial(p.poly, k, order - k));
    Entry e{static_cast<int>(fields_.size()) - 1, -1, binomial(order, k)};
    if (k == order) {
      extras_.push_back(coeff_diff(p.pure, order));
      e.extra = static_cast<int>(extras_.size()) - 1;
    }
    g.entries.push_back(e);
  }
  if (order == 0) {
    g.ref_field = g.entries[0].field;
    g.ref_extra = g.entries[0].extra;
    g.x1_ref = x1_ref;
  }
  groups_.push_back(std::move(g));
  compiled_ = false;
}

void NormEvaluator::compile() {
  sampler_ = FieldSampler(fields_, extras_);
  for (auto& g : groups_) {
    if (g.ref_field < 0) continue;
    const auto f = sampler_.at(g.x1_ref);
    g.offset = f.value(g.ref_field, 0.0) + f.extra(g.ref_extra);
  }
  compiled_ = true;
}

double NormEvaluator::group_value(const Group& g, const FieldSampler::Fiber& f, double x2) const {
  double s = 0.0;
  for (const auto& e : g.entries) {
    double v = e.field >= 0 ? f.value(e.field, x2) : 0.0;
    if (e.extra >= 0) v += f.extra(e.extra);
    if (g.ref_field >= 0) v -= g.offset;
    s += e.mult * v * v;
  }
  return g.weight * std::sqrt(s);
}

double NormEvaluator::at(double x1, double x2) const {
  if (!compiled_) throw ConstructionError("NormEvaluator used before compile()");
  const auto f = sampler_.at(x1);
  double total = 0.0;
  for (const auto& g : groups_) total += group_value(g, f, x2);
  return total;
}

double NormEvaluator::fiber_sup(const NeckProfile& p, double x1, int nodes) const {
  if (!compiled_) throw ConstructionError("NormEvaluator used before compile()");
  const auto f = sampler_.at(x1);
  double best = 0.0;
  for (double x2 : fiber_nodes(p, x1, nodes)) {
    double total = 0.0;
    for (const auto& g : groups_) total += group_value(g, f, x2);
    best = std::max(best, total);
  }
  return best;
}

// ---------------------------------------------------------------- rate checks

RateFit residual_order(const CorrectorHierarchy& h, int s, const Window& w) {
  const int m = static_cast<int>(h.levels.size()) - 1;
  if (s < 0 || s > m) throw InputError("derivative order s must lie in [0, m]");
  const auto xs = window_points(h.profile, w);
  NormEvaluator ev;
  VectorField2 f = h.levels.back().f_cumulative;
  ev.add_velocity(f, s, 1.0);
  ev.compile();
  std::vector<std::pair<double, double>> samples(xs.size());
  parallel_for(xs.size(), [&](std::size_t i) {
    samples[i] = {delta(h.profile, xs[i]), ev.fiber_sup(h.profile, xs[i])};
  });
  return fit_decay_order(samples);
}

RateFit corrector_blowup_order(const NeckProfile& base, std::span<const double> eps,
                               const BlowupSpec& spec) {
  if (eps.size() < 5) throw InputError("insufficient eps span: need at least 5 eps values");
  if (spec.component != 1 && spec.component != 2) throw InputError("component must be 1 or 2");
  std::vector<std::pair<double, double>> samples(eps.size());
  parallel_for(eps.size(), [&](std::size_t i) {
    const NeckProfile p = with_eps(base, eps[i]);
    const double x1 = spec.r * std::sqrt(p.eps);
    if (x1 > p.R) throw InputError("evaluation point outside the neck region");
    const CorrectorHierarchy h = spec.green ? build_symmetric_green(p, spec.level)
                                            : build_hierarchy(p, spec.alpha, spec.level);
    const VectorField2 v = h.cumulative_v(spec.level);
    const PolyField& c = spec.component == 1 ? v.u1 : v.u2;
    const PolyField d = partial(c, spec.k1, spec.k2);
    const FieldSampler s(std::span<const PolyField>(&d, 1));
    samples[i] = {p.eps, std::abs(s.value(0, x1, 0.0))};
  });
  return fit_eps_order(samples);
}

StructureCheck certify_level(const CorrectorHierarchy& h, int level, int x1_nodes, int x2_nodes) {
  const CorrectorLevel& L = h.level(level);
  const NeckProfile& p = h.profile;
  StructureCheck out;
  out.alpha = h.alpha;
  out.level = level;
  out.green = h.green;
  out.degrees = {L.f_cumulative.u1.degree(), L.f_cumulative.u2.degree()};
  out.expected = expected_residual_degrees(h.alpha, level, h.green);

  const std::vector<PolyField> fields{divergence(L.v)};
  const std::vector<Coeff> traces{trace(L.v.u1, Side::Top), trace(L.v.u2, Side::Top),
                                  trace(L.v.u1, Side::Bottom), trace(L.v.u2, Side::Bottom)};
  const FieldSampler s(fields, traces);
  std::vector<double> div(x1_nodes), tr(x1_nodes);
  parallel_for(x1_nodes, [&](std::size_t i) {
    const double x1 = -p.R * std::cos(M_PI * i / (x1_nodes - 1));
    std::vector<double> work;
    const auto f = s.at(x1, work);
    double d = 0.0;
    for (double x2 : fiber_nodes(p, x1, x2_nodes)) d = std::max(d, std::abs(f.value(0, x2)));
    double b1 = 0.0, b2 = 0.0;
    if (level == 1) {
      if (h.alpha == 1) b1 = 1.0;
      if (h.alpha == 2) b2 = 1.0;
      if (h.alpha == 3) {
        b1 = top_wall(p, x1);
        b2 = -x1;
      }
    }
    div[i] = d;
    tr[i] = std::max({std::abs(f.extra(0) - b1), std::abs(f.extra(1) - b2), std::abs(f.extra(2)),
                      std::abs(f.extra(3))});
  });
  out.max_divergence = *std::max_element(div.begin(), div.end());
  out.max_trace_error = *std::max_element(tr.begin(), tr.end());
  return out;
}

std::vector<double> default_eps_sweep() { return {1e-2, 3e-3, 1e-3, 3e-4, 1e-4}; }
std::vector<double> envelope_eps_sweep() { return {1e-4, 3e-5, 1e-5, 3e-6, 1e-6}; }

// ---------------------------------------------------------------- envelopes

namespace {

// sqrt(eps)(|grad^{m+1} v1| + |grad^m p1|) + eps^{3/2}(... mode 2) [+ sqrt(eps)(... mode 3)]
NormEvaluator envelope(const NeckProfile& p, int m, bool with_rotation) {
  NormEvaluator ev;
  const double se = std::sqrt(p.eps);
  const int levels = m + 1;
  const NeckSymbols sym = make_symbols(p);
  ev.retain(sym.pool);
  for (int alpha = 1; alpha <= 3; ++alpha) {
    if (alpha == 3 && !with_rotation) continue;
    const double w = alpha == 2 ? p.eps * se : se;
    const CorrectorHierarchy h = build_hierarchy(sym, alpha, levels);
    ev.add_velocity(h.cumulative_v(levels), m + 1, w);
    ev.add_pressure(h.cumulative_p(levels), m, w, 0.5 * p.R);
  }
  ev.compile();
  return ev;
}

}  // namespace

std::vector<EnvelopeRow> theorem_rate_table(std::span<const NeckProfile> profiles,
                                            std::span<const int> ms,
                                            std::span<const double> eps_sweep,
                                            const EnvelopeOptions& opt) {
  if (eps_sweep.size() < 5) throw InputError("insufficient eps span: need at least 5 values");
  struct Cell {
    std::size_t profile;
    int m;
    bool delta_fit;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < profiles.size(); ++i)
    for (int m : ms)
      for (bool d : {true, false}) cells.push_back({i, m, d});

  std::vector<EnvelopeRow> rows(cells.size());
  parallel_for(cells.size(), [&](std::size_t c) {
    const Cell& cell = cells[c];
    const NeckProfile& base = profiles[cell.profile];
    const bool sym = base.symmetric;
    EnvelopeRow row;
    row.profile_id = base.id;
    row.symmetric = sym;
    row.m = cell.m;
    row.tolerance = opt.tolerance;
    std::vector<std::pair<double, double>> samples;
    if (cell.delta_fit) {
      const NeckProfile p = with_eps(base, opt.window_eps);
      const NormEvaluator ev = envelope(p, cell.m, !sym);
      for (double x1 : window_points(p, opt.window)) samples.push_back({delta(p, x1), ev.fiber_sup(p, x1)});
      row.fit = "delta";
      char buf[128];
      std::snprintf(buf, sizeof buf, "%s, eps=%g", opt.window.label().c_str(), opt.window_eps);
      row.window = buf;
      row.predicted = sym ? -(cell.m + 2) / 2.0 : -(cell.m + 3) / 2.0;
    } else {
      for (double e : eps_sweep) {
        const NeckProfile p = with_eps(base, e);
        const NormEvaluator ev = envelope(p, cell.m, !sym);
        samples.push_back({e, ev.fiber_sup(p, opt.r * std::sqrt(e))});
      }
      row.fit = "eps";
      char buf[64];
      std::snprintf(buf, sizeof buf, "x1=%g*sqrt(eps)", opt.r);
      row.window = buf;
      row.predicted = sym ? -(cell.m + 1) / 2.0 : -(cell.m + 2) / 2.0;
    }
    row.measured = cell.delta_fit ? fit_decay_order(samples) : fit_eps_order(samples);
    row.pass = std::abs(row.measured.slope - row.predicted) <= row.tolerance;
    rows[c] = row;
  });
  return rows;
}

}  // namespace neck
