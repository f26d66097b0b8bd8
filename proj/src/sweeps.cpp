#include "neck/sweeps.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <tuple>

#include "neck/correctors.hpp"
#include "neck/errors.hpp"
#include "neck/parallel.hpp"
#include "neck/verifier.hpp"

namespace neck {

namespace {

using nlohmann::json;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

template <class T>
T field(const json& j, const char* key, const char* what) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "': expected " + what);
  }
}

bool same_double(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

ReportRow error_row(ReportRow row, const std::exception& e) {
  row.window = std::string("error: ") + e.what();
  row.slope = std::numeric_limits<double>::quiet_NaN();
  row.pass = false;
  return row;
}

}  // namespace

// ---------------------------------------------------------------- config

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    static const char* known[] = {"profile", "alpha", "m_max", "eps", "grid", "tolerances", "out", "formats"};
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known))
      throw ConfigError("config field '" + key + "': unknown field");
  }
  if (j.contains("profile")) {
    if (!j["profile"].is_string() && !j["profile"].is_object())
      throw ConfigError("config field 'profile': expected a name, a file path or an object");
    c.profile_spec = j["profile"];
  }
  if (j.contains("alpha")) c.alphas = field<std::vector<int>>(j, "alpha", "a list of integers");
  if (j.contains("m_max")) c.m_max = field<int>(j, "m_max", "an integer");
  if (j.contains("eps")) c.eps = field<std::vector<double>>(j, "eps", "a list of numbers");
  if (j.contains("grid")) {
    const json& g = j["grid"];
    if (!g.is_object()) throw ConfigError("config field 'grid': expected an object");
    if (g.contains("n1")) c.n1 = field<int>(g, "n1", "an integer");
    if (g.contains("n2")) c.n2 = field<int>(g, "n2", "an integer");
  }
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    if (!t.is_object()) throw ConfigError("config field 'tolerances': expected an object");
    if (t.contains("quadrature")) c.tol.quadrature = field<double>(t, "quadrature", "a number");
    if (t.contains("residual_slope")) c.tol.residual_slope = field<double>(t, "residual_slope", "a number");
    if (t.contains("blowup_slope")) c.tol.blowup_slope = field<double>(t, "blowup_slope", "a number");
    if (t.contains("envelope_slope")) c.tol.envelope_slope = field<double>(t, "envelope_slope", "a number");
  }
  if (j.contains("out")) c.out_dir = field<std::string>(j, "out", "a string");
  if (j.contains("formats")) c.formats = field<std::vector<std::string>>(j, "formats", "a list of strings");
  for (int a : c.alphas)
    if (a < 1 || a > 3) throw ConfigError("config field 'alpha': modes must be 1, 2 or 3");
  for (const auto& f : c.formats)
    if (f != "csv" && f != "json") throw ConfigError("config field 'formats': unknown format '" + f + "'");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const RunConfig& c) {
  return {{"profile", c.profile_spec},
          {"alpha", c.alphas},
          {"m_max", c.m_max},
          {"eps", c.eps},
          {"grid", {{"n1", c.n1}, {"n2", c.n2}}},
          {"tolerances",
           {{"quadrature", c.tol.quadrature},
            {"residual_slope", c.tol.residual_slope},
            {"blowup_slope", c.tol.blowup_slope},
            {"envelope_slope", c.tol.envelope_slope}}},
          {"out", c.out_dir},
          {"formats", c.formats}};
}

void validate_config(const RunConfig& c) {
  if (c.alphas.empty()) throw InputError("at least one boundary mode is required");
  if (c.eps.size() < 5)
    throw InputError("insufficient eps span: need at least 5 strictly decreasing values spanning 2 decades");
  for (std::size_t i = 0; i < c.eps.size(); ++i) {
    if (!(c.eps[i] > 0)) throw InputError("eps values must be positive");
    if (i > 0 && !(c.eps[i] < c.eps[i - 1])) throw InputError("eps values must be strictly decreasing");
  }
  if (std::log10(c.eps.front() / c.eps.back()) < 2.0 - 1e-12)
    throw InputError("insufficient eps span: values must span at least 2 decades");
  if (c.m_max < 1) throw InputError("m_max must be at least 1");
  const NeckProfile p = resolve_profile(c.profile_spec, c.eps.front());
  if (c.m_max > 5 || c.m_max > p.M - 1)
    throw InputError("m_max exceeds derivative cap (at most min(5, M - 1))");
  if (c.n2 < 32 || c.n1 < 8) throw InputError("grid too coarse: need n1 >= 8 and n2 >= 32");
}

namespace {

NeckProfile profile_or_config_error(const json& j, const std::string& id, const std::string& where) {
  try {
    return profile_from_json(j, id);
  } catch (const InputError& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

NeckProfile resolve_profile(const json& spec, double eps) {
  if (spec.is_string()) {
    const std::string s = spec.get<std::string>();
    if (is_named_profile(s)) return named_profile(s, eps);
    std::ifstream in(s);
    if (!in) throw ConfigError("profile '" + s + "' is neither a built-in name nor a readable file");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(s + ": " + e.what());
    }
    j["eps"] = eps;
    return profile_or_config_error(j, std::filesystem::path(s).stem().string(), "profile file " + s);
  }
  if (spec.is_object()) {
    json j = spec;
    j["eps"] = eps;
    const std::string id = spec.contains("id") && spec["id"].is_string() ? spec["id"].get<std::string>() : "inline";
    return profile_or_config_error(j, id, "config field 'profile'");
  }
  throw ConfigError("config field 'profile': expected a name, a file path or an object");
}

std::string config_hash(const RunConfig& c) {
  const std::string text = config_to_json(c).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------- report

bool ReportRow::operator==(const ReportRow& o) const {
  return check == o.check && anchor == o.anchor && profile_id == o.profile_id && alpha == o.alpha &&
         m == o.m && s == o.s && window == o.window && same_double(slope, o.slope) &&
         same_double(predicted, o.predicted) && same_double(tolerance, o.tolerance) && pass == o.pass;
}

bool RateReport::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.pass; });
}

bool RateReport::operator==(const RateReport& o) const {
  return version == o.version && config_hash == o.config_hash && rows == o.rows;
}

std::string report_csv(const RateReport& r) {
  std::string out = "check,anchor,profile_id,alpha,m,s,window,slope,predicted,tolerance,pass\n";
  for (const auto& row : r.rows) {
    out += csv_field(row.check) + ',' + csv_field(row.anchor) + ',' + csv_field(row.profile_id) + ',' +
           std::to_string(row.alpha) + ',' + std::to_string(row.m) + ',' + std::to_string(row.s) + ',' +
           csv_field(row.window) + ',' + fmt("%.6g", row.slope) + ',' + fmt("%.6g", row.predicted) + ',' +
           fmt("%.6g", row.tolerance) + ',' + (row.pass ? "PASS" : "FAIL") + '\n';
  }
  return out;
}

json report_json(const RateReport& r) {
  json rows = json::array();
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  for (const auto& row : r.rows)
    rows.push_back({{"check", row.check},
                    {"anchor", row.anchor},
                    {"profile_id", row.profile_id},
                    {"alpha", row.alpha},
                    {"m", row.m},
                    {"s", row.s},
                    {"window", row.window},
                    {"slope", num(row.slope)},
                    {"predicted", num(row.predicted)},
                    {"tolerance", num(row.tolerance)},
                    {"pass", row.pass}});
  return {{"schema", kReportSchema},
          {"version", r.version},
          {"config_hash", r.config_hash},
          {"generated", r.generated},
          {"rows", rows}};
}

RateReport report_from_json(const json& j) {
  try {
    if (j.at("schema").get<std::string>() != kReportSchema) throw ConfigError("unsupported report schema");
    RateReport r;
    r.version = j.at("version").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.generated = j.at("generated").get<std::string>();
    auto num = [](const json& v) { return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>(); };
    for (const auto& x : j.at("rows")) {
      ReportRow row;
      row.check = x.at("check").get<std::string>();
      row.anchor = x.at("anchor").get<std::string>();
      row.profile_id = x.at("profile_id").get<std::string>();
      row.alpha = x.at("alpha").get<int>();
      row.m = x.at("m").get<int>();
      row.s = x.at("s").get<int>();
      row.window = x.at("window").get<std::string>();
      row.slope = num(x.at("slope"));
      row.predicted = num(x.at("predicted"));
      row.tolerance = num(x.at("tolerance"));
      row.pass = x.at("pass").get<bool>();
      r.rows.push_back(std::move(row));
    }
    return r;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
}

RateReport parse_report(const std::string& text) {
  try {
    return report_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
}

std::string emit(const RateReport& r, const std::string& format, const std::string& dir) {
  std::string body;
  if (format == "csv") body = report_csv(r);
  else if (format == "json") body = report_json(r).dump(2) + "\n";
  else throw ConfigError("unknown report format '" + format + "'");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir + ": " + ec.message());
  const std::string path = (std::filesystem::path(dir) / ("report." + format)).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << body;
  if (!out) throw std::runtime_error("write failed for " + path);
  return path;
}

// ---------------------------------------------------------------- run

namespace {

void structure_rows(const NeckProfile& p, int alpha, bool green, int levels, std::vector<ReportRow>& out) {
  const CorrectorHierarchy h = green ? build_symmetric_green(p, levels) : build_hierarchy(p, alpha, levels);
  const std::string check = green ? "structure-green" : "structure";
  for (int l = 1; l <= levels; ++l) {
    const StructureCheck sc = certify_level(h, l);
    const std::string where = "eps=" + fmt("%g", p.eps) + " level " + std::to_string(l);
    ReportRow base{check, "", p.id, alpha, l - 1, 0, where, 0, 0, 0, false};
    ReportRow div = base;
    div.check += "-divergence";
    div.anchor = "divergence-free corrector";
    div.slope = sc.max_divergence;
    div.tolerance = 1e-8;
    div.pass = sc.max_divergence < 1e-8;
    ReportRow tr = base;
    tr.check += "-trace";
    tr.anchor = "boundary traces";
    tr.slope = sc.max_trace_error;
    tr.tolerance = 1e-10;
    tr.pass = sc.max_trace_error < 1e-10;
    ReportRow deg = base;
    deg.check += "-degree";
    deg.anchor = "residual x2-degrees";
    deg.window += " (" + std::to_string(sc.degrees.first) + "," + std::to_string(sc.degrees.second) + ") vs (" +
                  std::to_string(sc.expected.first) + "," + std::to_string(sc.expected.second) + ")";
    deg.slope = sc.degrees.first;
    deg.predicted = sc.expected.first;
    deg.pass = sc.degrees == sc.expected;
    out.insert(out.end(), {div, tr, deg});
  }
}

}  // namespace

RateReport run(const RunConfig& config) {
  validate_config(config);
  const NeckProfile base = resolve_profile(config.profile_spec, config.eps.front());
  const double eps_small = config.eps.back();
  std::vector<std::function<std::vector<ReportRow>()>> cells;
  auto selected = [&](int a) { return std::find(config.alphas.begin(), config.alphas.end(), a) != config.alphas.end(); };
  const bool all_modes = selected(1) && selected(2) && selected(3);
  const bool has_mode1 = selected(1);

  for (int alpha : config.alphas) {
    for (double e : config.eps) {
      cells.push_back([=] {
        std::vector<ReportRow> rows;
        const NeckProfile p = with_eps(base, e);
        try {
          structure_rows(p, alpha, false, config.m_max + 1, rows);
        } catch (const std::exception& ex) {
          rows.push_back(error_row({"structure", "divergence-free corrector", p.id, alpha, 0, 0, "eps=" + fmt("%g", e)}, ex));
        }
        return rows;
      });
    }
    for (int m = 1; m <= config.m_max; ++m) {
      cells.push_back([=] {
        std::vector<ReportRow> rows;
        const NeckProfile p = with_eps(base, eps_small);
        const Window w;
        ReportRow proto{"residual-decay", "residual decay order", p.id, alpha, m, 0,
                        w.label() + ", eps=" + fmt("%g", eps_small)};
        try {
          const CorrectorHierarchy h = build_hierarchy(p, alpha, m + 1);
          for (int s = 0; s <= m; ++s) {
            ReportRow row = proto;
            row.s = s;
            try {
              const RateFit f = residual_order(h, s, w);
              row.slope = f.slope;
              row.predicted = m - s - 1;
              row.tolerance = config.tol.residual_slope;
              row.pass = f.slope >= row.predicted - row.tolerance;
            } catch (const std::exception& ex) {
              row = error_row(row, ex);
            }
            rows.push_back(row);
          }
        } catch (const std::exception& ex) {
          rows.push_back(error_row(proto, ex));
        }
        return rows;
      });
    }
  }

  if (base.symmetric && has_mode1) {
    for (double e : config.eps) {
      cells.push_back([=] {
        std::vector<ReportRow> rows;
        const NeckProfile p = with_eps(base, e);
        try {
          structure_rows(p, 1, true, config.m_max + 1, rows);
        } catch (const std::exception& ex) {
          rows.push_back(error_row({"structure-green", "divergence-free corrector", p.id, 1, 0, 0, "eps=" + fmt("%g", e)}, ex));
        }
        return rows;
      });
    }
    for (int m = 0; m <= config.m_max; ++m) {
      for (bool green : {false, true}) {
        cells.push_back([=] {
          ReportRow row{green ? "blowup-green" : "blowup", "corrector blow-up rate in eps", base.id, 1, m, 1,
                        "d^" + std::to_string(m) + "_x1 d_x2 v1 at (0.5 sqrt(eps), 0)"};
          try {
            BlowupSpec b;
            b.green = green;
            b.k1 = m;
            b.k2 = 1;
            const RateFit f = corrector_blowup_order(base, config.eps, b);
            row.slope = f.slope;
            row.predicted = -(m + 2) / 2.0;
            row.tolerance = config.tol.blowup_slope;
            row.pass = std::abs(f.slope - row.predicted) <= row.tolerance;
          } catch (const std::exception& ex) {
            row = error_row(row, ex);
          }
          return std::vector<ReportRow>{row};
        });
      }
    }
    for (int level = 2; level <= std::min(3, config.m_max + 1); ++level) {
      cells.push_back([=] {
        const NeckProfile p = with_eps(base, eps_small);
        ReportRow row{"green-consistency", "general vs Green construction", p.id, 1, level - 1, 0,
                      "sup-norm ratio of cumulative residuals, level " + std::to_string(level) + ", eps=" + fmt("%g", eps_small)};
        try {
          const CorrectorHierarchy a = build_hierarchy(p, 1, level);
          const CorrectorHierarchy g = build_symmetric_green(p, level);
          double sa = 0, sg = 0;
          NormEvaluator ea, eg;
          ea.add_velocity(a.level(level).f_cumulative, 0, 1.0);
          eg.add_velocity(g.level(level).f_cumulative, 0, 1.0);
          ea.compile();
          eg.compile();
          for (int i = 0; i <= 100; ++i) {
            const double x1 = -p.R + 2.0 * p.R * i / 100;
            sa = std::max(sa, ea.fiber_sup(p, x1));
            sg = std::max(sg, eg.fiber_sup(p, x1));
          }
          row.slope = sa / sg;
          row.predicted = 1.0;
          row.tolerance = 10.0;
          row.pass = row.slope <= 10.0 && row.slope >= 0.1;
        } catch (const std::exception& ex) {
          row = error_row(row, ex);
        }
        return std::vector<ReportRow>{row};
      });
    }
  }

  if (all_modes) {
    for (int m = 0; m <= std::min(2, config.m_max); ++m) {
      cells.push_back([=] {
        std::vector<ReportRow> rows;
        const std::vector<NeckProfile> ps{base};
        const std::vector<int> ms{m};
        const std::vector<double> sweep = envelope_eps_sweep();
        EnvelopeOptions opt;
        opt.tolerance = config.tol.envelope_slope;
        try {
          for (const auto& e : theorem_rate_table(ps, ms, sweep, opt)) {
            ReportRow row{"envelope-" + e.fit, base.symmetric ? "symmetric envelope exponent" : "general envelope exponent",
                          e.profile_id, 0, e.m, 0, e.window};
            if (e.fit == "eps") row.window += ", eps 1e-4..1e-6";
            row.slope = e.measured.slope;
            row.predicted = e.predicted;
            row.tolerance = e.tolerance;
            row.pass = e.pass;
            rows.push_back(row);
          }
        } catch (const std::exception& ex) {
          rows.push_back(error_row({"envelope", "envelope exponent", base.id, 0, m, 0, ""}, ex));
        }
        return rows;
      });
    }
  }

  for (int alpha : config.alphas) {
    cells.push_back([=] {
      const NeckProfile p = with_eps(base, config.eps.front());
      ReportRow row{"antiderivative-routes", "plumbing", p.id, alpha, 0, 0,
                    "level-2 pressure and velocity coefficients, table vs adaptive quadrature, 9 points"};
      try {
        const CorrectorHierarchy h = build_hierarchy(p, alpha, 2);
        const CorrectorLevel& lv = h.level(2);
        std::vector<Coeff> roots{lv.pbar.pure};
        for (const PolyField* f : {&lv.pbar.poly, &lv.v.u1, &lv.v.u2})
          roots.insert(roots.end(), f->coeffs().begin(), f->coeffs().end());
        const Program prog(*h.sym.pool, roots);
        std::vector<double> tab(roots.size()), work;
        double worst = 0.0, scale = 0.0;
        for (int i = 0; i < 9; ++i) {
          const double x1 = -p.R + p.R * i / 4.0;
          prog.eval(x1, tab, work);
          for (std::size_t k = 0; k < roots.size(); ++k) {
            const double dir = coeff_eval(roots[k], x1, config.tol.quadrature);
            scale = std::max(scale, std::abs(dir));
            worst = std::max(worst, std::abs(tab[k] - dir));
          }
        }
        if (scale == 0.0) throw CapabilityError("level-2 coefficients vanish identically; nothing to compare");
        row.slope = worst / scale;
        row.tolerance = 10.0 * config.tol.quadrature;
        row.pass = worst <= row.tolerance;
      } catch (const std::exception& ex) {
        row = error_row(row, ex);
      }
      return std::vector<ReportRow>{row};
    });
  }

  std::vector<std::vector<ReportRow>> results(cells.size());
  parallel_for(cells.size(), [&](std::size_t i) { results[i] = cells[i](); });
  RateReport report;
  report.config_hash = config_hash(config);
  report.generated = utc_now();
  for (auto& r : results) report.rows.insert(report.rows.end(), r.begin(), r.end());
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.check, a.profile_id, a.alpha, a.m, a.s, a.window) <
           std::tie(b.check, b.profile_id, b.alpha, b.m, b.s, b.window);
  });
  return report;
}

}  // namespace neck
