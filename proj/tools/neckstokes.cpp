// neckstokes: command-line front end for corrector construction, verification,
// finite-difference solves and rate sweeps.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "neck/correctors.hpp"
#include "neck/errors.hpp"
#include "neck/neckstokes_fd.hpp"
#include "neck/sweeps.hpp"
#include "neck/verifier.hpp"

namespace {

using namespace neck;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

struct Flags {
  std::string config;
  std::string profile;
  std::vector<int> alphas;
  int m = -1;
  std::vector<double> eps;
  std::string out;
  std::string format;
  std::string input;
  double grid_halfwidth = 0.0;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "Run configuration (JSON)");
  cmd->add_option("--profile", f.profile, "Built-in profile name or profile JSON path");
  cmd->add_option("--alpha", f.alphas, "Boundary modes, e.g. 1,2,3")->delimiter(',');
  cmd->add_option("--m", f.m, "Derivative order m (hierarchy has m+1 levels)");
  cmd->add_option("--eps", f.eps, "Gap values, comma separated")->delimiter(',');
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--format", f.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
}

RunConfig make_config(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_config(f.config);
  if (!f.profile.empty()) c.profile_spec = f.profile;
  if (!f.alphas.empty()) {
    for (int a : f.alphas)
      if (a < 1 || a > 3) throw ConfigError("--alpha: modes must be 1, 2 or 3");
    c.alphas = f.alphas;
  }
  if (f.m >= 0) c.m_max = f.m;
  if (!f.eps.empty()) c.eps = f.eps;
  if (!f.out.empty()) c.out_dir = f.out;
  if (!f.format.empty()) c.formats = {f.format};
  return c;
}

// Single-construction commands use the first selected mode and the smallest gap value.
NeckProfile single_profile(const RunConfig& c) {
  if (c.eps.empty()) throw ConfigError("--eps: at least one value is required");
  const double eps = *std::min_element(c.eps.begin(), c.eps.end());
  if (!(eps > 0)) throw InputError("eps must be positive");
  return resolve_profile(c.profile_spec, eps);
}

std::ostream& open_out(const std::string& dir, const std::string& name, std::ofstream& file) {
  if (dir.empty()) return std::cout;
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / name).string();
  file.open(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  std::cerr << "wrote " << path << "\n";
  return file;
}

int corrector_build(const Flags& f) {
  const RunConfig c = make_config(f);
  const NeckProfile p = single_profile(c);
  const int alpha = c.alphas.front();
  const CorrectorHierarchy h = build_hierarchy(p, alpha, c.m_max + 1);
  std::ofstream file;
  open_out(f.out, "hierarchy_" + p.id + "_a" + std::to_string(alpha) + ".sexpr", file) << hierarchy_to_sexpr(h);
  return kExitPass;
}

int corrector_verify(const Flags& f) {
  const RunConfig c = make_config(f);
  const NeckProfile p = single_profile(c);
  const int levels = c.m_max + 1;
  bool ok = true;
  std::printf("%-5s %-5s %-12s %-12s %-10s %-10s %s\n", "alpha", "level", "max|div|", "max|trace|", "degrees",
              "expected", "result");
  for (int alpha : c.alphas) {
    const CorrectorHierarchy h = build_hierarchy(p, alpha, levels);
    for (int l = 1; l <= levels; ++l) {
      const StructureCheck sc = certify_level(h, l);
      char deg[32], exp[32];
      std::snprintf(deg, sizeof deg, "(%d,%d)", sc.degrees.first, sc.degrees.second);
      std::snprintf(exp, sizeof exp, "(%d,%d)", sc.expected.first, sc.expected.second);
      std::printf("%-5d %-5d %-12.3e %-12.3e %-10s %-10s %s\n", alpha, l, sc.max_divergence, sc.max_trace_error, deg,
                  exp, sc.pass() ? "PASS" : "FAIL");
      ok = ok && sc.pass();
    }
    for (int s = 0; s < levels; ++s) {
      const RateFit fit = residual_order(h, s);
      const double want = (levels - 1) - s - 1;
      const bool pass = fit.slope >= want - c.tol.residual_slope;
      std::printf("alpha %d residual |grad^%d f^%d| slope %.4f (need >= %.2f) %s\n", alpha, s, levels, fit.slope,
                  want - c.tol.residual_slope, pass ? "PASS" : "FAIL");
      ok = ok && pass;
    }
  }
  return ok ? kExitPass : kExitFail;
}

int stokes_solve(const Flags& f) {
  const RunConfig c = make_config(f);
  const NeckProfile p = single_profile(c);
  const int alpha = c.alphas.front();
  const CorrectorHierarchy h = build_hierarchy(p, alpha, c.m_max + 1);
  const VectorFn forcing = field_function(h.level(c.m_max + 1).f_cumulative, h.sym.pool);
  const double r = f.grid_halfwidth > 0 ? f.grid_halfwidth : p.R;
  const NeckGrid grid = make_grid(p, r, c.n1, c.n2);
  const DiscreteSolution s = solve_w(grid, forcing, {}, p.mu);
  const double energy = global_energy(s);
  const double work = forcing_work(s, forcing);
  std::printf("profile %s eps %g alpha %d forcing f^%d grid %dx%d r %g\n", p.id.c_str(), p.eps, alpha, c.m_max + 1,
              c.n1, c.n2, r);
  std::printf("relative residual %.3e\nmax |div w| %.3e\nenergy %.6e\nforcing work %.6e\nsup |grad w| %.6e\n",
              s.relative_residual, s.max_divergence, energy, work, sup_grad(s, r));
  if (!f.out.empty()) {
    std::filesystem::create_directories(f.out);
    const std::string path = (std::filesystem::path(f.out) / ("solution_" + p.id + ".csv")).string();
    export_csv(s, path);
    std::cerr << "wrote " << path << "\n";
  }
  return kExitPass;
}

int sweep_rates(const Flags& f) {
  const RunConfig c = make_config(f);
  const RateReport r = run(c);
  for (const auto& fmt : c.formats) std::cerr << "wrote " << emit(r, fmt, c.out_dir) << "\n";
  std::size_t failed = 0;
  for (const auto& row : r.rows)
    if (!row.pass) {
      ++failed;
      std::fprintf(stderr, "FAIL %s %s alpha=%d m=%d s=%d: %s measured %g\n", row.check.c_str(),
                   row.profile_id.c_str(), row.alpha, row.m, row.s, row.window.c_str(), row.slope);
    }
  std::printf("%zu rows, %zu failed\n", r.rows.size(), failed);
  return failed == 0 ? kExitPass : kExitFail;
}

int report_emit(const Flags& f) {
  if (f.input.empty()) throw ConfigError("--input: a JSON report is required");
  std::ifstream in(f.input, std::ios::binary);
  if (!in) throw ConfigError("cannot read report " + f.input);
  std::stringstream buf;
  buf << in.rdbuf();
  const RateReport r = parse_report(buf.str());
  const std::string fmt = f.format.empty() ? "csv" : f.format;
  std::cerr << "wrote " << emit(r, fmt, f.out.empty() ? "." : f.out) << "\n";
  return r.all_pass() ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corrector hierarchies and rate checks for Stokes flow in a narrow neck"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  Flags flags;

  auto* corrector = app.add_subcommand("corrector", "Build or verify corrector hierarchies");
  corrector->require_subcommand(1);
  auto* build = corrector->add_subcommand("build", "Dump the coefficient trees of a hierarchy");
  auto* verify = corrector->add_subcommand("verify", "Structural checks and residual decay slopes");
  auto* stokes = app.add_subcommand("stokes", "Finite-difference neck solver");
  stokes->require_subcommand(1);
  auto* solve = stokes->add_subcommand("solve", "Solve with the residual of a hierarchy as forcing");
  auto* sweep = app.add_subcommand("sweep", "Batch verification sweeps");
  sweep->require_subcommand(1);
  auto* rates = sweep->add_subcommand("rates", "Run every rate check and write reports");
  auto* report = app.add_subcommand("report", "Report utilities");
  report->require_subcommand(1);
  auto* remit = report->add_subcommand("emit", "Re-emit a JSON report in another format");

  for (auto* cmd : {build, verify, solve, rates, remit}) add_common(cmd, flags);
  solve->add_option("--halfwidth", flags.grid_halfwidth, "Grid half-width r (default R)");
  remit->add_option("--input", flags.input, "JSON report to read")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (*build) return corrector_build(flags);
    if (*verify) return corrector_verify(flags);
    if (*solve) return stokes_solve(flags);
    if (*rates) return sweep_rates(flags);
    if (*remit) return report_emit(flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitConfig;
}
