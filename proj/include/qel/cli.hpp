#pragma once

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qel/checkpoint.hpp"
#include "qel/comparison_ode.hpp"
#include "qel/config.hpp"
#include "qel/evolution.hpp"
#include "qel/initial_data.hpp"
#include "qel/kernel_lab.hpp"
#include "qel/series_io.hpp"
#include "qel/svg_plot.hpp"
#include "qel/version.hpp"

namespace qel::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_check_failed = 1;
inline constexpr int exit_usage = 2;

// verify-kernel thresholds
inline constexpr double tangential_rel_tol = 1e-10;
inline constexpr double score_spread_tol = 1e-10;
inline constexpr double mc_standard_errors = 3.0;
inline constexpr double parity_off_diagonal_tol = 1e-4;

// self-entry threshold on the profile defects
inline constexpr double defect_tol = 1e-8;

/// Defaults, then the config file, then QEL_OUTPUT_DIR, then flags.
inline RunConfig resolve_config(const std::string& config_file, const std::map<std::string, std::string>& flags) {
  RunConfig cfg;
  if (!config_file.empty()) apply_config_file(cfg, config_file);
  apply_environment(cfg);
  for (const auto& [path, value] : flags) config_key(path).set(cfg, value);
  return cfg;
}

/// run-manifest.ini: the resolved config with version and command as
/// comments, so the file can be passed back through --config.
inline std::string write_manifest(const RunConfig& cfg, const std::string& command_line) {
  std::filesystem::create_directories(cfg.output_dir);
  const std::string path = cfg.output_dir + "/run-manifest.ini";
  std::ofstream os(path);
  if (!os) throw Error("cannot write manifest: " + path);
  os << "; qel run manifest\n; version = " << version_string() << "\n; command = " << command_line << "\n\n"
     << config_to_ini(cfg);
  if (!os) throw Error("write failure on manifest: " + path);
  return path;
}

namespace detail {

struct Printer {
  std::ostream& os;
  bool all_ok = true;

  void value(const std::string& name, double v) {
    os << "  " << std::left << std::setw(24) << name << std::setprecision(12) << v << '\n';
  }
  void check(const std::string& name, bool ok, const std::string& detail) {
    os << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
    all_ok = all_ok && ok;
  }
  void info(const std::string& name, const std::string& detail) { os << "INFO " << name << ": " << detail << '\n'; }
};

inline std::string num(double v, int digits = 6) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

inline bool report_violations(const DataParameters& p, std::ostream& out) {
  const auto v = p.violations();
  for (const auto& line : v) out << "violated: " << line << '\n';
  return v.empty();
}

inline bool print_self_entry(const SelfEntryReport& rep, const DataParameters& p, std::ostream& out) {
  Printer pr{out};
  pr.value("Q(0)", rep.Q0);
  pr.value("C(0)", rep.C0);
  pr.value("kappa Q(0)^2", rep.kappa * rep.Q0 * rep.Q0);
  pr.value("mu(0)", rep.mu0);
  pr.value("rho(0)", rep.rho0);
  pr.value("D_sign(0)", rep.Dsign0);
  pr.value("D_ang(0)", rep.Dang0);
  pr.value("sigma(0)", rep.sigma0);
  pr.value("E(0)", rep.E0);
  pr.check("parameters", rep.violations.empty(), rep.violations.empty() ? "all inequalities hold" : rep.violations.front());
  pr.check("D_sign(0)", std::abs(rep.Dsign0) <= defect_tol, num(rep.Dsign0) + " vs " + num(defect_tol));
  pr.check("D_ang(0)", std::abs(rep.Dang0) <= defect_tol, num(rep.Dang0) + " vs " + num(defect_tol));
  pr.check("rho(0) <= epsilon0", rep.rho0 <= p.epsilon0, num(rep.rho0) + " vs " + num(p.epsilon0));
  pr.check("C(0) >= kappa Q(0)^2", rep.source_dominance_ok,
           num(rep.C0) + " vs " + num(rep.kappa * rep.Q0 * rep.Q0));
  return pr.all_ok;
}

inline SelfEntryReport self_entry_for(const RunConfig& cfg, InitialFields* keep = nullptr) {
  auto fields = build_initial_fields(cfg.data, cfg.grid.make());
  auto rep = self_entry_check(cfg.data, fields.G0, fields.Gamma0, cfg.diagnostics_options(), cfg.recovery_tol);
  if (keep) *keep = std::move(fields);
  return rep;
}

}  // namespace detail

inline int cmd_verify_kernel(const RunConfig& cfg, std::size_t mc_samples, std::ostream& out) {
  detail::Printer pr{out};
  using detail::num;

  const double C_tan = tangential_constant(cfg.quad_tol);
  const double closed = 8.0 * std::numbers::pi / 15.0;
  const double rel = std::abs(C_tan / closed - 1.0);
  pr.value("C_tan", C_tan);
  pr.check("tangential constant", rel <= tangential_rel_tol, "relative error " + num(rel, 3) + " vs 8 pi/15");

  double lo = 0.0, hi = 0.0;
  for (double lam : {0.01, 0.05, 1.0}) {
    const double c = score_constant(lam, cfg.quad_tol);
    lo = lam == 0.01 ? c : std::min(lo, c);
    hi = lam == 0.01 ? c : std::max(hi, c);
  }
  pr.value("c_Q", hi);
  pr.check("score constant", lo > 0.0 && hi - lo <= score_spread_tol, "spread over lambda " + num(hi - lo, 3));

  const auto mc = score_constant_mc(mc_samples, cfg.seed);
  const double z = std::abs(mc.mean - hi) / mc.standard_error;
  pr.value("c_Q Monte Carlo", mc.mean);
  pr.check("Monte Carlo agreement", z <= mc_standard_errors,
           num(z, 3) + " standard errors over " + std::to_string(mc.samples) + " samples");

  const PacketFrame frame{cfg.data.r0, cfg.data.lambda0, 0.0};
  const double w = std::min({cfg.grid.r_max - frame.r_star, frame.r_star - cfg.grid.r_min, cfg.grid.z_max, -cfg.grid.z_min});
  const auto t = parity_table(cfg.data.a0, frame, symmetric_grid(frame, w, cfg.grid.n_r), cfg.recovery_tol);
  pr.value("U_x", t.m.Ux);
  pr.value("U_y", t.m.Uy);
  pr.value("V_x", t.m.Vx);
  pr.value("V_y", t.m.Vy);
  pr.value("sigma", t.sigma);
  pr.check("parity off-diagonal", t.off_diagonal <= parity_off_diagonal_tol,
           num(t.off_diagonal, 3) + " of |sigma| at " + std::to_string(cfg.grid.n_r) + "^2");
  pr.info("strain sign", "sigma/a0 " + std::string(t.sigma * cfg.data.a0 > 0.0 ? "> 0" : "< 0") + " for the model quadrupole");
  pr.info("trace", num(t.trace, 3) + " of |sigma|");

  const auto se = source_expansion_check(cfg.data.b0(), cfg.data.Gamma_star0, cfg.data.lambda0, cfg.data.r0);
  pr.info("source expansion", "max relative error " + num(se.max_error, 4) + ", constant " + num(se.constant, 4));
  return pr.all_ok ? exit_ok : exit_check_failed;
}

inline int cmd_self_entry(const RunConfig& cfg, std::ostream& out) {
  if (!detail::report_violations(cfg.data, out)) return exit_check_failed;
  const auto rep = detail::self_entry_for(cfg);
  return detail::print_self_entry(rep, cfg.data, out) ? exit_ok : exit_check_failed;
}

inline int cmd_make_data(const RunConfig& cfg, std::ostream& out) {
  if (!detail::report_violations(cfg.data, out)) return exit_check_failed;
  InitialFields fields;
  const auto rep = detail::self_entry_for(cfg, &fields);
  std::ostringstream text;
  const bool ok = detail::print_self_entry(rep, cfg.data, text);
  out << text.str();
  const std::string ck = cfg.output_dir + "/initial.qel";
  write_checkpoint({0.0, {cfg.data.r0, cfg.data.lambda0, 0.0}, cfg.data, fields.G0, fields.Gamma0}, ck);
  const std::string rp = cfg.output_dir + "/self-entry.txt";
  std::ofstream os(rp);
  os << text.str();
  if (!os) throw Error("cannot write " + rp);
  out << "wrote " << ck << "\nwrote " << rp << '\n';
  return ok ? exit_ok : exit_check_failed;
}

inline int cmd_evolve(const RunConfig& cfg, const std::string& from, bool warn_only, std::ostream& out) {
  DataParameters params = cfg.data;
  EvolutionOptions eo;
  eo.recovery_tol = cfg.recovery_tol;
  std::optional<Evolver> ev;
  EvolutionState s;
  if (!from.empty()) {
    auto ck = read_checkpoint(from);
    params = ck.params;
    PacketFrame frame = ck.frame;
    frame.t = ck.t;
    ev.emplace(ck.G.grid_ptr(), eo);
    s = ev->initial_state(std::move(ck.G), std::move(ck.Gamma), frame);
    out << "resumed from " << from << " at t = " << ck.t << '\n';
  } else {
    if (!detail::report_violations(cfg.data, out)) return exit_check_failed;
    auto f = build_initial_fields(cfg.data, cfg.grid.make());
    ev.emplace(f.G0.grid_ptr(), eo);
    s = ev->initial_state(std::move(f.G0), std::move(f.Gamma0), {cfg.data.r0, cfg.data.lambda0, 0.0});
  }
  RunOptions ro = cfg.run_options();
  ro.halt_on_cap = !warn_only;
  const auto res = run(*ev, std::move(s), ro, [&](const DiagnosticsRecord& r) {
    out << "t = " << detail::num(r.t) << "  Q = " << detail::num(r.Q) << "  C = " << detail::num(r.C)
        << "  E = " << detail::num(r.E) << '\n';
  });
  if (!res.first_exit.empty())
    out << (warn_only ? "warning" : "halt") << ": E exceeded " << cfg.E_cap << " at t = " << res.first_exit_time
        << " (dominant " << res.first_exit << ")\n";
  const std::string series = cfg.output_dir + "/series.csv";
  write_series(res.records, series);
  const std::string ck = cfg.output_dir + "/final.qel";
  const auto& fs = res.final_state;
  write_checkpoint({fs.t, fs.frame, params, fs.G, fs.Gamma}, ck);
  out << "halt reason: " << res.halt_reason << ", " << res.records.size() << " records, " << res.steps
      << " steps\nwrote " << series << "\nwrote " << ck << '\n';
  return exit_ok;
}

inline int cmd_compare_ode(const RunConfig& cfg, const std::string& series_path, std::ostream& out) {
  detail::Printer pr{out};
  using detail::num;
  auto describe = [&](const std::string& name, const ComparisonResult& r) {
    if (r.blew_up)
      pr.value(name + " blow-up time", r.blowup_time);
    else
      out << "  " << name << ": no blow-up before " << r.trajectory.back().t << '\n';
  };
  if (series_path.empty()) {
    const ComparisonState s0{cfg.ode.Q0, cfg.ode.C0, cfg.ode.c, cfg.ode.kappa};
    ComparisonOptions ro;
    ro.model = ComparisonModel::reduced;
    const auto red = integrate_comparison(s0, cfg.ode.T_max, ro);
    const auto sys = integrate_comparison(s0, cfg.ode.T_max);
    pr.value("bound 1/(c kappa Q0)", red.bound);
    describe("reduced", red);
    describe("system", sys);
    pr.check("reduced model bound", red.blew_up && red.bound_ok, "T = " + num(red.blowup_time, 10));
    if (sys.dominance_preserved)
      pr.check("system bound", sys.blew_up && sys.bound_ok, "dominance preserved, T = " + num(sys.blowup_time, 10));
    else
      pr.info("system bound", "dominance C >= kappa Q^2 lost along the flow, bound not implied");
    return pr.all_ok ? exit_ok : exit_check_failed;
  }
  const auto rec = read_series(series_path);
  const auto f = fit_constants(rec);
  pr.value("c_lower", f.c_lower);
  pr.value("C0_upper", f.C0_upper);
  pr.value("kappa_max", f.kappa_max);
  pr.check("Dini band", !f.degenerate, "lower rate " + num(f.c_lower) + " over " + std::to_string(f.intervals) + " intervals");
  pr.check("source dominance", f.dominance_ok, "C >= kappa_max Q^2 at every record");
  if (pr.all_ok) {
    const auto& last = rec.back();
    const auto r = integrate_comparison({last.Q, last.C, f.c_lower, f.kappa_max}, cfg.ode.T_max);
    describe("fitted system", r);
    pr.value("bound after last record", last.t + r.bound);
  }
  return pr.all_ok ? exit_ok : exit_check_failed;
}

inline int cmd_report(const RunConfig& cfg, std::string series_path, std::ostream& out) {
  if (series_path.empty()) series_path = cfg.output_dir + "/series.csv";
  const auto rec = read_series(series_path);
  if (rec.empty()) throw FormatError("series has no records: " + series_path);
  for (const auto& p : write_series_plots(rec, cfg.output_dir)) out << "wrote " << p << '\n';
  return exit_ok;
}

/// Entry point. Exit 0 on success, 1 when a check fails or the command
/// cannot complete, 2 on usage or configuration errors.
inline int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quadrupole packet toolkit for axisymmetric swirling flow", "qel"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1, 1);

  std::string config_file;
  app.add_option("--config", config_file, "INI configuration file")->check(CLI::ExistingFile);
  const auto& keys = config_keys();
  std::vector<std::string> raw(keys.size());
  std::vector<CLI::Option*> opts;
  for (std::size_t k = 0; k < keys.size(); ++k)
    opts.push_back(app.add_option(keys[k].flag, raw[k], keys[k].help + " [" + keys[k].path + "]")->group("Configuration"));

  std::size_t mc_samples = 1000000;
  std::string from, series_compare, series_report;
  bool warn_only = false;
  auto* vk = app.add_subcommand("verify-kernel", "kernel constants, parity table and source expansion");
  vk->add_option("--mc-samples", mc_samples, "Monte Carlo samples for c_Q")->check(CLI::Range(2.0, 1e10));
  auto* md = app.add_subcommand("make-data", "write the initial checkpoint and self-entry report");
  auto* se = app.add_subcommand("self-entry", "check the self-entry conditions of the explicit datum");
  auto* evc = app.add_subcommand("evolve", "evolve and record the diagnostics series");
  evc->add_option("--from", from, "resume from a checkpoint")->check(CLI::ExistingFile);
  evc->add_flag("--warn-only", warn_only, "keep running after E exceeds E_cap");
  auto* co = app.add_subcommand("compare-ode", "Riccati comparison flow, or fit it from a series");
  co->add_option("--series", series_compare, "fit constants from this series CSV")->check(CLI::ExistingFile);
  auto* rp = app.add_subcommand("report", "plot a series CSV");
  rp->add_option("--series", series_report, "series CSV (default OUTPUT_DIR/series.csv)");
  for (auto* s : {vk, md, se, evc, co, rp}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return exit_usage;
  }

  std::map<std::string, std::string> flags;
  for (std::size_t k = 0; k < keys.size(); ++k)
    if (opts[k]->count() > 0) flags[keys[k].path] = raw[k];
  RunConfig cfg;
  try {
    cfg = resolve_config(config_file, flags);
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  }

  std::string command_line = "qel";
  for (int k = 1; k < argc; ++k) command_line += std::string(" ") + argv[k];
  try {
    out << "qel " << version_string() << '\n';
    out << "manifest: " << write_manifest(cfg, command_line) << '\n';
    if (vk->parsed()) return cmd_verify_kernel(cfg, mc_samples, out);
    if (md->parsed()) return cmd_make_data(cfg, out);
    if (se->parsed()) return cmd_self_entry(cfg, out);
    if (evc->parsed()) return cmd_evolve(cfg, from, warn_only, out);
    if (co->parsed()) return cmd_compare_ode(cfg, series_compare, out);
    return cmd_report(cfg, series_report, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_check_failed;
  }
}

}  // namespace qel::cli
