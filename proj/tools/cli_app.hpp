#pragma once

// Command-line front end. `run` takes the arguments (without the program
// name) and writes to the given streams, so tests can drive it in-process.
//
// Exit codes: 0 success, 1 internal/numerical failure, 2 invalid input.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "punctured/punctured.hpp"

namespace punctured::cli {

inline constexpr const char* kVersion = "punctured 1.0.0";

struct Globals {
  std::optional<int> n_max;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
};

namespace detail {

inline std::string header_comment(const std::string& command, const json& config) {
  return "# " + std::string(kVersion) + " " + command + " config=" + config.dump() + "\n";
}

inline void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("cannot write '" + path + "'");
  f << text;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline PuncturedStateSpec load_spec(const std::string& path) { return spec_from_json(read_json_file(path)); }

inline ScanAxis axis_from_json(const json& a, const std::string& where) {
  if (!a.is_object()) throw InvalidInput(where + ": expected an object");
  ScanAxis ax;
  if (!a.contains("name") || !a.at("name").is_string()) throw InvalidInput(where + ": missing 'name'");
  ax.name = a.at("name").get<std::string>();
  ax.min = punctured::detail::req_number(a, "min", where);
  ax.max = punctured::detail::req_number(a, "max", where);
  if (!a.contains("steps") || !a.at("steps").is_number_integer()) {
    throw InvalidInput(where + ": 'steps' must be an integer");
  }
  ax.steps = a.at("steps").get<int>();
  const std::string scale = a.value("scale", std::string("linear"));
  if (scale != "linear" && scale != "log") throw InvalidInput(where + ": scale must be linear or log");
  ax.log = scale == "log";
  return ax;
}

struct Sweep {
  Family family;
  std::map<std::string, double> fixed;
  std::vector<ScanAxis> axes;
  WeightRule rule = WeightRule::Max;
};

/// {family, fixed: {name: value}, axes: [{name, min, max, steps, scale}],
///  weight: "max" | {"fixed": w}}
inline Sweep sweep_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("sweep config: expected a JSON object");
  Sweep s;
  s.family = family_from_name(punctured::detail::req_string(j, "family", "sweep config"));
  if (j.contains("fixed")) {
    if (!j.at("fixed").is_object()) throw InvalidInput("sweep config: 'fixed' must be an object");
    for (auto it = j.at("fixed").begin(); it != j.at("fixed").end(); ++it) {
      if (!it.value().is_number()) throw InvalidInput("fixed." + it.key() + " must be a number");
      const auto& names = scan_parameter_names();
      if (std::find(names.begin(), names.end(), it.key()) == names.end()) {
        throw InvalidInput("unknown parameter 'fixed." + it.key() + "'");
      }
      s.fixed[it.key()] = it.value().get<double>();
    }
  }
  if (!j.contains("axes") || !j.at("axes").is_array()) throw InvalidInput("sweep config: 'axes' must be an array");
  int k = 0;
  for (const json& a : j.at("axes")) s.axes.push_back(axis_from_json(a, "axes[" + std::to_string(k++) + "]"));
  if (s.axes.empty() || s.axes.size() > 2) throw InvalidInput("sweep config: need 1 or 2 axes");
  for (const auto& a : s.axes) {
    if (a.steps < 2) throw InvalidInput("axis '" + a.name + "' needs at least 2 steps");
  }
  if (j.contains("weight")) {
    const json& w = j.at("weight");
    if (w.is_string() && w.get<std::string>() == "max") {
      s.rule = WeightRule::Max;
    } else if (w.is_object() && w.contains("fixed") && w.at("fixed").is_number()) {
      s.rule = WeightRule::Fixed;
      s.fixed["w"] = w.at("fixed").get<double>();
    } else {
      throw InvalidInput("sweep config: weight must be \"max\" or {\"fixed\": w}");
    }
  }
  return s;
}

// ---------------------------------------------------------------------------

inline int cmd_state_build(const Globals& g, const std::string& spec_path, std::ostream& out) {
  const PuncturedStateSpec spec = load_spec(spec_path);
  int n_max = g.n_max.value_or(suggested_n_max(spec));
  if (!g.n_max) {
    // no explicit cut-off: grow until the trace has converged
    while (n_max < 1024 && std::abs(1.0 - build_density(spec, n_max).trace()) > 1e-12) n_max = n_max * 3 / 2;
  }
  const FockOperator rho = checked_build_density(spec, n_max);
  json j = to_json(rho);
  j["spec"] = to_json(spec);
  j["n_max"] = n_max;
  j["summary"] = {{"trace", rho.trace()},
                  {"min_eigenvalue", min_eigenvalue(rho)},
                  {"hermiticity_residual", rho.hermiticity_residual()},
                  {"gershgorin_margin", gershgorin_margin(rho)}};
  write_text(g.out, dump(j), out);
  return 0;
}

inline int cmd_positivity_check(const Globals& g, const std::string& spec_path, std::ostream& out) {
  const PuncturedStateSpec spec = load_spec(spec_path);
  ReportOptions ro;
  if (g.n_max) ro.n_max_start = *g.n_max;
  const PositivityReport rep = positivity_report(spec, ro);
  json j = to_json(rep);
  j["spec"] = to_json(spec);
  if (spec.punctures.size() == 1) {
    WmaxOptions wo;
    if (g.tol) wo.rel_tol = *g.tol;
    try {
      j["wmax_numeric"] = to_json(numeric_wmax(spec, wo));
    } catch (const InvalidInput& e) {
      j["wmax_numeric"] = nullptr;
      j["wmax_note"] = e.what();
    }
    if (classify(spec) == Family::DeltaThermal) {
      const double nbar = std::get<Thermal>(spec.base).nbar;
      j["sc_bound"] = to_json(sc_bound_delta_thermal(nbar, spec.punctures[0].center));
    }
  }
  write_text(g.out, dump(j), out);
  return rep.verdict == Verdict::Indeterminate ? 1 : 0;
}

inline int cmd_bounds_sweep(const Globals& g, const std::string& cfg_path, std::ostream& out) {
  const json cfg = read_json_file(cfg_path);
  Sweep sw = sweep_from_json(cfg);
  if (sw.family != Family::DeltaThermal && sw.family != Family::DeltaSqueezed &&
      sw.family != Family::GaussianThermal && sw.family != Family::GaussianSqueezed) {
    throw InvalidInput("bounds sweep needs a single-puncture family");
  }
  const bool squeezed = sw.family == Family::DeltaSqueezed || sw.family == Family::GaussianSqueezed;
  const bool has_nc = sw.family != Family::GaussianSqueezed;
  const bool has_sc = sw.family == Family::DeltaThermal;
  const bool gaussian = sw.family == Family::GaussianThermal || sw.family == Family::GaussianSqueezed;
  WmaxOptions wo;
  if (g.tol) wo.rel_tol = *g.tol;

  json rows = json::array();
  const ScanAxis a1 = sw.axes[0];
  const std::optional<ScanAxis> a2 = sw.axes.size() > 1 ? std::optional<ScanAxis>(sw.axes[1]) : std::nullopt;
  const int n2 = a2 ? a2->steps : 1;
  std::ostringstream csv;
  json resolved = cfg;
  if (g.n_max) resolved["n_max"] = *g.n_max;
  if (g.tol) resolved["tol"] = *g.tol;
  csv << header_comment("bounds sweep", resolved);
  csv << "family,nbar,b,alpha_abs";
  if (squeezed) csv << ",nbar_r,nbar_i";
  if (has_nc) csv << ",bound_nc";
  if (has_sc) csv << ",bound_sc";
  csv << ",wmax_numeric,converged,n_max_used\n";
  for (int j = 0; j < n2; ++j) {
    for (int i = 0; i < a1.steps; ++i) {
      auto params = sw.fixed;
      params[a1.name] = a1.value(i);
      if (a2) params[a2->name] = a2->value(j);
      PuncturedStateSpec s = spec_from_parameters(sw.family, params, WeightRule::Fixed);
      s.punctures[0].weight = 0.0;
      validate(s);
      const Puncture& p = s.punctures[0];
      const double nbar = std::holds_alternative<Thermal>(s.base) ? std::get<Thermal>(s.base).nbar
                                                                  : std::get<SqueezedThermal>(s.base).nbar;
      json row{{"family", family_name(sw.family)}, {"nbar", nbar}, {"alpha_abs", std::abs(p.center)}};
      row["b"] = gaussian ? json(p.b) : json(nullptr);
      csv << family_name(sw.family) << ',' << fmt17(nbar) << ',' << (gaussian ? fmt17(p.b) : "") << ','
          << fmt17(std::abs(p.center));
      if (squeezed) {
        const auto w = widths_of(std::get<SqueezedThermal>(s.base));
        row["nbar_r"] = w.nbar_r;
        row["nbar_i"] = w.nbar_i;
        csv << ',' << fmt17(w.nbar_r) << ',' << fmt17(w.nbar_i);
      }
      if (has_nc) {
        const double v = analytic_nc_bound(s)->value;
        row["bound_nc"] = v;
        csv << ',' << fmt17(v);
      }
      if (has_sc) {
        const double v = sc_bound_delta_thermal(nbar, p.center).value;
        row["bound_sc"] = v;
        csv << ',' << fmt17(v);
      }
      double w = 0.0;
      bool conv = true;
      int used = 0;
      if (g.n_max) {
        w = numeric_wmax_at(s, *g.n_max, wo.rel_tol, wo.abs_tol);
        used = *g.n_max;
      } else {
        const WmaxResult r = numeric_wmax(s, wo);
        w = r.value;
        conv = r.converged;
        used = r.n_max_used;
      }
      row["wmax_numeric"] = w;
      row["converged"] = conv;
      row["n_max_used"] = used;
      csv << ',' << fmt17(w) << ',' << (conv ? "true" : "false") << ',' << used << '\n';
      rows.push_back(row);
    }
  }
  if (g.format == "json") {
    write_text(g.out, dump({{"config", resolved}, {"version", kVersion}, {"rows", rows}}), out);
  } else {
    write_text(g.out, csv.str(), out);
  }
  return 0;
}

inline int cmd_g2_scan(const Globals& g, const std::string& cfg_path, const std::string& contour_path,
                       std::ostream& out, std::ostream& err) {
  const json cfg = read_json_file(cfg_path);
  Sweep sw = sweep_from_json(cfg);
  if (sw.axes.size() != 2) throw InvalidInput("g2 scan needs exactly 2 axes");
  ScanConfig sc{sw.family, sw.fixed, sw.axes[0], sw.axes[1], sw.rule};
  const ScanResult r = antibunching_scan(sc);
  std::size_t masked = 0;
  for (const auto& s : r.status) masked += s != "ok";
  if (masked > 0) err << "note: " << masked << " grid cells masked (see status column)\n";
  if (g.format == "json") {
    json cells = json::array();
    const std::size_t n1 = r.axis1_values.size();
    for (std::size_t j = 0; j < r.axis2_values.size(); ++j) {
      for (std::size_t i = 0; i < n1; ++i) {
        const auto& v = r.g2[j * n1 + i];
        cells.push_back({{sc.axis1.name, r.axis1_values[i]}, {sc.axis2.name, r.axis2_values[j]},
                         {"g2", v ? json(*v) : json(nullptr)}, {"status", r.status[j * n1 + i]}});
      }
    }
    json lines = json::array();
    for (const auto& line : r.contour) {
      json l = json::array();
      for (const auto& p : line) l.push_back({p.p1, p.p2});
      lines.push_back(l);
    }
    write_text(g.out, dump({{"config", cfg}, {"version", kVersion}, {"cells", cells}, {"contour", lines}}), out);
    return 0;
  }
  const std::string head = header_comment("g2 scan", cfg);
  write_text(g.out, scan_csv(r, head), out);
  std::string cpath = contour_path;
  if (cpath.empty() && !g.out.empty() && g.out != "-") cpath = g.out + ".contour.csv";
  if (!cpath.empty()) {
    write_text(cpath, contour_csv(r, head), out);
  } else {
    out << contour_csv(r, head);
  }
  return 0;
}

inline Region parse_region(const std::vector<double>& v) {
  if (v.size() != 4) throw InvalidInput("--region takes re_min re_max im_min im_max");
  return {v[0], v[1], v[2], v[3]};
}

inline int cmd_grid(const Globals& g, Quantity q, const std::string& spec_path, const std::vector<double>& region_v,
                    const std::vector<int>& res_v, std::ostream& out, std::ostream& err) {
  const PuncturedStateSpec spec = load_spec(spec_path);
  const Region region = region_v.empty() ? recommended_region(spec) : parse_region(region_v);
  if (res_v.size() != 2) throw InvalidInput("--resolution takes n_re n_im");
  const Resolution res{res_v[0], res_v[1]};
  for (const Puncture& p : spec.punctures) {
    if (!region.contains(p.center)) {
      err << "warning: puncture center (" << p.center.real() << ", " << p.center.imag()
          << ") lies outside the region\n";
    }
  }
  const PhaseSpaceGrid grid = sample_grid(spec, q, region, res);
  json resolved{{"spec", to_json(spec)},
                {"region", {region.re_min, region.re_max, region.im_min, region.im_max}},
                {"resolution", {res.n_re, res.n_im}}};
  json side = grid_sidecar(grid);
  if (g.format == "json") {
    side["values"] = grid.values;
    side["spec"] = to_json(spec);
    write_text(g.out, dump(side), out);
    return 0;
  }
  const std::string cmd = q == Quantity::P ? "pfunc grid" : "wigner grid";
  write_text(g.out, grid_csv(grid, header_comment(cmd, resolved)), out);
  if (!g.out.empty() && g.out != "-") {
    write_text(g.out + ".json", dump(side), out);
  } else {
    err << "sidecar: " << side.dump() << "\n";
  }
  return 0;
}

inline int cmd_qnd(const Globals& g, const std::string& cfg_path, std::ostream& out) {
  json cfg = read_json_file(cfg_path);
  if (g.seed) cfg["seed"] = *g.seed;
  if (g.n_max) cfg["n_max"] = *g.n_max;
  const QndConfig c = qnd_config_from_json(cfg);
  const QndResult r = simulate_qnd(c);
  json j = to_json(r);
  j["version"] = kVersion;
  write_text(g.out, dump(j), out);
  return 0;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Punctured P-function states: construction, positivity, phase space, photon statistics, QND"};
  app.require_subcommand(1);
  Globals g;
  int n_max_v = 0;
  double tol_v = 0.0;
  std::uint64_t seed_v = 0;
  auto* o_nmax = app.add_option("--n-max", n_max_v, "Fock cut-off (fixed truncation)")->check(CLI::Range(0, 4096));
  auto* o_tol = app.add_option("--tol", tol_v, "relative tolerance for maximal-weight bisection")
                    ->check(CLI::PositiveNumber);
  auto* o_seed = app.add_option("--seed", seed_v, "RNG seed (QND Monte Carlo)");
  app.add_option("--out", g.out, "output path (default stdout)");
  g.format = "csv";
  app.add_option("--format", g.format, "tabular output format")->check(CLI::IsMember({"csv", "json"}));
  app.fallthrough();

  std::string input, contour_path;
  std::vector<double> region;
  std::vector<int> resolution{101, 101};

  auto* state = app.add_subcommand("state", "state construction")->require_subcommand(1);
  auto* state_build = state->add_subcommand("build", "write the truncated density matrix and a summary");
  state_build->add_option("spec", input, "spec JSON file")->required();

  auto* pos = app.add_subcommand("positivity", "positivity certification")->require_subcommand(1);
  auto* pos_check = pos->add_subcommand("check", "NC/SC/eigenvalue report");
  pos_check->add_option("spec", input, "spec JSON file")->required();

  auto* bounds = app.add_subcommand("bounds", "analytic and numeric weight bounds")->require_subcommand(1);
  auto* bounds_sweep = bounds->add_subcommand("sweep", "bounds over a parameter grid");
  bounds_sweep->add_option("config", input, "sweep config JSON file")->required();

  auto* g2 = app.add_subcommand("g2", "photon statistics")->require_subcommand(1);
  auto* g2_scan = g2->add_subcommand("scan", "g2 over a 2-D grid with the g2 = 1 contour");
  g2_scan->add_option("config", input, "sweep config JSON file")->required();
  g2_scan->add_option("--contour-out", contour_path, "contour CSV path (default <out>.contour.csv)");

  auto* wig = app.add_subcommand("wigner", "Wigner function")->require_subcommand(1);
  auto* wig_grid = wig->add_subcommand("grid", "sample W on a grid");
  auto* pf = app.add_subcommand("pfunc", "P function")->require_subcommand(1);
  auto* pf_grid = pf->add_subcommand("grid", "sample the smooth part of P on a grid");
  for (auto* c : {wig_grid, pf_grid}) {
    c->add_option("spec", input, "spec JSON file")->required();
    c->add_option("--region", region, "re_min re_max im_min im_max")->expected(4);
    c->add_option("--resolution", resolution, "n_re n_im")->expected(2);
  }

  auto* qnd = app.add_subcommand("qnd", "QND vacuum removal")->require_subcommand(1);
  auto* qnd_run = qnd->add_subcommand("run", "exact and Monte Carlo cascade");
  qnd_run->add_option("config", input, "QND config JSON file")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  if (o_nmax->count()) g.n_max = n_max_v;
  if (o_tol->count()) g.tol = tol_v;
  if (o_seed->count()) g.seed = seed_v;

  try {
    if (state_build->parsed()) return detail::cmd_state_build(g, input, out);
    if (pos_check->parsed()) return detail::cmd_positivity_check(g, input, out);
    if (bounds_sweep->parsed()) return detail::cmd_bounds_sweep(g, input, out);
    if (g2_scan->parsed()) return detail::cmd_g2_scan(g, input, contour_path, out, err);
    if (wig_grid->parsed()) return detail::cmd_grid(g, Quantity::W, input, region, resolution, out, err);
    if (pf_grid->parsed()) return detail::cmd_grid(g, Quantity::P, input, region, resolution, out, err);
    if (qnd_run->parsed()) return detail::cmd_qnd(g, input, out);
  } catch (const InvalidInput& e) {
    err << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const TruncationError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return 1;
  }
  err << "error: no command\n";
  return 2;
}

}  // namespace punctured::cli
