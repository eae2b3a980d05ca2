#pragma once

// JSON and CSV encodings of specs, reports, grids, scans and QND results.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "punctured/phasespace.hpp"
#include "punctured/photonstats.hpp"
#include "punctured/positivity.hpp"
#include "punctured/qnd.hpp"
#include "punctured/state.hpp"

namespace punctured {

using nlohmann::json;

/// Shortest text that reads back as the same double (17 significant digits).
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Spec

inline json to_json(const PuncturedStateSpec& s) {
  json j;
  if (const auto* t = std::get_if<Thermal>(&s.base)) {
    j["base"] = {{"type", "thermal"}, {"nbar", t->nbar}};
  } else {
    const auto& sq = std::get<SqueezedThermal>(s.base);
    j["base"] = {{"type", "squeezed_thermal"}, {"nbar", sq.nbar}, {"r", sq.r}};
  }
  j["punctures"] = json::array();
  for (const Puncture& p : s.punctures) {
    json q{{"shape", p.shape == PunctureShape::Delta ? "delta" : "gaussian"},
           {"alpha", {p.center.real(), p.center.imag()}},
           {"weight", p.weight}};
    if (p.shape == PunctureShape::Gaussian) q["b"] = p.b;
    j["punctures"].push_back(q);
  }
  return j;
}

namespace detail {

inline double req_number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw InvalidInput(where + ": missing field '" + key + "'");
  if (!j.at(key).is_number()) throw InvalidInput(where + ": field '" + key + "' must be a number");
  return j.at(key).get<double>();
}

inline std::string req_string(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw InvalidInput(where + ": field '" + key + "' must be a string");
  }
  return j.at(key).get<std::string>();
}

}  // namespace detail

inline PuncturedStateSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("spec: expected a JSON object");
  if (!j.contains("base") || !j.at("base").is_object()) throw InvalidInput("spec: missing object 'base'");
  const json& b = j.at("base");
  PuncturedStateSpec s;
  const std::string type = detail::req_string(b, "type", "base");
  if (type == "thermal") {
    s.base = Thermal{detail::req_number(b, "nbar", "base")};
  } else if (type == "squeezed_thermal") {
    if (b.contains("nbar_r") || b.contains("nbar_i")) {
      s.base = squeezing_from_widths(
          {detail::req_number(b, "nbar_r", "base"), detail::req_number(b, "nbar_i", "base")});
    } else {
      s.base = SqueezedThermal{detail::req_number(b, "nbar", "base"), detail::req_number(b, "r", "base")};
    }
  } else {
    throw InvalidInput("base: unknown type '" + type + "' (expected thermal or squeezed_thermal)");
  }
  if (j.contains("punctures")) {
    if (!j.at("punctures").is_array()) throw InvalidInput("spec: 'punctures' must be an array");
    int idx = 0;
    for (const json& q : j.at("punctures")) {
      const std::string where = "punctures[" + std::to_string(idx++) + "]";
      const std::string shape = detail::req_string(q, "shape", where);
      if (!q.contains("alpha") || !q.at("alpha").is_array() || q.at("alpha").size() != 2 ||
          !q.at("alpha")[0].is_number() || !q.at("alpha")[1].is_number()) {
        throw InvalidInput(where + ": 'alpha' must be [re, im]");
      }
      const Complex c(q.at("alpha")[0].get<double>(), q.at("alpha")[1].get<double>());
      const double w = detail::req_number(q, "weight", where);
      if (shape == "delta") {
        s.punctures.push_back(Puncture::delta(c, w));
      } else if (shape == "gaussian") {
        s.punctures.push_back(Puncture::gaussian(detail::req_number(q, "b", where), c, w));
      } else {
        throw InvalidInput(where + ": unknown shape '" + shape + "' (expected delta or gaussian)");
      }
    }
  }
  validate(s);
  return s;
}

/// Parses JSON text; syntax errors report line and column.
inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') { ++line; col = 1; } else { ++col; }
    }
    std::ostringstream os;
    os << source << ":" << line << ":" << col << ": JSON parse error: " << e.what();
    throw InvalidInput(os.str());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Operators and reports

inline json to_json(const FockOperator& m) {
  json entries = json::array();
  for (int r = 0; r < m.dim(); ++r) {
    for (int c = 0; c < m.dim(); ++c) entries.push_back({m(r, c).real(), m(r, c).imag()});
  }
  return {{"dim", m.dim()}, {"entries", entries}};
}

inline json to_json(const BoundResult& b) {
  return {{"value", b.value}, {"kind", bound_kind_name(b.kind)}, {"family", family_name(b.family)},
          {"boundary_case", b.boundary_case}};
}

inline json to_json(const PositivityReport& r) {
  json hist = json::array();
  for (const auto& h : r.convergence_history) hist.push_back({{"n_max", h.n_max}, {"min_eigenvalue", h.min_eigenvalue}});
  return {{"family", family_name(r.family)},
          {"nc_pass", r.nc_pass ? json(*r.nc_pass) : json(nullptr)},
          {"nc_bound", r.nc_bound ? to_json(*r.nc_bound) : json(nullptr)},
          {"gershgorin_margin", r.gershgorin_margin},
          {"min_eigenvalue", r.min_eigenvalue},
          {"n_max_used", r.n_max_used},
          {"convergence_history", hist},
          {"verdict", verdict_name(r.verdict)},
          {"boundary_case", r.boundary_case}};
}

inline json to_json(const WmaxResult& w) {
  json hist = json::array();
  for (const auto& h : w.history) hist.push_back({{"n_max", h.n_max}, {"wmax", h.wmax}});
  return {{"value", w.value}, {"converged", w.converged}, {"n_max_used", w.n_max_used}, {"history", hist}};
}

inline json to_json(const G2Report& g) {
  return {{"g2", g.g2 ? json(*g.g2) : json(nullptr)},
          {"mandel_q", g.mandel_q ? json(*g.mandel_q) : json(nullptr)},
          {"mean_n", g.mean_n},
          {"second_factorial_moment", g.second_factorial_moment},
          {"route", route_name(g.route)},
          {"warning", g.warning ? json(*g.warning) : json(nullptr)}};
}

// ---------------------------------------------------------------------------
// Grids

inline json grid_sidecar(const PhaseSpaceGrid& g) {
  json deltas = json::array();
  for (const auto& d : g.delta_components) {
    deltas.push_back({{"alpha", {d.center.real(), d.center.imag()}}, {"weight", d.signed_weight}});
  }
  return {{"quantity", quantity_name(g.quantity)},
          {"region", {{"re_min", g.region.re_min}, {"re_max", g.region.re_max},
                      {"im_min", g.region.im_min}, {"im_max", g.region.im_max}}},
          {"resolution", {{"n_re", g.resolution.n_re}, {"n_im", g.resolution.n_im}}},
          {"delta_components", deltas}};
}

/// CSV with header comments, columns re,im,value in row-major order.
inline std::string grid_csv(const PhaseSpaceGrid& g, const std::string& header_comment) {
  std::ostringstream os;
  os << header_comment << "re,im,value\n";
  for (int j = 0; j < g.resolution.n_im; ++j) {
    for (int i = 0; i < g.resolution.n_re; ++i) {
      os << fmt17(g.re_at(i)) << ',' << fmt17(g.im_at(j)) << ',' << fmt17(g.at(i, j)) << '\n';
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Scans

inline std::string scan_csv(const ScanResult& r, const std::string& header_comment) {
  std::ostringstream os;
  os << header_comment << r.config.axis1.name << ',' << r.config.axis2.name << ",g2,status\n";
  const std::size_t n1 = r.axis1_values.size();
  for (std::size_t j = 0; j < r.axis2_values.size(); ++j) {
    for (std::size_t i = 0; i < n1; ++i) {
      const auto& g = r.g2[j * n1 + i];
      os << fmt17(r.axis1_values[i]) << ',' << fmt17(r.axis2_values[j]) << ','
         << (g ? fmt17(*g) : std::string()) << ',' << '"' << r.status[j * n1 + i] << '"' << '\n';
    }
  }
  return os.str();
}

inline std::string contour_csv(const ScanResult& r, const std::string& header_comment) {
  std::ostringstream os;
  os << header_comment << "polyline," << r.config.axis1.name << ',' << r.config.axis2.name << '\n';
  for (std::size_t k = 0; k < r.contour.size(); ++k) {
    for (const auto& p : r.contour[k]) os << k << ',' << fmt17(p.p1) << ',' << fmt17(p.p2) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// QND

inline json to_json(const QndConfig& c) {
  return {{"nbar", c.nbar}, {"l_max", c.l_max}, {"n_max", c.n_max}, {"shots", c.shots},
          {"seed", c.seed}, {"threads", c.threads}, {"shard_size", c.shard_size}};
}

inline QndConfig qnd_config_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("QND config: expected a JSON object");
  QndConfig c;
  c.nbar = detail::req_number(j, "nbar", "qnd");
  auto get_int = [&](const char* k, auto def) -> decltype(def) {
    if (!j.contains(k)) return def;
    if (!j.at(k).is_number_integer() && !j.at(k).is_number_unsigned()) {
      throw InvalidInput(std::string("qnd: field '") + k + "' must be an integer");
    }
    return j.at(k).get<decltype(def)>();
  };
  c.l_max = get_int("l_max", c.l_max);
  c.n_max = get_int("n_max", c.n_max);
  c.shots = get_int("shots", c.shots);
  c.seed = get_int("seed", c.seed);
  c.threads = get_int("threads", c.threads);
  c.shard_size = get_int("shard_size", c.shard_size);
  validate(c);
  return c;
}

inline json to_json(const QndResult& r) {
  return {{"config", to_json(r.config)},
          {"fidelity_closed", r.fidelity_closed},
          {"fidelity_direct", r.fidelity_direct},
          {"acceptance_exact", r.acceptance_exact},
          {"acceptance_empirical", r.acceptance_empirical ? json(*r.acceptance_empirical) : json(nullptr)},
          {"accepted_shots", r.accepted},
          {"anomalies", r.anomalies},
          {"rng", r.rng},
          {"histogram", r.histogram},
          {"realized_diagonal", r.realized.diagonal_values()},
          {"desired_diagonal", r.desired.diagonal_values()}};
}

}  // namespace punctured
