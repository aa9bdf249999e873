#pragma once
/**
 * @file report.hpp
 * @brief JSON / CSV / SVG documents for classifications, sweeps and zones.
 * Schemas are described in docs/formats.md.
 */

#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "moire/classifier.hpp"
#include "moire/config.hpp"
#include "moire/io.hpp"
#include "moire/sweep.hpp"
#include "moire/version.hpp"

namespace moire {

inline json vec_json(const Vec2& v) { return json::array({v.x, v.y}); }

inline json quadruple_json(const std::optional<Quadruple>& q) {
  if (!q) return nullptr;
  return json::array({q->m[0], q->m[1], q->m[2], q->m[3]});
}

inline std::optional<Quadruple> quadruple_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_array() || j.size() != 4) throw Error(ErrorKind::Parse, "quadruple must be an array of 4 integers");
  return Quadruple{{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()}};
}

inline Verdict verdict_from_string(const std::string& s) {
  for (Verdict v : {Verdict::Regular, Verdict::Chaotic, Verdict::Closed, Verdict::Undetermined})
    if (s == to_string(v)) return v;
  throw Error(ErrorKind::Parse, "unknown verdict '" + s + "'");
}

inline json interval_json(const std::optional<EnergyInterval>& iv) {
  if (!iv) return nullptr;
  return json{{"lo", iv->lo}, {"hi", iv->hi}, {"degenerate", iv->degenerate}};
}

inline json classifier_options_json(const ClassifierOptions& o) {
  json j{{"tau_sat", o.tau_sat}, {"k_grow", o.k_grow}, {"max_norm", o.max_norm}, {"level_tol", o.level_tol}};
  j["quadruple_tol"] = o.quadruple_tol ? json(*o.quadruple_tol) : json(nullptr);
  return j;
}

inline json budget_json(const TraceBudget& b) {
  return json{{"cell_size", b.cell_size}, {"max_arc_length", b.max_arc_length},
              {"max_cells", static_cast<std::uint64_t>(b.max_cells)}};
}

/// {level, status, quadruple, direction, strip_width, widths_by_length, parameters}
inline json classification_json(const Classification& c, const json& parameters = json::object()) {
  json j;
  j["level"] = c.level;
  j["status"] = to_string(c.verdict);
  j["quadruple"] = quadruple_json(c.quadruple);
  j["direction"] = c.widths.empty() ? json(nullptr) : vec_json(c.direction);
  j["strip_width"] = c.widths.empty() ? json(nullptr) : json(c.strip_width);
  json widths = json::array();
  for (const auto& w : c.widths) widths.push_back(json{{"arc_length", w.arc_length}, {"width", w.width}});
  j["widths_by_length"] = widths;
  j["residual"] = c.widths.empty() ? json(nullptr) : json(c.residual);
  j["diameter"] = c.verdict == Verdict::Closed ? json(c.diameter) : json(nullptr);
  j["reason"] = c.reason;
  j["parameters"] = parameters;
  return j;
}

inline Classification classification_from_json(const json& j) {
  Classification c;
  c.level = j.at("level").get<double>();
  c.verdict = verdict_from_string(j.at("status").get<std::string>());
  c.quadruple = quadruple_from_json(j.at("quadruple"));
  if (j.contains("direction") && !j["direction"].is_null())
    c.direction = {j["direction"][0].get<double>(), j["direction"][1].get<double>()};
  if (j.contains("strip_width") && !j["strip_width"].is_null()) c.strip_width = j["strip_width"].get<double>();
  if (j.contains("residual") && !j["residual"].is_null()) c.residual = j["residual"].get<double>();
  if (j.contains("diameter") && !j["diameter"].is_null()) c.diameter = j["diameter"].get<double>();
  for (const auto& w : j.value("widths_by_length", json::array()))
    c.widths.push_back({w.at("arc_length").get<double>(), w.at("width").get<double>()});
  c.reason = j.value("reason", std::string{});
  return c;
}

inline json sweep_config_json(const SweepConfig& c) {
  json j{{"alpha_start", c.alpha_start},
         {"alpha_end", c.alpha_end},
         {"alpha_count", static_cast<std::uint64_t>(c.alpha_count)},
         {"shifts_per_alpha", static_cast<std::uint64_t>(c.shifts_per_alpha)},
         {"level_strategy", c.level_strategy == LevelStrategy::Fixed ? "fixed" : "interval-midpoint"},
         {"fixed_level", c.fixed_level},
         {"seed", c.seed},
         {"commensurability_bound", c.commensurability_bound},
         {"classifier", classifier_options_json(c.classifier)}};
  j["budget"] = c.budget ? budget_json(*c.budget) : json(nullptr);
  j["window"] = c.window ? json::array({c.window->lo.x, c.window->lo.y, c.window->hi.x, c.window->hi.y}) : json(nullptr);
  return j;
}

inline json sweep_point_json(const SweepPoint& p) {
  json shifts = json::array();
  for (const auto& s : p.shifts) {
    json sj{{"shift", vec_json(s.shift)}, {"classification", classification_json(s.classification)}};
    if (!s.error.empty()) sj["error"] = s.error;
    shifts.push_back(sj);
  }
  return json{{"alpha", p.alpha},
              {"index", static_cast<std::uint64_t>(p.index)},
              {"verdict", to_string(p.verdict)},
              {"quadruple", quadruple_json(p.quadruple)},
              {"mean_width", p.mean_width},
              {"level", p.level},
              {"interval", interval_json(p.interval)},
              {"periodic", p.periodic},
              {"note", p.note},
              {"shifts", shifts}};
}

inline json zones_json(const ZoneDetection& det) {
  json zones = json::array();
  for (const auto& z : det.zones) {
    json samples = json::array();
    for (auto k : z.samples) samples.push_back(static_cast<std::uint64_t>(k));
    zones.push_back(json{{"alpha_lo", z.alpha_lo},
                         {"alpha_hi", z.alpha_hi},
                         {"quadruple", quadruple_json(z.quadruple)},
                         {"mean_width", z.mean_width},
                         {"outer_lo", z.outer_lo},
                         {"outer_hi", z.outer_hi},
                         {"refine_steps", z.refine_steps},
                         {"samples", samples}});
  }
  json complement = json::array();
  for (const auto& c : det.complement) complement.push_back(json{{"lo", c.lo}, {"hi", c.hi}});
  json refinements = json::array();
  for (const auto& r : det.refinements)
    refinements.push_back(json{{"alpha", r.alpha},
                               {"verdict", to_string(r.verdict.verdict)},
                               {"quadruple", quadruple_json(r.verdict.quadruple)}});
  return json{{"range", json::array({det.range_lo, det.range_hi})},
              {"refine_tol", det.refine_tol},
              {"zones", zones},
              {"complement", complement},
              {"complement_measure", det.complement_measure()},
              {"refinements", refinements},
              {"note", "zones are claimed from sampled angles plus bisection only; the complement may contain "
                       "unresolved thin zones, and zone boundary angles carry no regular/chaotic claim"}};
}

inline ZoneDetection zones_from_json(const json& j) {
  ZoneDetection det;
  det.range_lo = j.at("range")[0].get<double>();
  det.range_hi = j.at("range")[1].get<double>();
  det.refine_tol = j.value("refine_tol", 0.0);
  for (const auto& zj : j.at("zones")) {
    StabilityZone z;
    z.alpha_lo = zj.at("alpha_lo").get<double>();
    z.alpha_hi = zj.at("alpha_hi").get<double>();
    const auto q = quadruple_from_json(zj.at("quadruple"));
    if (!q) throw Error(ErrorKind::Parse, "zone without a quadruple");
    z.quadruple = *q;
    z.mean_width = zj.value("mean_width", 0.0);
    z.outer_lo = zj.value("outer_lo", z.alpha_lo);
    z.outer_hi = zj.value("outer_hi", z.alpha_hi);
    z.refine_steps = zj.value("refine_steps", 0);
    for (const auto& k : zj.value("samples", json::array())) z.samples.push_back(k.get<std::size_t>());
    det.zones.push_back(std::move(z));
  }
  for (const auto& cj : j.value("complement", json::array()))
    det.complement.push_back({cj.at("lo").get<double>(), cj.at("hi").get<double>()});
  return det;
}

/// Full evidence document: sweep configuration, every sampled point, and zones when given.
inline json sweep_json(const SweepResult& r, const ZoneDetection* det = nullptr) {
  json points = json::array();
  for (const auto& p : r.points) points.push_back(sweep_point_json(p));
  json j{{"config", sweep_config_json(r.config)}, {"points", points}};
  if (det) j["zones"] = zones_json(*det);
  return j;
}

/// Reads the `points` array of an evidence document (shift details are optional).
inline SweepResult sweep_result_from_json(const json& j) {
  SweepResult r;
  const auto& cfg = j.value("config", json::object());
  r.config.alpha_start = cfg.value("alpha_start", 0.0);
  r.config.alpha_end = cfg.value("alpha_end", 0.0);
  r.config.alpha_count = cfg.value("alpha_count", std::uint64_t{0});
  r.config.seed = cfg.value("seed", std::uint64_t{1});
  for (const auto& pj : j.at("points")) {
    SweepPoint p;
    p.alpha = pj.at("alpha").get<double>();
    p.index = pj.value("index", std::uint64_t{r.points.size()});
    p.verdict = verdict_from_string(pj.at("verdict").get<std::string>());
    p.quadruple = quadruple_from_json(pj.value("quadruple", json(nullptr)));
    p.mean_width = pj.value("mean_width", 0.0);
    p.level = pj.value("level", 0.0);
    p.periodic = pj.value("periodic", false);
    p.note = pj.value("note", std::string{});
    for (const auto& sj : pj.value("shifts", json::array())) {
      ShiftSample s;
      s.shift = {sj.at("shift")[0].get<double>(), sj.at("shift")[1].get<double>()};
      s.classification = classification_from_json(sj.at("classification"));
      s.level = p.level;
      s.error = sj.value("error", std::string{});
      p.shifts.push_back(std::move(s));
    }
    if (p.verdict == Verdict::Regular && !p.quadruple)
      throw Error(ErrorKind::Parse, "Regular point without a quadruple at alpha " + format_double(p.alpha));
    r.points.push_back(std::move(p));
  }
  return r;
}

inline constexpr const char* kZoneCsvHeader = "alpha_lo,alpha_hi,m1,m2,m3,m4,mean_width,samples";

inline std::string zones_csv(const ZoneDetection& det) {
  std::string out = std::string(kZoneCsvHeader) + "\n";
  for (const auto& z : det.zones) {
    out += format_double(z.alpha_lo) + "," + format_double(z.alpha_hi);
    for (int m : z.quadruple.m) out += "," + std::to_string(m);
    out += "," + format_double(z.mean_width) + "," + std::to_string(z.samples.size()) + "\n";
  }
  return out;
}

/// Deterministic color per quadruple.
inline std::string quadruple_color(const Quadruple& q) {
  const auto h = fnv1a64(q.str());
  char buf[32];
  std::snprintf(buf, sizeof buf, "hsl(%u,70%%,45%%)", static_cast<unsigned>(h % 360));
  return buf;
}

/// Zones as arcs of the unit circle (angle measured counterclockwise from +x).
inline std::string zones_svg(const ZoneDetection& det) {
  const double r = 1.0;
  auto pt = [&](double a) { return format_double(r * std::cos(a)) + " " + format_double(-r * std::sin(a)); };
  auto arc = [&](double lo, double hi, const std::string& color, const std::string& attrs) {
    const double span = hi - lo;
    std::string d;
    if (span >= 2.0 * std::numbers::pi - 1e-12) {
      // full circle: two half arcs
      d = "M" + pt(lo) + " A1 1 0 1 0 " + pt(lo + std::numbers::pi) + " A1 1 0 1 0 " + pt(lo);
    } else {
      const int large = span > std::numbers::pi ? 1 : 0;
      d = "M" + pt(lo) + " A1 1 0 " + std::to_string(large) + " 0 " + pt(hi);
    }
    return "<path " + attrs + " fill=\"none\" stroke=\"" + color + "\" stroke-width=\"0.06\" d=\"" + d + "\"/>\n";
  };
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-1.2 -1.2 2.4 2.4\">\n";
  out += "<circle cx=\"0\" cy=\"0\" r=\"1\" fill=\"none\" stroke=\"#ddd\" stroke-width=\"0.01\"/>\n";
  for (const auto& c : det.complement)
    if (c.hi > c.lo)
      out += arc(c.lo, c.hi, "#999",
                 "class=\"complement\" data-alpha-lo=\"" + format_double(c.lo) + "\" data-alpha-hi=\"" +
                     format_double(c.hi) + "\"");
  for (const auto& z : det.zones) {
    if (!(z.alpha_hi > z.alpha_lo)) continue;
    out += arc(z.alpha_lo, z.alpha_hi, quadruple_color(z.quadruple),
               "class=\"zone\" data-alpha-lo=\"" + format_double(z.alpha_lo) + "\" data-alpha-hi=\"" +
                   format_double(z.alpha_hi) + "\" data-quadruple=\"" + z.quadruple.str() + "\"");
  }
  out += "</svg>\n";
  return out;
}

/// Provenance record written next to every CLI output. Timestamps live only here,
/// so the data files themselves are byte-identical across equal runs.
struct RunManifest {
  std::string command;
  std::string config_path;
  std::string config_hash;  ///< FNV-1a of the canonical config text
  json parameters = json::object();
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;
};

inline std::string config_fingerprint(const SuperpositionPotential& f) { return hex64(fnv1a64(potential_config_text(f))); }

inline json manifest_json(const RunManifest& m) {
  json outputs = json::array();
  for (const auto& o : m.outputs) outputs.push_back(o);
  return json{{"tool", "moire"},
              {"version", kVersion},
              {"command", m.command},
              {"config_path", m.config_path},
              {"config_hash", m.config_hash},
              {"parameters", m.parameters},
              {"outputs", outputs},
              {"started_at", m.started_at},
              {"finished_at", m.finished_at}};
}

}  // namespace moire
