#pragma once
/**
 * @file config.hpp
 * @brief Key-value potential definition files. See docs/formats.md.
 *
 *   # comment
 *   v.e1 = 2pi 0            # period vectors of the fixed layer
 *   v.e2 = 0 2pi
 *   v.term = 1 0 1.0 0      # n1 n2 amplitude [phase], repeatable
 *   v.preset = square 2pi 1 # or: hexagonal <a> <amplitude>
 *   u.e1 = ...              # same keys for the transformed layer
 *   alpha = 0.7
 *   shift = 0 0
 *   combiner = sum | product | weighted <c1> <c2> | table
 *   table.v = <lo> <hi> <n>
 *   table.u = <lo> <hi> <n>
 *   table.row = <n values>  # one row per v sample
 *
 * Numbers accept an optional constant factor: 2pi, -pi/2, 0.5*sqrt3, sqrt2/2.
 */

#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "moire/error.hpp"
#include "moire/io.hpp"
#include "moire/potential.hpp"

namespace moire {

namespace detail {

inline std::optional<double> parse_plain(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
  return v;
}

/// [sign][coef][*](pi|sqrt2|sqrt3)[/denom] or a plain number.
inline std::optional<double> parse_number(std::string_view tok) {
  if (auto v = parse_plain(tok)) return v;
  double sign = 1.0;
  if (!tok.empty() && (tok.front() == '-' || tok.front() == '+')) {
    if (tok.front() == '-') sign = -1.0;
    tok.remove_prefix(1);
  }
  static constexpr std::pair<std::string_view, double> constants[] = {
      {"pi", std::numbers::pi}, {"sqrt2", std::numbers::sqrt2}, {"sqrt3", std::numbers::sqrt3}};
  for (const auto& [name, value] : constants) {
    const auto pos = tok.find(name);
    if (pos == std::string_view::npos) continue;
    std::string_view coef = tok.substr(0, pos);
    std::string_view rest = tok.substr(pos + name.size());
    if (!coef.empty() && coef.back() == '*') coef.remove_suffix(1);
    double c = 1.0;
    if (!coef.empty()) {
      auto cv = parse_plain(coef);
      if (!cv) return std::nullopt;
      c = *cv;
    }
    double d = 1.0;
    if (!rest.empty()) {
      if (rest.front() != '/') return std::nullopt;
      auto dv = parse_plain(rest.substr(1));
      if (!dv || *dv == 0.0) return std::nullopt;
      d = *dv;
    }
    return sign * c * value / d;
  }
  return std::nullopt;
}

struct LayerSpec {
  std::optional<Vec2> e1, e2;
  std::vector<FourierTerm> terms;
  int line{0};
};

}  // namespace detail

inline Error parse_error(int line, const std::string& msg) {
  return Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + msg);
}

/// Parse a potential definition; errors carry 1-based line numbers.
inline SuperpositionPotential parse_potential_config(const std::string& text) {
  detail::LayerSpec layers[2];
  double alpha = 0.0;
  Vec2 shift{};
  std::string combiner_kind = "sum";
  std::vector<double> combiner_args;
  int combiner_line = 0;
  std::optional<std::array<double, 3>> table_v, table_u;
  std::vector<std::vector<double>> table_rows;

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const auto eq = raw.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string{};
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    if (trim(raw).empty()) continue;
    if (eq == std::string::npos) throw parse_error(lineno, "expected 'key = value'");
    const std::string key = trim(raw.substr(0, eq));
    std::istringstream vs(raw.substr(eq + 1));
    std::vector<std::string> toks;
    for (std::string t; vs >> t;) toks.push_back(t);

    auto numbers = [&](std::size_t from = 0) {
      std::vector<double> out;
      for (std::size_t k = from; k < toks.size(); ++k) {
        auto v = detail::parse_number(toks[k]);
        if (!v) throw parse_error(lineno, "'" + toks[k] + "' is not a number (key '" + key + "')");
        out.push_back(*v);
      }
      return out;
    };
    auto expect = [&](const std::vector<double>& v, std::size_t lo, std::size_t hi) {
      if (v.size() < lo || v.size() > hi)
        throw parse_error(lineno, "key '" + key + "' takes " + std::to_string(lo) +
                                      (lo == hi ? "" : "-" + std::to_string(hi)) + " values, got " +
                                      std::to_string(v.size()));
    };
    auto as_int = [&](double v) {
      if (v != std::floor(v)) throw parse_error(lineno, "Fourier indices must be integers");
      return static_cast<int>(v);
    };

    if (key.size() > 2 && (key[0] == 'v' || key[0] == 'u') && key[1] == '.') {
      detail::LayerSpec& layer = layers[key[0] == 'u'];
      const std::string sub = key.substr(2);
      layer.line = lineno;
      if (sub == "e1" || sub == "e2") {
        const auto v = numbers();
        expect(v, 2, 2);
        (sub == "e1" ? layer.e1 : layer.e2) = Vec2{v[0], v[1]};
      } else if (sub == "term") {
        const auto v = numbers();
        expect(v, 3, 4);
        layer.terms.push_back({as_int(v[0]), as_int(v[1]), v[2], v.size() > 3 ? v[3] : 0.0});
      } else if (sub == "preset") {
        if (toks.empty()) throw parse_error(lineno, "preset needs a name");
        const auto v = numbers(1);
        expect(v, 1, 2);
        const double amp = v.size() > 1 ? v[1] : 1.0;
        if (toks[0] == "square") {
          layer.e1 = Vec2{v[0], 0.0};
          layer.e2 = Vec2{0.0, v[0]};
          layer.terms.push_back({1, 0, amp, 0.0});
          layer.terms.push_back({0, 1, amp, 0.0});
        } else if (toks[0] == "hexagonal") {
          layer.e1 = Vec2{v[0], 0.0};
          layer.e2 = Vec2{0.5 * v[0], 0.5 * std::numbers::sqrt3 * v[0]};
          layer.terms.push_back({1, 0, amp, 0.0});
          layer.terms.push_back({0, 1, amp, 0.0});
          layer.terms.push_back({1, 1, amp, 0.0});
        } else {
          throw parse_error(lineno, "unknown preset '" + toks[0] + "' (square | hexagonal)");
        }
      } else {
        throw parse_error(lineno, "unknown key '" + key + "'");
      }
    } else if (key == "alpha") {
      const auto v = numbers();
      expect(v, 1, 1);
      alpha = v[0];
    } else if (key == "shift") {
      const auto v = numbers();
      expect(v, 2, 2);
      shift = {v[0], v[1]};
    } else if (key == "combiner") {
      if (toks.empty()) throw parse_error(lineno, "combiner needs a kind");
      combiner_kind = toks[0];
      combiner_args = numbers(1);
      combiner_line = lineno;
    } else if (key == "table.v" || key == "table.u") {
      const auto v = numbers();
      expect(v, 3, 3);
      (key == "table.v" ? table_v : table_u) = std::array<double, 3>{v[0], v[1], v[2]};
    } else if (key == "table.row") {
      table_rows.push_back(numbers());
    } else {
      throw parse_error(lineno, "unknown key '" + key + "'");
    }
  }

  auto build_layer = [&](const detail::LayerSpec& l, const char* name) {
    if (!l.e1 || !l.e2) throw parse_error(l.line, std::string("layer ") + name + " needs e1 and e2");
    if (l.terms.empty()) throw parse_error(l.line, std::string("layer ") + name + " has no Fourier terms");
    try {
      return PeriodicPotential(Lattice2(*l.e1, *l.e2), l.terms);
    } catch (const Error& e) {
      throw parse_error(l.line, std::string("layer ") + name + ": " + e.what());
    }
  };
  std::optional<PeriodicPotential> v, u;
  if (layers[0].line == 0) throw parse_error(lineno, "missing layer v");
  if (layers[1].line == 0) throw parse_error(lineno, "missing layer u");
  v = build_layer(layers[0], "v");
  u = build_layer(layers[1], "u");

  Combiner q = combiner::Sum{};
  if (combiner_kind == "sum") {
    if (!combiner_args.empty()) throw parse_error(combiner_line, "sum takes no arguments");
  } else if (combiner_kind == "product") {
    if (!combiner_args.empty()) throw parse_error(combiner_line, "product takes no arguments");
    q = combiner::Product{};
  } else if (combiner_kind == "weighted") {
    if (combiner_args.size() != 2) throw parse_error(combiner_line, "weighted takes two weights");
    q = combiner::WeightedSum{combiner_args[0], combiner_args[1]};
  } else if (combiner_kind == "table") {
    if (!table_v || !table_u) throw parse_error(combiner_line, "table combiner needs table.v and table.u");
    const auto nv = static_cast<std::size_t>((*table_v)[2]);
    const auto nu = static_cast<std::size_t>((*table_u)[2]);
    if (table_rows.size() != nv) throw parse_error(combiner_line, "table needs " + std::to_string(nv) + " rows");
    std::vector<double> values;
    for (const auto& r : table_rows) {
      if (r.size() != nu) throw parse_error(combiner_line, "each table row needs " + std::to_string(nu) + " values");
      values.insert(values.end(), r.begin(), r.end());
    }
    try {
      q = combiner::TableLookup((*table_v)[0], (*table_v)[1], (*table_u)[0], (*table_u)[1], nv, nu, values);
    } catch (const Error& e) {
      throw parse_error(combiner_line, e.what());
    }
  } else {
    throw parse_error(combiner_line, "unknown combiner '" + combiner_kind + "'");
  }
  return {*v, *u, EuclideanTransform(alpha, shift), q};
}

inline SuperpositionPotential load_potential_config(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_potential_config(text);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

/// Inverse of parse_potential_config (all numbers at 17 significant digits).
inline std::string potential_config_text(const SuperpositionPotential& f) {
  std::string out;
  auto layer = [&](const PeriodicPotential& p, char name) {
    const std::string n(1, name);
    out += n + ".e1 = " + format_double(p.lattice().e1().x) + " " + format_double(p.lattice().e1().y) + "\n";
    out += n + ".e2 = " + format_double(p.lattice().e2().x) + " " + format_double(p.lattice().e2().y) + "\n";
    for (const auto& t : p.terms())
      out += n + ".term = " + std::to_string(t.n1) + " " + std::to_string(t.n2) + " " + format_double(t.amplitude) +
             " " + format_double(t.phase) + "\n";
  };
  layer(f.v(), 'v');
  layer(f.u(), 'u');
  out += "alpha = " + format_double(f.transform().alpha()) + "\n";
  out += "shift = " + format_double(f.transform().shift().x) + " " + format_double(f.transform().shift().y) + "\n";
  struct Visitor {
    std::string& out;
    void operator()(const combiner::Sum&) const { out += "combiner = sum\n"; }
    void operator()(const combiner::Product&) const { out += "combiner = product\n"; }
    void operator()(const combiner::WeightedSum& w) const {
      out += "combiner = weighted " + format_double(w.c1) + " " + format_double(w.c2) + "\n";
    }
    void operator()(const combiner::TableLookup& t) const {
      out += "combiner = table\n";
      out += "table.v = " + format_double(t.v_lo()) + " " + format_double(t.v_hi()) + " " + std::to_string(t.nv()) + "\n";
      out += "table.u = " + format_double(t.u_lo()) + " " + format_double(t.u_hi()) + " " + std::to_string(t.nu()) + "\n";
      for (std::size_t i = 0; i < t.nv(); ++i) {
        out += "table.row =";
        for (std::size_t j = 0; j < t.nu(); ++j) out += " " + format_double(t.at(i, j));
        out += "\n";
      }
    }
  };
  std::visit(Visitor{out}, f.combiner());
  return out;
}

}  // namespace moire
