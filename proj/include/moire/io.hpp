#pragma once
/**
 * @file io.hpp
 * @brief Fixed numeric formatting, a deterministic JSON writer, and
 * CSV / SVG export of level lines.
 *
 * Every float written by this library goes through format_double (17
 * significant digits), so outputs are byte-comparable across runs.
 */

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "moire/error.hpp"
#include "moire/tracer.hpp"

namespace moire {

using json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void write_json_string(std::ostream& os, const std::string& s) {
  os << json(s).dump();
}

inline void write_json(std::ostream& os, const json& j, int indent, int depth) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string pad_close = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) { os << "{}"; return; }
      os << "{" << nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << "," << nl;
        first = false;
        os << pad;
        write_json_string(os, it.key());
        os << (indent > 0 ? ": " : ":");
        write_json(os, it.value(), indent, depth + 1);
      }
      os << nl << pad_close << "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) { os << "[]"; return; }
      os << "[" << nl;
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k) os << "," << nl;
        os << pad;
        write_json(os, j[k], indent, depth + 1);
      }
      os << nl << pad_close << "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (std::isfinite(v)) os << format_double(v);
      else os << "null";
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace detail

/// JSON text with floats at 17 significant digits.
inline std::string to_json_text(const json& j, int indent = 2) {
  std::ostringstream os;
  detail::write_json(os, j, indent, 0);
  os << "\n";
  return os.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// 64-bit FNV-1a, used to fingerprint config files.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Header `x,y`, one vertex per row.
inline std::string polyline_csv(const LevelLine& line) {
  std::string out = "x,y\n";
  for (const auto& p : line.points) out += format_double(p.x) + "," + format_double(p.y) + "\n";
  return out;
}

/// One <path> per line; closed lines end with Z. Level and status are data-* attributes.
inline std::string lines_svg(const std::vector<LevelLine>& lines, double margin = 1.0) {
  double x0 = INFINITY, y0 = INFINITY, x1 = -INFINITY, y1 = -INFINITY;
  for (const auto& l : lines)
    for (const auto& p : l.points) {
      x0 = std::min(x0, p.x);
      y0 = std::min(y0, p.y);
      x1 = std::max(x1, p.x);
      y1 = std::max(y1, p.y);
    }
  if (!(x1 >= x0)) x0 = y0 = 0.0, x1 = y1 = 1.0;
  x0 -= margin, y0 -= margin, x1 += margin, y1 += margin;
  const double w = x1 - x0, h = y1 - y0;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + format_double(x0) + " " +
                    format_double(-y1) + " " + format_double(w) + " " + format_double(h) + "\">\n";
  const double stroke = 0.002 * std::max(w, h);
  for (const auto& l : lines) {
    out += "<path data-level=\"" + format_double(l.level) + "\" data-status=\"" + to_string(l.status) +
           "\" data-arc-length=\"" + format_double(l.arc_length) + "\" fill=\"none\" stroke=\"black\" stroke-width=\"" +
           format_double(stroke) + "\" d=\"";
    const std::size_t n = l.closed() && l.points.size() > 1 ? l.points.size() - 1 : l.points.size();
    for (std::size_t k = 0; k < n; ++k) {
      out += (k == 0 ? "M" : " L");
      out += format_double(l.points[k].x) + " " + format_double(-l.points[k].y);
    }
    if (l.closed()) out += " Z";
    out += "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace moire
