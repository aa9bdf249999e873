#pragma once
/**
 * @file classifier.hpp
 * @brief Regular / chaotic verdicts for open level lines and the integer
 * quadruples labelling their mean directions.
 *
 * A mean direction l is annihilated by G = m1 v'1 + m2 v'2 + m3 u'1 + m4 u'2,
 * where (v'1, v'2) is reciprocal to the fixed layer and (u'1, u'2) to the
 * in-plane periods of the transformed layer.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "moire/error.hpp"
#include "moire/geometry.hpp"
#include "moire/parallel.hpp"
#include "moire/potential.hpp"
#include "moire/tracer.hpp"

namespace moire {

struct Quadruple {
  std::array<int, 4> m{};

  constexpr bool operator==(const Quadruple&) const = default;

  int max_norm() const {
    int n = 0;
    for (int v : m) n = std::max(n, std::abs(v));
    return n;
  }
  int l1_norm() const {
    int n = 0;
    for (int v : m) n += std::abs(v);
    return n;
  }
  bool is_zero() const { return max_norm() == 0; }
  int gcd() const {
    int g = 0;
    for (int v : m) g = std::gcd(g, std::abs(v));
    return g;
  }
  bool irreducible() const { return gcd() == 1; }
  bool sign_normalized() const {
    for (int v : m)
      if (v != 0) return v > 0;
    return false;
  }
  /// Divide by the gcd and make the first nonzero entry positive.
  Quadruple normalized() const {
    Quadruple q = *this;
    const int g = gcd();
    if (g == 0) return q;
    int sign = 1;
    for (int v : m)
      if (v != 0) {
        sign = v > 0 ? 1 : -1;
        break;
      }
    for (int& v : q.m) v = sign * v / g;
    return q;
  }
  std::string str() const {
    return "(" + std::to_string(m[0]) + "," + std::to_string(m[1]) + "," + std::to_string(m[2]) + "," +
           std::to_string(m[3]) + ")";
  }
};

/**
 * Total order used to pick one annihilator among ties: smaller max-norm, then
 * smaller L1 norm, then lexicographically larger (|m1|, |m2|, |m3|, |m4|),
 * then lexicographically larger (m1, m2, m3, m4). Returns true when a precedes b.
 */
inline bool quadruple_precedes(const Quadruple& a, const Quadruple& b) {
  if (a.max_norm() != b.max_norm()) return a.max_norm() < b.max_norm();
  if (a.l1_norm() != b.l1_norm()) return a.l1_norm() < b.l1_norm();
  for (int k = 0; k < 4; ++k)
    if (std::abs(a.m[k]) != std::abs(b.m[k])) return std::abs(a.m[k]) > std::abs(b.m[k]);
  for (int k = 0; k < 4; ++k)
    if (a.m[k] != b.m[k]) return a.m[k] > b.m[k];
  return false;
}

/// The four reciprocal vectors (v'1, v'2, u'1, u'2).
inline std::array<Vec2, 4> reciprocal_quartet(const Lattice2& lat_v, const Lattice2& lat_u_plane) {
  const Lattice2 rv = reciprocal_basis(lat_v);
  const Lattice2 ru = reciprocal_basis(lat_u_plane);
  return {rv.e1(), rv.e2(), ru.e1(), ru.e2()};
}

inline Vec2 annihilator(const Quadruple& q, const std::array<Vec2, 4>& r) {
  Vec2 g;
  for (int k = 0; k < 4; ++k) g += r[k] * static_cast<double>(q.m[k]);
  return g;
}

/**
 * Exhaustive search over |m_i| <= max_norm, shell by shell in max-norm, for the
 * irreducible sign-normalized quadruple with |G . l| < tol |G| that comes first
 * in quadruple_precedes order. A vanishing G never qualifies.
 */
inline std::optional<Quadruple> recover_quadruple(const Vec2& l, const Lattice2& lat_v,
                                                  const Lattice2& lat_u_plane, int max_norm, double tol) {
  if (max_norm < 1) throw Error(ErrorKind::InvalidArgument, "quadruple bound must be >= 1");
  const Vec2 dir = normalized(l);
  const auto r = reciprocal_quartet(lat_v, lat_u_plane);
  std::array<double, 4> c{};
  for (int k = 0; k < 4; ++k) c[k] = dot(r[k], dir);

  for (int n = 1; n <= max_norm; ++n) {
    std::optional<Quadruple> best;
    for (int a = 0; a <= n; ++a)
      for (int b = -n; b <= n; ++b)
        for (int d = -n; d <= n; ++d)
          for (int e = -n; e <= n; ++e) {
            const Quadruple q{{a, b, d, e}};
            if (q.max_norm() != n || !q.sign_normalized() || !q.irreducible()) continue;
            const double s = a * c[0] + b * c[1] + d * c[2] + e * c[3];
            const double gx = a * r[0].x + b * r[1].x + d * r[2].x + e * r[3].x;
            const double gy = a * r[0].y + b * r[1].y + d * r[2].y + e * r[3].y;
            // Angular test: |G . l| / |G| is the sine of the angle between l and the line G annihilates.
            if (!(std::abs(s) < tol * std::hypot(gx, gy))) continue;
            if (!best || quadruple_precedes(q, *best)) best = q;
          }
    if (best) return best;
  }
  return std::nullopt;
}

/// l = G rotated counterclockwise by 90 degrees, normalized.
inline Vec2 direction_from_quadruple(const Quadruple& q, const Lattice2& lat_v, const Lattice2& lat_u_plane) {
  const auto r = reciprocal_quartet(lat_v, lat_u_plane);
  const Vec2 g = annihilator(q, r);
  double scale = 0.0;
  for (const auto& v : r) scale = std::max(scale, norm(v));
  if (norm(g) <= 1e-12 * scale * std::max(1, q.l1_norm()))
    throw Error(ErrorKind::ZeroAnnihilator, "quadruple " + q.str() + " annihilates the reciprocal vectors");
  return normalized(perp(g));
}

struct DirectionFit {
  Vec2 direction;
  double residual{0.0};  ///< RMS transverse deviation about the mean
};

/// Minimum vertex count accepted by fit_direction.
inline constexpr std::size_t kMinFitVertices = 100;

/// Principal axis of the vertex cloud, oriented along last - first.
inline DirectionFit fit_direction(std::span<const Vec2> pts) {
  if (pts.size() < kMinFitVertices)
    throw Error(ErrorKind::TooShortLine, "direction fit needs at least " + std::to_string(kMinFitVertices) +
                                             " vertices, got " + std::to_string(pts.size()));
  Vec2 mean;
  for (const auto& p : pts) mean += p;
  mean = mean / static_cast<double>(pts.size());
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : pts) {
    const Vec2 d = p - mean;
    sxx += d.x * d.x;
    sxy += d.x * d.y;
    syy += d.y * d.y;
  }
  // Major axis of the 2x2 covariance: angle = atan2(2 sxy, sxx - syy) / 2.
  const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  Vec2 dir{std::cos(theta), std::sin(theta)};
  if (dot(dir, pts.back() - pts.front()) < 0.0) dir = -dir;
  const Vec2 n = perp(dir);
  double ss = 0.0;
  for (const auto& p : pts) {
    const double t = dot(p - mean, n);
    ss += t * t;
  }
  return {dir, std::sqrt(ss / static_cast<double>(pts.size()))};
}

inline DirectionFit fit_direction(const LevelLine& line) {
  if (line.closed()) throw Error(ErrorKind::TooShortLine, "direction fit needs an open line");
  return fit_direction(std::span<const Vec2>(line.points));
}

/// Peak-to-peak extent of the vertices across `direction`.
inline double strip_width(std::span<const Vec2> pts, const Vec2& direction) {
  if (pts.empty()) return 0.0;
  const Vec2 n = perp(direction);
  double lo = dot(pts.front(), n), hi = lo;
  for (const auto& p : pts) {
    const double t = dot(p, n);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  return hi - lo;
}

inline double strip_width(const LevelLine& line, const Vec2& direction) {
  return strip_width(std::span<const Vec2>(line.points), direction);
}

/// Largest vertex-to-vertex distance.
inline double diameter(std::span<const Vec2> pts) {
  double d2 = 0.0;
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      const Vec2 d = pts[a] - pts[b];
      d2 = std::max(d2, dot(d, d));
    }
  return std::sqrt(d2);
}

enum class Verdict { Regular, Chaotic, Closed, Undetermined };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Regular: return "Regular";
    case Verdict::Chaotic: return "Chaotic";
    case Verdict::Closed: return "Closed";
    case Verdict::Undetermined: return "Undetermined";
  }
  return "?";
}

struct WidthSample {
  double arc_length{0.0};
  double width{0.0};
};

/// Regular carries quadruple/direction/strip_width/residual; Chaotic and Regular
/// carry widths; Closed carries diameter; Undetermined carries reason.
struct Classification {
  Verdict verdict{Verdict::Undetermined};
  double level{0.0};
  std::optional<Quadruple> quadruple;
  Vec2 direction{};
  double strip_width{0.0};
  double residual{0.0};
  double diameter{0.0};
  std::vector<WidthSample> widths;
  std::string reason;

  bool regular() const { return verdict == Verdict::Regular; }
};

struct ClassifierOptions {
  double tau_sat{0.15};
  double k_grow{1.8};
  int max_norm{12};
  /// Angular tolerance for |G . l| / |G|; unset means 2 x fit residual / arc length.
  std::optional<double> quadruple_tol;
  /// Resolution of energy-interval bisection.
  double level_tol{1e-3};
};

/**
 * Verdict from three nested traces of one line (lengths L, 2L, 4L). Widths are
 * measured across the direction fitted to the longest trace.
 */
inline Classification classify_extension(const LevelLine& l1, const LevelLine& l2, const LevelLine& l4,
                                         const Lattice2& lat_v, const Lattice2& lat_u_plane,
                                         const ClassifierOptions& opt = {}) {
  Classification c;
  c.level = l1.level;
  for (const LevelLine* l : {&l1, &l2, &l4}) {
    if (l->closed()) {
      c.verdict = Verdict::Closed;
      c.diameter = diameter(l->points);
      return c;
    }
  }
  const DirectionFit fit = fit_direction(l4);
  c.direction = fit.direction;
  c.residual = fit.residual;
  for (const LevelLine* l : {&l1, &l2, &l4}) c.widths.push_back({l->arc_length, strip_width(*l, fit.direction)});
  const double w1 = c.widths.front().width;
  const double w4 = c.widths.back().width;
  c.strip_width = w4;
  if (w4 <= w1 * (1.0 + opt.tau_sat)) {
    const double tol = opt.quadruple_tol.value_or(2.0 * fit.residual / l4.arc_length);
    c.quadruple = recover_quadruple(fit.direction, lat_v, lat_u_plane, opt.max_norm, tol);
    if (c.quadruple) {
      c.verdict = Verdict::Regular;
    } else {
      c.reason = "strip width saturated but no quadruple with max-norm <= " + std::to_string(opt.max_norm);
    }
  } else if (w4 >= opt.k_grow * w1) {
    c.verdict = Verdict::Chaotic;
  } else {
    c.reason = "strip-width growth inside the abstention band";
  }
  return c;
}

/// Retrace `line` from its seed at 2L and 4L and apply classify_extension.
inline Classification classify(const SuperpositionPotential& f, const LevelLine& line, const TraceBudget& budget,
                               const ClassifierOptions& opt = {}) {
  if (line.closed()) {
    Classification c;
    c.verdict = Verdict::Closed;
    c.level = line.level;
    c.diameter = diameter(line.points);
    return c;
  }
  const double requested = line.level - line.jitter;
  const TraceBudget b1 = budget;
  const LevelLine l2 = trace_level_line(f, line.seed, requested, b1.scaled_length(2.0));
  const LevelLine l4 = trace_level_line(f, line.seed, requested, b1.scaled_length(4.0));
  return classify_extension(line, l2, l4, f.v().lattice(), f.plane_lattice_u(), opt);
}

/// First open line among the seeds of `window` at `level`, classified; Closed if none is open.
inline Classification classify_level(const SuperpositionPotential& f, double level, const Window& window,
                                     const TraceBudget& budget, const ClassifierOptions& opt = {}) {
  const auto seeds = find_seeds(f, level, window, budget.cell_size);
  Classification closed;
  closed.verdict = Verdict::Closed;
  closed.level = level;
  if (seeds.empty()) {
    closed.verdict = Verdict::Undetermined;
    closed.reason = "no level crossings in the window";
    return closed;
  }
  for (const Vec2& s : seeds) {
    LevelLine line;
    try {
      line = trace_level_line(f, s, level, budget);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::SeedNotOnLevel) continue;
      throw;
    }
    if (line.open()) return classify(f, line, budget, opt);
    closed.diameter = std::max(closed.diameter, diameter(line.points));
  }
  return closed;
}

struct ShiftSample {
  Vec2 shift;
  std::optional<EnergyInterval> interval;
  double level{0.0};
  Classification classification;
  std::string error;
};

struct ShiftFamilyReport {
  bool skipped{false};
  std::string notice;
  std::vector<ShiftSample> samples;
  bool quadruples_agree{false};
  bool intervals_agree{false};
  std::optional<Quadruple> quadruple;
};

struct ShiftFamilyOptions {
  ClassifierOptions classifier{};
  std::optional<double> fixed_level;  ///< unset: use each shift's energy-interval midpoint
  int commensurability_bound{12};
  double commensurability_tol{1e-8};
  std::size_t workers{0};  ///< 0 = hardware concurrency
};

/**
 * Classify one open line per shift of the transformed layer at fixed angle and
 * compare quadruples and energy intervals across shifts. Skipped (with a notice)
 * when the superposition is periodic at the configured bound.
 */
inline ShiftFamilyReport shift_family_check(const SuperpositionPotential& base, double alpha,
                                            std::span<const Vec2> shifts, const Window& window,
                                            const TraceBudget& budget, const ShiftFamilyOptions& opt = {}) {
  ShiftFamilyReport rep;
  const SuperpositionPotential rotated = base.with_alpha(alpha);
  if (is_commensurate(base.v().lattice(), base.u().lattice(), rotated.transform(), opt.commensurability_bound,
                      opt.commensurability_tol)) {
    rep.skipped = true;
    rep.notice = "periodic potential: layers are commensurate at this angle";
    return rep;
  }
  rep.samples.resize(shifts.size());
  const auto [vmin, vmax] = base.value_bounds();
  const double pad = 1e-3 * (vmax - vmin);
  parallel_for(shifts.size(), opt.workers, [&](std::size_t k) {
    ShiftSample& s = rep.samples[k];
    s.shift = shifts[k];
    try {
      const SuperpositionPotential f = rotated.with_shift(shifts[k]);
      if (opt.fixed_level) {
        s.level = *opt.fixed_level;
      } else {
        s.interval = energy_interval(f, window, budget, vmin - pad, vmax + pad, opt.classifier.level_tol);
        s.level = s.interval->midpoint();
      }
      s.classification = classify_level(f, s.level, window, budget, opt.classifier);
    } catch (const Error& e) {
      s.error = e.what();
      s.classification.verdict = Verdict::Undetermined;
      s.classification.reason = e.what();
    }
  });

  rep.quadruples_agree = !rep.samples.empty();
  for (const auto& s : rep.samples) {
    const auto& c = s.classification;
    if (!c.regular() || (rep.quadruple && !(*rep.quadruple == *c.quadruple))) {
      rep.quadruples_agree = false;
      break;
    }
    rep.quadruple = c.quadruple;
  }
  if (!rep.quadruples_agree) rep.quadruple.reset();

  rep.intervals_agree = !opt.fixed_level && !rep.samples.empty();
  for (const auto& s : rep.samples) {
    if (!s.interval || !rep.samples.front().interval) {
      rep.intervals_agree = false;
      break;
    }
    const auto& a = *rep.samples.front().interval;
    const auto& b = *s.interval;
    if (std::abs(a.lo - b.lo) > 2.0 * opt.classifier.level_tol ||
        std::abs(a.hi - b.hi) > 2.0 * opt.classifier.level_tol)
      rep.intervals_agree = false;
  }
  return rep;
}

}  // namespace moire
