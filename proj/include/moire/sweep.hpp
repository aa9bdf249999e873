#pragma once
/**
 * @file sweep.hpp
 * @brief Twist-angle sweeps and Stability Zone detection.
 *
 * Each sampled angle is classified at a few random shifts of the transformed
 * layer. A point is Regular only when every shift is Regular with the same
 * quadruple; zones are maximal runs of such points, with boundaries refined
 * by bisection in the angle when a re-classifier is supplied. Nothing is
 * interpolated between samples, so thin zones can hide in the complement.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "moire/classifier.hpp"
#include "moire/error.hpp"
#include "moire/parallel.hpp"
#include "moire/potential.hpp"
#include "moire/tracer.hpp"

namespace moire {

enum class LevelStrategy { Fixed, IntervalMidpoint };

struct SweepConfig {
  double alpha_start{0.0};
  double alpha_end{0.5 * std::numbers::pi};
  std::size_t alpha_count{64};
  std::size_t shifts_per_alpha{3};
  LevelStrategy level_strategy{LevelStrategy::IntervalMidpoint};
  double fixed_level{0.0};
  std::optional<TraceBudget> budget;  ///< unset: TraceBudget::defaults_for
  std::optional<Window> window;       ///< unset: default_window
  ClassifierOptions classifier{};
  std::uint64_t seed{1};
  std::size_t workers{0};
  int commensurability_bound{12};
  double commensurability_tol{1e-8};

  void validate() const {
    if (alpha_count < 2) throw Error(ErrorKind::InvalidArgument, "alpha count must be >= 2");
    if (!(alpha_end > alpha_start)) throw Error(ErrorKind::InvalidArgument, "alpha range is empty");
    if (shifts_per_alpha < 1) throw Error(ErrorKind::InvalidArgument, "need at least one shift per angle");
  }

  double alpha_at(std::size_t k) const {
    return alpha_start + (alpha_end - alpha_start) * static_cast<double>(k) / static_cast<double>(alpha_count - 1);
  }
};

/// Deterministic uniform doubles in [0, 1) independent of the standard library's distributions.
class SampleStream {
 public:
  SampleStream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    rng_.seed(seq);
  }
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 rng_;
};

/// Shifts spread over one cell of the transformed layer's lattice.
inline std::vector<Vec2> sample_shifts(const Lattice2& lat_u, std::size_t n, std::uint64_t seed,
                                       std::uint64_t stream) {
  SampleStream s(seed, stream);
  std::vector<Vec2> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double r1 = s.uniform();
    const double r2 = s.uniform();
    out.push_back(lat_u.point(r1, r2));
  }
  return out;
}

struct SweepPoint {
  double alpha{0.0};
  std::size_t index{0};
  bool periodic{false};
  std::optional<EnergyInterval> interval;
  double level{0.0};
  std::vector<ShiftSample> shifts;
  Verdict verdict{Verdict::Undetermined};
  std::optional<Quadruple> quadruple;
  double mean_width{0.0};
  std::string note;
};

struct SweepResult {
  SweepConfig config;
  std::vector<SweepPoint> points;
};

/// Verdict for one angle from its shift samples.
inline void aggregate_point(SweepPoint& p) {
  p.verdict = Verdict::Undetermined;
  p.quadruple.reset();
  p.mean_width = 0.0;
  bool all_regular = !p.shifts.empty();
  bool any_chaotic = false;
  std::optional<Quadruple> q;
  bool disagree = false;
  for (const auto& s : p.shifts) {
    const auto& c = s.classification;
    if (c.verdict == Verdict::Chaotic) any_chaotic = true;
    if (!c.regular()) {
      all_regular = false;
      continue;
    }
    if (q && !(*q == *c.quadruple)) disagree = true;
    q = c.quadruple;
  }
  if (all_regular && !disagree) {
    p.verdict = Verdict::Regular;
    p.quadruple = q;
    double w = 0.0;
    for (const auto& s : p.shifts) w += s.classification.strip_width;
    p.mean_width = w / static_cast<double>(p.shifts.size());
  } else if (any_chaotic) {
    p.verdict = Verdict::Chaotic;
  } else if (disagree) {
    p.note = "shift samples disagree on the quadruple";
  } else if (p.note.empty()) {
    p.note = "no consistent verdict across shifts";
  }
}

/// Classify the superposition at one angle (index selects the shift stream).
inline SweepPoint classify_angle(const SuperpositionPotential& base, double alpha, std::uint64_t stream,
                                 const SweepConfig& cfg) {
  SweepPoint p;
  p.alpha = alpha;
  const SuperpositionPotential rotated = base.with_alpha(alpha);
  const TraceBudget budget = cfg.budget.value_or(TraceBudget::defaults_for(rotated));
  const Window window = cfg.window.value_or(default_window(rotated));
  p.periodic = is_commensurate(base.v().lattice(), base.u().lattice(), rotated.transform(),
                               cfg.commensurability_bound, cfg.commensurability_tol)
                   .has_value();
  if (p.periodic) p.note = "periodic potential at this angle";
  const auto shifts = sample_shifts(base.u().lattice(), cfg.shifts_per_alpha, cfg.seed, stream);
  const auto [vmin, vmax] = rotated.value_bounds();
  const double pad = 1e-3 * (vmax - vmin);
  try {
    if (cfg.level_strategy == LevelStrategy::Fixed) {
      p.level = cfg.fixed_level;
    } else {
      p.interval = energy_interval(rotated.with_shift(shifts.front()), window, budget, vmin - pad, vmax + pad,
                                   cfg.classifier.level_tol);
      p.level = p.interval->midpoint();
    }
  } catch (const Error& e) {
    p.note = e.what();
    return p;
  }
  for (const Vec2& a : shifts) {
    ShiftSample s;
    s.shift = a;
    s.level = p.level;
    s.interval = p.interval;
    try {
      s.classification = classify_level(rotated.with_shift(a), p.level, window, budget, cfg.classifier);
    } catch (const Error& e) {
      s.error = e.what();
      s.classification.verdict = Verdict::Undetermined;
      s.classification.reason = e.what();
    }
    p.shifts.push_back(std::move(s));
  }
  aggregate_point(p);
  return p;
}

/// Classify every grid angle. Per-angle failures are recorded in place.
inline SweepResult sweep_angle(const SweepConfig& cfg, const PeriodicPotential& v, const PeriodicPotential& u,
                               const Combiner& q = combiner::Sum{}) {
  cfg.validate();
  const SuperpositionPotential base(v, u, EuclideanTransform(0.0), q);
  SweepResult r;
  r.config = cfg;
  r.points.resize(cfg.alpha_count);
  parallel_for(cfg.alpha_count, cfg.workers, [&](std::size_t k) {
    r.points[k] = classify_angle(base, cfg.alpha_at(k), k, cfg);
    r.points[k].index = k;
  });
  return r;
}

/// Re-classification of a single angle, used for boundary refinement and spot checks.
struct AngleVerdict {
  Verdict verdict{Verdict::Undetermined};
  std::optional<Quadruple> quadruple;
};
using AngleClassifier = std::function<AngleVerdict(double alpha)>;

/// Angle classifier over a fresh shift stream per call, numbered from `stream_base`.
inline AngleClassifier make_angle_classifier(const SuperpositionPotential& base, const SweepConfig& cfg,
                                             std::uint64_t stream_base = 1u << 20) {
  auto counter = std::make_shared<std::uint64_t>(stream_base);
  return [base, cfg, counter](double alpha) {
    const SweepPoint p = classify_angle(base, alpha, (*counter)++, cfg);
    return AngleVerdict{p.verdict, p.quadruple};
  };
}

struct RefinementSample {
  double alpha{0.0};
  AngleVerdict verdict;
};

struct StabilityZone {
  double alpha_lo{0.0};
  double alpha_hi{0.0};
  Quadruple quadruple;
  std::vector<std::size_t> samples;  ///< indices into SweepResult::points
  double mean_width{0.0};
  /// Outermost angles known not to belong to the zone (equal to alpha_lo/hi at the sweep ends).
  double outer_lo{0.0};
  double outer_hi{0.0};
  int refine_steps{0};
};

struct ComplementInterval {
  double lo{0.0};
  double hi{0.0};
};

struct ZoneDetection {
  double range_lo{0.0};
  double range_hi{0.0};
  double refine_tol{0.0};
  std::vector<StabilityZone> zones;
  std::vector<ComplementInterval> complement;
  std::vector<RefinementSample> refinements;

  double complement_measure() const {
    double m = 0.0;
    for (const auto& c : complement) m += c.hi - c.lo;
    return m;
  }
  double zone_measure() const {
    double m = 0.0;
    for (const auto& z : zones) m += z.alpha_hi - z.alpha_lo;
    return m;
  }
};

/// Bisect between an angle inside the zone and one outside; returns the refined inside angle.
/// `outside` is updated to the refined outside angle. Each step halves |inside - outside|.
inline double refine_boundary(double inside, double& outside, const Quadruple& q, double tol,
                              const AngleClassifier& classify_at, std::vector<RefinementSample>& log,
                              int& steps) {
  while (std::abs(outside - inside) > tol) {
    const double mid = 0.5 * (inside + outside);
    const AngleVerdict v = classify_at(mid);
    log.push_back({mid, v});
    ++steps;
    if (v.verdict == Verdict::Regular && v.quadruple && *v.quadruple == q) inside = mid;
    else outside = mid;
  }
  return inside;
}

/**
 * Maximal runs of consecutive Regular points sharing a quadruple. With a
 * classifier, each interior boundary is bisected to refine_tol; the
 * complement is what lies between zones (and at the ends of the range).
 */
inline ZoneDetection detect_zones(const SweepResult& result, double refine_tol,
                                  const AngleClassifier& classify_at = nullptr) {
  if (result.points.empty()) throw Error(ErrorKind::InvalidArgument, "empty sweep result");
  std::vector<std::size_t> order(result.points.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return result.points[a].alpha < result.points[b].alpha; });
  const auto& pts = result.points;

  ZoneDetection det;
  det.range_lo = pts[order.front()].alpha;
  det.range_hi = pts[order.back()].alpha;
  det.refine_tol = refine_tol;

  for (std::size_t a = 0; a < order.size();) {
    const SweepPoint& p = pts[order[a]];
    if (p.verdict != Verdict::Regular || !p.quadruple) {
      ++a;
      continue;
    }
    std::size_t b = a;
    while (b + 1 < order.size() && pts[order[b + 1]].verdict == Verdict::Regular && pts[order[b + 1]].quadruple &&
           *pts[order[b + 1]].quadruple == *p.quadruple)
      ++b;
    StabilityZone z;
    z.quadruple = *p.quadruple;
    z.alpha_lo = p.alpha;
    z.alpha_hi = pts[order[b]].alpha;
    z.outer_lo = a > 0 ? pts[order[a - 1]].alpha : z.alpha_lo;
    z.outer_hi = b + 1 < order.size() ? pts[order[b + 1]].alpha : z.alpha_hi;
    double w = 0.0;
    for (std::size_t k = a; k <= b; ++k) {
      z.samples.push_back(order[k]);
      w += pts[order[k]].mean_width;
    }
    z.mean_width = w / static_cast<double>(b - a + 1);
    if (classify_at && refine_tol > 0.0) {
      if (a > 0)
        z.alpha_lo = refine_boundary(z.alpha_lo, z.outer_lo, z.quadruple, refine_tol, classify_at, det.refinements,
                                     z.refine_steps);
      if (b + 1 < order.size())
        z.alpha_hi = refine_boundary(z.alpha_hi, z.outer_hi, z.quadruple, refine_tol, classify_at, det.refinements,
                                     z.refine_steps);
    }
    det.zones.push_back(std::move(z));
    a = b + 1;
  }

  double cursor = det.range_lo;
  for (const auto& z : det.zones) {
    if (z.alpha_lo > cursor) det.complement.push_back({cursor, z.alpha_lo});
    cursor = z.alpha_hi;
  }
  if (cursor < det.range_hi || det.zones.empty()) det.complement.push_back({cursor, det.range_hi});
  return det;
}

struct SoundnessCheck {
  std::size_t zone{0};
  double alpha{0.0};
  AngleVerdict verdict;
  bool passed{false};
};

/// Re-classify one seeded random angle strictly inside each zone of positive width.
inline std::vector<SoundnessCheck> check_zone_soundness(const ZoneDetection& det, const AngleClassifier& classify_at,
                                                        std::uint64_t seed) {
  std::vector<SoundnessCheck> out;
  SampleStream s(seed, 0x5eed);
  for (std::size_t k = 0; k < det.zones.size(); ++k) {
    const auto& z = det.zones[k];
    if (!(z.alpha_hi > z.alpha_lo)) continue;
    const double t = 0.05 + 0.9 * s.uniform();
    SoundnessCheck c;
    c.zone = k;
    c.alpha = z.alpha_lo + t * (z.alpha_hi - z.alpha_lo);
    c.verdict = classify_at(c.alpha);
    c.passed = c.verdict.verdict == Verdict::Regular && c.verdict.quadruple && *c.verdict.quadruple == z.quadruple;
    out.push_back(c);
  }
  return out;
}

}  // namespace moire
