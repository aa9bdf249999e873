#pragma once
/**
 * @file tracer.hpp
 * @brief Level-line continuation on an unbounded, lazily evaluated grid.
 *
 * The grid has vertices at (i h, j h) for all integers i, j. Vertex values are
 * computed on first touch and cached in fixed-size chunks keyed by chunk
 * coordinates, so a trace costs time linear in its length and memory
 * proportional to the visited region.
 *
 * Lines are oriented with the region f > level on their left. Saddle cells
 * (four crossing edges) are resolved by the sign of f at the cell center:
 * if the center is above the level the above corners are joined through it.
 */

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "moire/error.hpp"
#include "moire/geometry.hpp"
#include "moire/potential.hpp"

namespace moire {

/// Axis-aligned rectangle [lo.x, hi.x] x [lo.y, hi.y].
struct Window {
  Vec2 lo;
  Vec2 hi;

  bool empty() const { return !(hi.x > lo.x && hi.y > lo.y); }
  bool contains(const Vec2& p) const { return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y; }
  Vec2 center() const { return (lo + hi) * 0.5; }

  static Window centered(Vec2 c, double half) { return {{c.x - half, c.y - half}, {c.x + half, c.y + half}}; }
};

struct TraceBudget {
  double cell_size{0.0};
  double max_arc_length{0.0};
  std::size_t max_cells{0};

  /// h = shortest period / 16, L = 200 x longest period.
  static TraceBudget defaults_for(const SuperpositionPotential& f) {
    TraceBudget b;
    b.cell_size = f.shortest_period() / 16.0;
    b.max_arc_length = 200.0 * f.longest_period();
    b.max_cells = default_max_cells(b.cell_size, b.max_arc_length);
    return b;
  }

  static std::size_t default_max_cells(double h, double length) {
    return static_cast<std::size_t>(8.0 * length / h) + 1000;
  }

  TraceBudget scaled_length(double factor) const {
    TraceBudget b = *this;
    b.max_arc_length *= factor;
    b.max_cells = static_cast<std::size_t>(static_cast<double>(max_cells) * factor);
    return b;
  }

  void validate(const SuperpositionPotential& f) const {
    if (!(cell_size > 0.0)) throw Error(ErrorKind::InvalidArgument, "cell size must be positive");
    if (cell_size > f.shortest_period() / 8.0 * (1.0 + 1e-12))
      throw Error(ErrorKind::InvalidArgument, "cell size exceeds 1/8 of the shortest period");
    if (!(max_arc_length > 0.0)) throw Error(ErrorKind::InvalidArgument, "arc-length budget must be positive");
    if (max_cells == 0) throw Error(ErrorKind::InvalidArgument, "cell budget must be positive");
  }
};

enum class LineStatus { Closed, OpenBudgetExhausted, OpenLeftWindow };

inline const char* to_string(LineStatus s) {
  switch (s) {
    case LineStatus::Closed: return "Closed";
    case LineStatus::OpenBudgetExhausted: return "OpenBudgetExhausted";
    case LineStatus::OpenLeftWindow: return "OpenLeftWindow";
  }
  return "?";
}

struct LevelLine {
  double level{0.0};            ///< level actually traced (requested + jitter)
  double jitter{0.0};           ///< nonzero when the requested level hit a grid value
  std::vector<Vec2> points;     ///< closed lines repeat the first vertex at the end
  LineStatus status{LineStatus::Closed};
  double arc_length{0.0};
  Vec2 seed{};
  double cell_size{0.0};

  bool closed() const { return status == LineStatus::Closed; }
  bool open() const { return !closed(); }
};

/// Levels closer than this to a sampled grid value are shifted before tracing.
inline constexpr double kCriticalBand = 1e-9;

namespace detail {

struct Edge {
  std::int64_t i{0};
  std::int64_t j{0};
  bool vertical{false};  ///< vertical: (i,j)-(i,j+1); horizontal: (i,j)-(i+1,j)
  bool operator==(const Edge&) const = default;
};

struct EdgeHash {
  std::size_t operator()(const Edge& e) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(e.i) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(e.j) + 0x7F4A7C159E3779B9ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h ^ (e.vertical ? 0xA5A5A5A5ull : 0ull));
  }
};

using EdgeSet = std::unordered_set<Edge, EdgeHash>;

/// f - level on the integer grid, evaluated lazily in 32x32 chunks.
class LevelGrid {
 public:
  static constexpr int kChunkShift = 5;
  static constexpr std::int64_t kChunk = std::int64_t{1} << kChunkShift;

  LevelGrid(const SuperpositionPotential& f, double level, double h) : f_(&f), level_(level), h_(h) {}

  double h() const { return h_; }
  double level() const { return level_; }
  std::size_t evaluations() const { return evaluations_; }
  double min_abs_value() const { return min_abs_; }

  Vec2 vertex(std::int64_t i, std::int64_t j) const {
    return {static_cast<double>(i) * h_, static_cast<double>(j) * h_};
  }

  double g(std::int64_t i, std::int64_t j) {
    const std::int64_t ci = i >> kChunkShift, cj = j >> kChunkShift;
    const std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ci)) << 32) |
                              static_cast<std::uint32_t>(cj);
    Chunk* chunk;
    if (key == last_key_ && last_chunk_) {
      chunk = last_chunk_;
    } else {
      auto& slot = chunks_[key];
      if (!slot) {
        slot = std::make_unique<Chunk>();
        slot->fill(std::numeric_limits<double>::quiet_NaN());
      }
      chunk = slot.get();
      last_key_ = key;
      last_chunk_ = chunk;
    }
    double& v = (*chunk)[static_cast<std::size_t>(((i & (kChunk - 1)) << kChunkShift) | (j & (kChunk - 1)))];
    if (std::isnan(v)) {
      v = (*f_)(vertex(i, j)) - level_;
      ++evaluations_;
      min_abs_ = std::min(min_abs_, std::abs(v));
    }
    return v;
  }

  bool above(std::int64_t i, std::int64_t j) { return g(i, j) > 0.0; }

  double center(std::int64_t i, std::int64_t j) const {
    return (*f_)({(static_cast<double>(i) + 0.5) * h_, (static_cast<double>(j) + 0.5) * h_}) - level_;
  }

  std::pair<std::int64_t, std::int64_t> a_end(const Edge& e) const { return {e.i, e.j}; }
  std::pair<std::int64_t, std::int64_t> b_end(const Edge& e) const {
    return e.vertical ? std::pair{e.i, e.j + 1} : std::pair{e.i + 1, e.j};
  }

  bool crosses(const Edge& e) {
    const auto [ai, aj] = a_end(e);
    const auto [bi, bj] = b_end(e);
    return above(ai, aj) != above(bi, bj);
  }

  /// Linear interpolation of the zero of g along the edge.
  Vec2 crossing(const Edge& e) {
    const auto [ai, aj] = a_end(e);
    const auto [bi, bj] = b_end(e);
    const double ga = g(ai, aj), gb = g(bi, bj);
    const double t = ga / (ga - gb);
    const Vec2 pa = vertex(ai, aj);
    return e.vertical ? Vec2{pa.x, pa.y + t * h_} : Vec2{pa.x + t * h_, pa.y};
  }

 private:
  using Chunk = std::array<double, static_cast<std::size_t>(kChunk * kChunk)>;
  const SuperpositionPotential* f_;
  double level_;
  double h_;
  std::unordered_map<std::uint64_t, std::unique_ptr<Chunk>> chunks_;
  std::uint64_t last_key_{~std::uint64_t{0}};
  Chunk* last_chunk_{nullptr};
  std::size_t evaluations_{0};
  double min_abs_{std::numeric_limits<double>::infinity()};
};

/// Cell (i, j) spans [i h, (i+1) h] x [j h, (j+1) h]. Local edge k joins corners k and k+1:
/// corners 0..3 = (i,j), (i+1,j), (i+1,j+1), (i,j+1); edges 0..3 = bottom, right, top, left.
struct CellPos {
  std::int64_t i{0};
  std::int64_t j{0};
  int entry{0};
};

inline Edge cell_edge(std::int64_t i, std::int64_t j, int k) {
  switch (k) {
    case 0: return {i, j, false};
    case 1: return {i + 1, j, true};
    case 2: return {i, j + 1, false};
    default: return {i, j, true};
  }
}

inline std::pair<std::int64_t, std::int64_t> cell_corner(std::int64_t i, std::int64_t j, int k) {
  switch (k) {
    case 0: return {i, j};
    case 1: return {i + 1, j};
    case 2: return {i + 1, j + 1};
    default: return {i, j + 1};
  }
}

/// Cell across local edge k together with the local index of the shared edge there.
inline CellPos neighbor(std::int64_t i, std::int64_t j, int k) {
  switch (k) {
    case 0: return {i, j - 1, 2};
    case 1: return {i + 1, j, 3};
    case 2: return {i, j + 1, 0};
    default: return {i - 1, j, 1};
  }
}

inline int exit_edge(LevelGrid& grid, std::int64_t i, std::int64_t j, int entry) {
  bool up[4];
  for (int k = 0; k < 4; ++k) {
    const auto [ci, cj] = cell_corner(i, j, k);
    up[k] = grid.above(ci, cj);
  }
  int crossings = 0;
  for (int k = 0; k < 4; ++k) crossings += up[k] != up[(k + 1) % 4];
  if (crossings == 2) {
    for (int k = 0; k < 4; ++k)
      if (k != entry && up[k] != up[(k + 1) % 4]) return k;
  }
  // Saddle: corners with the opposite sign to the center are cut off individually.
  const bool center_up = grid.center(i, j) > 0.0;
  const int isolated = (up[entry] != center_up) ? entry : (entry + 1) % 4;
  return isolated == entry ? (entry + 3) % 4 : (entry + 1) % 4;
}

/// Cell entered when leaving edge e with the above side on the left (forward) or right.
inline CellPos first_cell(LevelGrid& grid, const Edge& e, bool forward) {
  if (!e.vertical) {
    const bool upper = grid.above(e.i, e.j) == forward;
    return upper ? CellPos{e.i, e.j, 0} : CellPos{e.i, e.j - 1, 2};
  }
  const bool right = grid.above(e.i, e.j + 1) == forward;
  return right ? CellPos{e.i, e.j, 3} : CellPos{e.i - 1, e.j, 1};
}

enum class StopReason { Closed, Budget, LeftWindow, HitEdgeSet };

struct HalfTrace {
  std::vector<Vec2> points;  ///< starts with the start edge's crossing
  std::vector<Edge> edges;   ///< parallel to points
  double arc_length{0.0};
  StopReason stop{StopReason::Budget};
};

/// Walk from `start` until closure, budget, leaving `confine`, or reaching an edge in `stop_at`.
inline HalfTrace walk(LevelGrid& grid, const Edge& start, bool forward, double max_length,
                      std::size_t max_steps, const std::optional<Window>& confine,
                      const EdgeSet* stop_at = nullptr) {
  HalfTrace out;
  Vec2 last = grid.crossing(start);
  out.points.push_back(last);
  out.edges.push_back(start);
  CellPos cell = first_cell(grid, start, forward);
  for (std::size_t step = 0;; ++step) {
    const int k = exit_edge(grid, cell.i, cell.j, cell.entry);
    const Edge e = cell_edge(cell.i, cell.j, k);
    const Vec2 p = grid.crossing(e);
    out.arc_length += norm(p - last);
    out.points.push_back(p);
    out.edges.push_back(e);
    last = p;
    if (e == start) { out.stop = StopReason::Closed; break; }
    if (stop_at && stop_at->count(e)) { out.stop = StopReason::HitEdgeSet; break; }
    if (out.arc_length >= max_length || step + 1 >= max_steps) { out.stop = StopReason::Budget; break; }
    if (confine && !confine->contains(p)) { out.stop = StopReason::LeftWindow; break; }
    cell = neighbor(cell.i, cell.j, k);
  }
  return out;
}

/// Crossing edge of the cell containing p nearest to p; nullopt if that cell has no sign change.
inline std::optional<Edge> seed_edge(LevelGrid& grid, const Vec2& p) {
  const auto i = static_cast<std::int64_t>(std::floor(p.x / grid.h()));
  const auto j = static_cast<std::int64_t>(std::floor(p.y / grid.h()));
  std::optional<Edge> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 4; ++k) {
    const Edge e = cell_edge(i, j, k);
    if (!grid.crosses(e)) continue;
    const double d = norm(grid.crossing(e) - p);
    if (d < best_d) {
      best_d = d;
      best = e;
    }
  }
  return best;
}

inline double jitter_for(const SuperpositionPotential& f) {
  const auto [lo, hi] = f.value_bounds();
  return kCriticalBand * (hi - lo);
}

}  // namespace detail

enum class TraceMode { Bidirectional, Forward, Backward };

namespace detail {

inline LevelLine trace_at(const SuperpositionPotential& f, const Vec2& seed, double level,
                          const TraceBudget& budget, TraceMode mode, const std::optional<Window>& confine,
                          double& min_abs) {
  LevelGrid grid(f, level, budget.cell_size);
  const auto start = seed_edge(grid, seed);
  if (!start) {
    min_abs = grid.min_abs_value();
    throw Error(ErrorKind::SeedNotOnLevel, "no sign change of f - level in the seed cell");
  }
  LevelLine line;
  line.level = level;
  line.seed = seed;
  line.cell_size = budget.cell_size;

  auto finish_open = [&](bool left) {
    line.status = left ? LineStatus::OpenLeftWindow : LineStatus::OpenBudgetExhausted;
  };

  if (mode != TraceMode::Bidirectional) {
    HalfTrace h = walk(grid, *start, mode == TraceMode::Forward, budget.max_arc_length, budget.max_cells, confine);
    line.points = std::move(h.points);
    line.arc_length = h.arc_length;
    if (h.stop == StopReason::Closed) line.status = LineStatus::Closed;
    else finish_open(h.stop == StopReason::LeftWindow);
    min_abs = grid.min_abs_value();
    return line;
  }

  const double half = 0.5 * budget.max_arc_length;
  const std::size_t half_steps = std::max<std::size_t>(1, budget.max_cells / 2);
  HalfTrace fwd = walk(grid, *start, true, half, half_steps, confine);
  if (fwd.stop == StopReason::Closed) {
    line.points = std::move(fwd.points);
    line.arc_length = fwd.arc_length;
    line.status = LineStatus::Closed;
    min_abs = grid.min_abs_value();
    return line;
  }
  EdgeSet seen(fwd.edges.begin(), fwd.edges.end());
  HalfTrace bwd = walk(grid, *start, false, half, half_steps, confine, &seen);
  line.points.reserve(fwd.points.size() + bwd.points.size());
  line.points.assign(bwd.points.rbegin(), bwd.points.rend());
  line.points.insert(line.points.end(), fwd.points.begin() + 1, fwd.points.end());
  line.arc_length = fwd.arc_length + bwd.arc_length;
  if (bwd.stop == StopReason::HitEdgeSet) {
    // The backward walk met the far end of the forward walk: the loop is complete.
    line.status = LineStatus::Closed;
  } else {
    finish_open(fwd.stop == StopReason::LeftWindow || bwd.stop == StopReason::LeftWindow);
  }
  min_abs = grid.min_abs_value();
  return line;
}

}  // namespace detail

/**
 * Trace the level line through `seed` (which must lie in a cell with a sign change
 * of f - level). Bidirectional traces spend half the arc-length budget each way.
 * If any grid value touched lies within kCriticalBand of the level, the whole
 * trace is redone at level + 1e-9 x (value range) and the shift is reported.
 */
inline LevelLine trace_level_line(const SuperpositionPotential& f, const Vec2& seed, double level,
                                  const TraceBudget& budget, TraceMode mode = TraceMode::Bidirectional,
                                  const std::optional<Window>& confine = std::nullopt) {
  budget.validate(f);
  double min_abs = std::numeric_limits<double>::infinity();
  try {
    LevelLine line = detail::trace_at(f, seed, level, budget, mode, confine, min_abs);
    if (min_abs >= kCriticalBand) return line;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SeedNotOnLevel || min_abs >= kCriticalBand) throw;
  }
  const double jitter = detail::jitter_for(f);
  LevelLine line = detail::trace_at(f, seed, level + jitter, budget, mode, confine, min_abs);
  line.jitter = jitter;
  return line;
}

/**
 * One seed per connected piece of the level set inside `window`, sampled on the
 * h-grid. Seeds are crossing points of grid edges, ordered by a row-major scan.
 */
inline std::vector<Vec2> find_seeds(const SuperpositionPotential& f, double level, const Window& window,
                                    double h) {
  using detail::Edge;
  if (window.empty()) throw Error(ErrorKind::InvalidArgument, "seed window is empty");
  if (!(h > 0.0)) throw Error(ErrorKind::InvalidArgument, "cell size must be positive");
  const auto i0 = static_cast<std::int64_t>(std::floor(window.lo.x / h));
  const auto i1 = static_cast<std::int64_t>(std::ceil(window.hi.x / h));
  const auto j0 = static_cast<std::int64_t>(std::floor(window.lo.y / h));
  const auto j1 = static_cast<std::int64_t>(std::ceil(window.hi.y / h));

  std::vector<Edge> edges;
  for (std::int64_t j = j0; j <= j1; ++j) {
    for (std::int64_t i = i0; i <= i1; ++i) {
      if (i < i1) edges.push_back({i, j, false});
      if (j < j1) edges.push_back({i, j, true});
    }
  }

  auto scan = [&](double lv, std::vector<Vec2>& seeds) {
    detail::LevelGrid grid(f, lv, h);
    const Window box{grid.vertex(i0, j0), grid.vertex(i1, j1)};
    const std::size_t cap = static_cast<std::size_t>(4 * (i1 - i0 + 2) * (j1 - j0 + 2));
    const double no_limit = std::numeric_limits<double>::infinity();
    detail::EdgeSet visited;
    for (const Edge& e : edges) {
      if (!grid.crosses(e) || visited.count(e)) continue;
      seeds.push_back(grid.crossing(e));
      auto fwd = detail::walk(grid, e, true, no_limit, cap, box);
      visited.insert(fwd.edges.begin(), fwd.edges.end());
      if (fwd.stop != detail::StopReason::Closed) {
        auto bwd = detail::walk(grid, e, false, no_limit, cap, box);
        visited.insert(bwd.edges.begin(), bwd.edges.end());
      }
    }
    return grid.min_abs_value();
  };

  std::vector<Vec2> seeds;
  if (scan(level, seeds) >= kCriticalBand) return seeds;
  seeds.clear();
  scan(level + detail::jitter_for(f), seeds);
  return seeds;
}

/// Twice the signed area enclosed by a closed polyline (positive = counterclockwise).
inline double signed_area2(const std::vector<Vec2>& pts) {
  double a = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) a += cross(pts[k], pts[k + 1]);
  if (!pts.empty()) a += cross(pts.back(), pts.front());
  return a;
}

/// Where a level sits relative to the interval of levels carrying open lines.
enum class LevelRegime {
  BelowInterval,  ///< {f > level} percolates: closed lines bound lakes of f < level
  Open,           ///< an open line reached the arc-length budget
  AboveInterval,  ///< {f < level} percolates: closed lines bound islands of f > level
};

inline const char* to_string(LevelRegime r) {
  switch (r) {
    case LevelRegime::BelowInterval: return "below";
    case LevelRegime::Open: return "open";
    case LevelRegime::AboveInterval: return "above";
  }
  return "?";
}

/**
 * Trace every seed in `window`; Open as soon as one line exhausts the budget.
 * Otherwise the orientation of the closed line enclosing the largest area
 * tells which phase surrounds the others.
 */
inline LevelRegime probe_level(const SuperpositionPotential& f, double level, const Window& window,
                               const TraceBudget& budget) {
  const auto seeds = find_seeds(f, level, window, budget.cell_size);
  if (seeds.empty()) {
    return f(window.center()) > level ? LevelRegime::BelowInterval : LevelRegime::AboveInterval;
  }
  struct Bits {
    std::uint64_t x, y;
    bool operator==(const Bits&) const = default;
  };
  struct BitsHash {
    std::size_t operator()(const Bits& b) const noexcept { return std::hash<std::uint64_t>{}(b.x * 31 + b.y); }
  };
  auto bits = [](const Vec2& p) {
    return Bits{std::bit_cast<std::uint64_t>(p.x), std::bit_cast<std::uint64_t>(p.y)};
  };
  std::unordered_set<Bits, BitsHash> traced;
  double best_area = 0.0;
  for (const Vec2& s : seeds) {
    if (traced.count(bits(s))) continue;
    LevelLine line;
    try {
      line = trace_level_line(f, s, level, budget);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::SeedNotOnLevel) continue;
      throw;
    }
    if (line.open()) return LevelRegime::Open;
    for (const Vec2& p : line.points) traced.insert(bits(p));
    const double a = signed_area2(line.points);
    if (std::abs(a) > std::abs(best_area)) best_area = a;
  }
  return best_area > 0.0 ? LevelRegime::AboveInterval : LevelRegime::BelowInterval;
}

struct EnergyInterval {
  double lo{0.0};
  double hi{0.0};
  bool degenerate{false};
  std::size_t probes{0};

  double midpoint() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
};

/**
 * Bracket the interval of levels with open lines by bisecting the two regime
 * transitions (BelowInterval -> not, and not -> AboveInterval) to tol.
 * Throws NoOpenLines when [level_min, level_max] does not straddle both.
 */
inline EnergyInterval energy_interval(const SuperpositionPotential& f, const Window& window,
                                      const TraceBudget& budget, double level_min, double level_max,
                                      double tol) {
  if (!(level_min < level_max)) throw Error(ErrorKind::InvalidArgument, "empty level bracket");
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "level tolerance must be positive");
  budget.validate(f);
  EnergyInterval out;
  // Largest level known BelowInterval / smallest known AboveInterval, and the levels
  // bounding the Open set from outside.
  auto probe = [&](double lv) {
    ++out.probes;
    return probe_level(f, lv, window, budget);
  };
  if (probe(level_min) != LevelRegime::BelowInterval)
    throw Error(ErrorKind::NoOpenLines, "lower end of the level bracket is not below the open-line interval");
  if (probe(level_max) != LevelRegime::AboveInterval)
    throw Error(ErrorKind::NoOpenLines, "upper end of the level bracket is not above the open-line interval");

  double below = level_min;  // known BelowInterval
  double not_below = level_max;
  double not_above = level_min;
  double above = level_max;  // known AboveInterval
  const double resolution = 0.5 * tol;
  while (not_below - below > resolution || above - not_above > resolution) {
    const bool lower = not_below - below > resolution;
    const double mid = lower ? 0.5 * (below + not_below) : 0.5 * (not_above + above);
    const LevelRegime r = probe(mid);
    if (r == LevelRegime::BelowInterval) {
      below = std::max(below, mid);
      not_above = std::max(not_above, mid);
    } else if (r == LevelRegime::AboveInterval) {
      above = std::min(above, mid);
      not_below = std::min(not_below, mid);
    } else {
      not_below = std::min(not_below, mid);
      not_above = std::max(not_above, mid);
    }
    if (not_below < below) not_below = below;
    if (not_above > above) not_above = above;
  }
  const double e1 = 0.5 * (below + not_below);
  const double e2 = 0.5 * (not_above + above);
  out.lo = std::min(e1, e2);
  out.hi = std::max(e1, e2);
  out.degenerate = (e2 - e1) < tol;
  return out;
}

/// Default window: a square of side four longest periods centred on the origin.
inline Window default_window(const SuperpositionPotential& f) {
  return Window::centered({0.0, 0.0}, 2.0 * f.longest_period());
}

}  // namespace moire
