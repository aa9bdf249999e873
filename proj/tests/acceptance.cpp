// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "support.hpp"

using namespace moire;
using namespace moire::testing;

namespace {

struct Outcome {
  bool pass{false};
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string q_or_none(const std::optional<Quadruple>& q) { return q ? q->str() : "none"; }

Outcome restriction_identity() {
  Rng rng(101);
  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    const auto f = random_superposition(rng);
    for (int k = 0; k < 1000; ++k) {
      const Vec2 p = rng.point(50.0);
      worst = std::max(worst, std::abs(lift_F(f, embed(f.transform(), p)) - eval_superposition(f, p)));
    }
  }
  return {worst < 1e-12, "max |F(embed(p)) - f(p)| = " + fmt("%.3g", worst) + " over 20x1000 points"};
}

Outcome lift_periodicity() {
  Rng rng(202);
  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    const auto f = random_superposition(rng);
    const auto gens = f.period_generators();
    for (int k = 0; k < 100; ++k) {
      const Vec4 z(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20));
      const double base = lift_F(f, z);
      for (const Vec4& g : gens) worst = std::max(worst, std::abs(lift_F(f, z + g) - base));
    }
  }
  return {worst < 1e-10, "max deviation under the four period generators = " + fmt("%.3g", worst)};
}

Outcome analytic_separatrix() {
  const auto f = separatrix_potential();
  const auto b = TraceBudget::defaults_for(f);
  const auto w = default_window(f);
  const double tol = 1e-3;
  const auto iv = energy_interval(f, w, b, -2.1, 2.1, tol);
  const bool width_ok = iv.width() < 2.0 * tol && iv.lo <= tol && iv.hi >= -tol;
  const ClassifierOptions opt{};
  const auto lo = classify_level(f, -0.5, w, b, opt);
  const auto hi = classify_level(f, 0.5, w, b, opt);
  const bool closed_ok = lo.verdict == Verdict::Closed && hi.verdict == Verdict::Closed;
  return {width_ok && closed_ok, "interval [" + fmt("%.3g", iv.lo) + ", " + fmt("%.3g", iv.hi) + "]; E=-0.5 " +
                                     to_string(lo.verdict) + ", E=+0.5 " + to_string(hi.verdict)};
}

Outcome strip_saturation() {
  const auto f = perturbative_potential(0.7);
  const auto b = TraceBudget::defaults_for(f);
  const auto w = default_window(f);
  const ClassifierOptions opt{};
  const auto [vmin, vmax] = f.value_bounds();
  const auto iv = energy_interval(f, w, b, vmin - 0.01, vmax + 0.01, opt.level_tol);
  const auto c = classify_level(f, iv.midpoint(), w, b, opt);
  std::string d = "E=" + fmt("%.6g", iv.midpoint()) + " verdict " + to_string(c.verdict);
  bool widths_ok = false;
  if (c.widths.size() == 3) {
    double lo = c.widths[0].width, hi = lo;
    for (const auto& s : c.widths) lo = std::min(lo, s.width), hi = std::max(hi, s.width);
    widths_ok = lo > 0.0 && hi <= 1.15 * lo;
    d += "; widths " + fmt("%.4g", c.widths[0].width) + "/" + fmt("%.4g", c.widths[1].width) + "/" +
         fmt("%.4g", c.widths[2].width);
  } else if (c.verdict == Verdict::Closed) {
    d += " (diameter " + fmt("%.4g", c.diameter) + ")";
  }
  bool q_ok = false;
  if (c.quadruple) {
    const double tol = 2.0 * c.residual / c.widths.back().arc_length;
    const auto oracle = brute_force_quadruple(c.direction, f.v().lattice(), f.plane_lattice_u(), opt.max_norm, tol);
    q_ok = c.quadruple->m[2] == 0 && c.quadruple->m[3] == 0 && oracle && *oracle == *c.quadruple;
    d += "; quadruple " + c.quadruple->str() + " oracle " + q_or_none(oracle);
  }
  return {c.verdict == Verdict::Regular && widths_ok && q_ok, d};
}

Outcome shift_invariance() {
  const auto base = perturbative_potential(0.0);
  Rng rng(505);
  std::vector<Vec2> shifts;
  for (int k = 0; k < 5; ++k) shifts.push_back(base.u().lattice().point(rng.uniform(), rng.uniform()));
  const auto b = TraceBudget::defaults_for(base);
  const auto rep = shift_family_check(base, 0.7, shifts, default_window(base), b);
  std::string d = rep.skipped ? rep.notice : "";
  for (const auto& s : rep.samples) {
    d += std::string(d.empty() ? "" : "; ") + to_string(s.classification.verdict);
    if (s.classification.quadruple) d += " " + s.classification.quadruple->str();
    if (s.interval) d += " [" + fmt("%.4g", s.interval->lo) + "," + fmt("%.4g", s.interval->hi) + "]";
  }
  d += std::string("; quadruples ") + (rep.quadruples_agree ? "agree" : "differ or missing") + ", intervals " +
       (rep.intervals_agree ? "agree" : "differ");
  return {!rep.skipped && rep.quadruples_agree && rep.intervals_agree, d};
}

Outcome quadruple_round_trip() {
  Rng rng(606);
  int ok = 0;
  std::string first_miss;
  for (int k = 0; k < 50; ++k) {
    Quadruple q;
    do {
      for (int& m : q.m) m = rng.integer(-6, 6);
    } while (q.is_zero() || !q.irreducible());
    q = q.normalized();
    const Lattice2 lv = random_lattice(rng);
    const Lattice2 lu = pulled_back_lattice(random_lattice(rng), EuclideanTransform(rng.uniform(0.0, kTwoPi)));
    const Vec2 l = direction_from_quadruple(q, lv, lu);
    const auto back = recover_quadruple(l, lv, lu, 6, 1e-9);
    if (back && *back == q) ++ok;
    else if (first_miss.empty()) first_miss = "; first miss " + q.str() + " -> " + q_or_none(back);
  }
  return {ok == 50, std::to_string(ok) + "/50 recovered" + first_miss};
}

Outcome commensurability() {
  const Lattice2 sq = Lattice2::square(1.0);
  const auto at = is_commensurate(sq, sq, EuclideanTransform(std::atan(0.75)), 10);
  const auto one = is_commensurate(sq, sq, EuclideanTransform(1.0), 50);
  std::string d = "atan(3/4): ";
  d += at ? "commensurate, |e1|^2=" + fmt("%.6g", dot(at->e1(), at->e1())) : "none";
  d += "; 1 rad at bound 50: ";
  d += one ? "commensurate" : "none";
  return {at.has_value() && !one.has_value(), d};
}

Outcome hexagonal_identical_layers() {
  const auto base = hexagonal_identical(0.0);
  SweepConfig cfg;
  cfg.shifts_per_alpha = 2;
  cfg.seed = 808;
  Rng rng(808);
  std::vector<double> alphas;
  while (alphas.size() < 32) {
    const double a = rng.uniform(0.0, std::numbers::pi / 3.0);
    if (!is_commensurate(base.v().lattice(), base.u().lattice(), EuclideanTransform(a), 12)) alphas.push_back(a);
  }
  std::vector<SweepPoint> pts(alphas.size());
  parallel_for(alphas.size(), 0, [&](std::size_t k) { pts[k] = classify_angle(base, alphas[k], k, cfg); });
  int regular = 0, shift_regular = 0, chaotic = 0, undetermined = 0;
  std::string lone;
  for (const auto& p : pts) {
    regular += p.verdict == Verdict::Regular;
    chaotic += p.verdict == Verdict::Chaotic;
    undetermined += p.verdict == Verdict::Undetermined;
    for (const auto& s : p.shifts) {
      if (s.classification.verdict != Verdict::Regular) continue;
      ++shift_regular;
      char buf[96];
      std::snprintf(buf, sizeof buf, " [alpha %.4f %s, point %s]", p.alpha, s.classification.quadruple->str().c_str(),
                    to_string(p.verdict));
      lone += buf;
    }
  }
  return {regular == 0, std::to_string(regular) + " Regular, " + std::to_string(chaotic) + " Chaotic, " +
                            std::to_string(undetermined) + " Undetermined points; " + std::to_string(shift_regular) +
                            " Regular among 64 shift samples" + lone};
}

Outcome sweep_determinism() {
  SweepConfig cfg;
  cfg.alpha_count = 64;
  cfg.seed = 909;
  const double tol = (cfg.alpha_end - cfg.alpha_start) / 63.0 / 16.0;
  const PeriodicPotential v = anisotropic_layer();
  const PeriodicPotential u = PeriodicPotential::cosine_square(0.05);
  const SuperpositionPotential base(v, u, EuclideanTransform(0.0), combiner::Sum{});
  auto run = [&] {
    const auto r = sweep_angle(cfg, v, u);
    const auto det = detect_zones(r, tol, make_angle_classifier(base, cfg));
    return std::pair{zones_csv(det), to_json_text(sweep_json(r, &det))};
  };
  const auto a = run();
  const auto b = run();
  const bool identical = a.first == b.first && a.second == b.second;
  const auto r = sweep_angle(cfg, v, u);
  const auto det = detect_zones(r, tol, make_angle_classifier(base, cfg));
  const auto checks = check_zone_soundness(det, make_angle_classifier(base, cfg, 1u << 24), 909);
  std::size_t passed = 0;
  std::string misses;
  for (const auto& c : checks) {
    if (c.passed) {
      ++passed;
    } else {
      misses += "; zone " + det.zones[c.zone].quadruple.str() + " at " + fmt("%.5f", c.alpha) + " gave " +
                to_string(c.verdict.verdict) + " " + q_or_none(c.verdict.quadruple);
    }
  }
  return {identical && passed == checks.size() && !checks.empty(),
          std::string(identical ? "outputs byte-identical" : "outputs differ") + "; " + std::to_string(det.zones.size()) +
              " zones, " + std::to_string(passed) + "/" + std::to_string(checks.size()) +
              " interior spot checks reproduce the zone quadruple" + misses};
}

double median_residual(const SuperpositionPotential& f, const LevelLine& l, double level) {
  std::vector<double> r;
  r.reserve(l.points.size());
  for (const Vec2& p : l.points) r.push_back(std::abs(f(p) - level));
  std::nth_element(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(r.size() / 2), r.end());
  return r[r.size() / 2];
}

Outcome tracer_convergence() {
  Rng rng(1010);
  double worst = INFINITY;
  std::string d;
  for (int c = 0; c < 5; ++c) {
    const auto f = random_superposition(rng);
    const Window w = Window::centered({0, 0}, f.longest_period());
    std::vector<double> vals;
    for (int i = 0; i < 64; ++i)
      for (int j = 0; j < 64; ++j)
        vals.push_back(f(w.lo + Vec2((w.hi.x - w.lo.x) * i / 63.0, (w.hi.y - w.lo.y) * j / 63.0)));
    std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(vals.size() / 2), vals.end());
    const double level = vals[vals.size() / 2];
    const TraceBudget b = TraceBudget::defaults_for(f);
    TraceBudget half = b;
    half.cell_size = 0.5 * b.cell_size;
    half.max_cells = TraceBudget::default_max_cells(half.cell_size, half.max_arc_length);
    const auto seeds = find_seeds(f, level, w, b.cell_size);
    if (seeds.empty()) return {false, "no seed for a convergence case"};
    const LevelLine l1 = trace_level_line(f, seeds.front(), level, b);
    const LevelLine l2 = trace_level_line(f, seeds.front(), level, half);
    const double ratio = median_residual(f, l1, l1.level) / median_residual(f, l2, l2.level);
    worst = std::min(worst, ratio);
    d += (d.empty() ? "" : ", ") + fmt("%.2f", ratio);
  }
  return {worst >= 3.5, "median residual ratios for h -> h/2 on 5 random configs: " + d};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "restriction identity", 5, restriction_identity},
      {2, "lift periodicity", 5, lift_periodicity},
      {3, "analytic separatrix", 30, analytic_separatrix},
      {4, "regular-line strip saturation", 120, strip_saturation},
      {5, "shift-family invariance", 300, shift_invariance},
      {6, "quadruple round trip", 10, quadruple_round_trip},
      {7, "commensurability", 10, commensurability},
      {8, "identical hexagonal layers", 600, hexagonal_identical_layers},
      {9, "sweep determinism and zone soundness", 600, sweep_determinism},
      {10, "tracer convergence", 120, tracer_convergence},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s criterion %2d (%s): %s; %.2f s of %.0f s%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.limit_s, in_time ? "" : " (over time limit)");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
