#pragma once
// Shared fixtures for the test suites: seeded random potentials and the model families.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "moire/moire.hpp"

namespace moire::testing {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reproducible uniform draws on [lo, hi).
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : s_(seed, stream) {}
  double uniform(double lo = 0.0, double hi = 1.0) { return lo + (hi - lo) * s_.uniform(); }
  int integer(int lo, int hi) {
    return lo + static_cast<int>(std::floor(uniform() * static_cast<double>(hi - lo + 1)));
  }
  Vec2 point(double half) { return {uniform(-half, half), uniform(-half, half)}; }

 private:
  SampleStream s_;
};

/// Lattice with side lengths in [0.5, 2] and angle in [pi/4, 3pi/4].
inline Lattice2 random_lattice(Rng& r) {
  const double a = r.uniform(0.5, 2.0);
  const double b = r.uniform(0.5, 2.0);
  const double t0 = r.uniform(0.0, kTwoPi);
  const double t1 = t0 + r.uniform(0.25 * std::numbers::pi, 0.75 * std::numbers::pi);
  return {{a * std::cos(t0), a * std::sin(t0)}, {b * std::cos(t1), b * std::sin(t1)}};
}

inline PeriodicPotential random_periodic(Rng& r) {
  std::vector<FourierTerm> terms;
  const int n = r.integer(1, 4);
  for (int k = 0; k < n; ++k) {
    int n1 = r.integer(-2, 2), n2 = r.integer(-2, 2);
    if (n1 == 0 && n2 == 0) n1 = 1;
    terms.push_back({n1, n2, r.uniform(-1.0, 1.0), r.uniform(0.0, kTwoPi)});
  }
  return PeriodicPotential(random_lattice(r), terms);
}

inline Combiner random_combiner(Rng& r) {
  switch (r.integer(0, 2)) {
    case 0: return combiner::Sum{};
    case 1: return combiner::WeightedSum{r.uniform(0.2, 2.0), r.uniform(0.2, 2.0)};
    default: return combiner::Product{};
  }
}

inline SuperpositionPotential random_superposition(Rng& r) {
  PeriodicPotential v = random_periodic(r);
  PeriodicPotential u = random_periodic(r);
  const EuclideanTransform a(r.uniform(0.0, kTwoPi), r.point(3.0));
  return SuperpositionPotential(std::move(v), std::move(u), a, random_combiner(r));
}

/// cos x + cos y on its own (the second layer carries zero weight).
inline SuperpositionPotential separatrix_potential() {
  return SuperpositionPotential(PeriodicPotential::cosine_square(), PeriodicPotential::cosine_square(),
                                EuclideanTransform(0.0), combiner::WeightedSum{1.0, 0.0});
}

/// V = cos x + cos y, U = 0.05 (cos x' + cos y') in coordinates rotated by alpha.
inline SuperpositionPotential perturbative_potential(double alpha = 0.7, Vec2 shift = {}) {
  return SuperpositionPotential(PeriodicPotential::cosine_square(), PeriodicPotential::cosine_square(0.05),
                                EuclideanTransform(alpha, shift), combiner::Sum{});
}

/// V = cos x + cos y, U = 0.05 cos x'.
inline PeriodicPotential single_cosine_layer(double amplitude = 0.05) {
  return PeriodicPotential(Lattice2::square(kTwoPi), {{1, 0, amplitude, 0.0}});
}
inline SuperpositionPotential single_cosine_potential(double alpha = 0.7, Vec2 shift = {}) {
  return SuperpositionPotential(PeriodicPotential::cosine_square(), single_cosine_layer(),
                                EuclideanTransform(alpha, shift), combiner::Sum{});
}

/// V = cos x + 0.5 cos y: open lines along y already without the second layer.
inline PeriodicPotential anisotropic_layer() {
  return PeriodicPotential(Lattice2::square(kTwoPi), {{1, 0, 1.0, 0.0}, {0, 1, 0.5, 0.0}});
}
inline SuperpositionPotential anisotropic_potential(double alpha = 0.7, Vec2 shift = {}) {
  return SuperpositionPotential(anisotropic_layer(), PeriodicPotential::cosine_square(0.05),
                                EuclideanTransform(alpha, shift), combiner::Sum{});
}

inline SuperpositionPotential hexagonal_identical(double alpha, Vec2 shift = {}) {
  return SuperpositionPotential(PeriodicPotential::cosine_hexagonal(1.0), PeriodicPotential::cosine_hexagonal(1.0),
                                EuclideanTransform(alpha, shift), combiner::Sum{});
}

/// Independent oracle: collect every admissible quadruple, sort, take the first.
inline std::optional<Quadruple> brute_force_quadruple(const Vec2& l, const Lattice2& lat_v,
                                                      const Lattice2& lat_u_plane, int bound, double tol) {
  const auto r = reciprocal_quartet(lat_v, lat_u_plane);
  const Vec2 dir = normalized(l);
  std::vector<Quadruple> hits;
  for (int a = -bound; a <= bound; ++a)
    for (int b = -bound; b <= bound; ++b)
      for (int c = -bound; c <= bound; ++c)
        for (int d = -bound; d <= bound; ++d) {
          const Quadruple q{{a, b, c, d}};
          if (q.max_norm() == 0 || q.normalized() != q) continue;
          const Vec2 g = annihilator(q, r);
          if (std::abs(dot(g, dir)) < tol * norm(g)) hits.push_back(q);
        }
  if (hits.empty()) return std::nullopt;
  std::sort(hits.begin(), hits.end(), quadruple_precedes);
  return hits.front();
}

}  // namespace moire::testing
