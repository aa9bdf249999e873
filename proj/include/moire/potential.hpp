#pragma once
/**
 * @file potential.hpp
 * @brief Periodic Fourier potentials, their superposition through a local
 * combiner, and the 4-periodic lift whose restriction is the superposition.
 */

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "moire/error.hpp"
#include "moire/geometry.hpp"

namespace moire {

/// amplitude * cos(2 pi (n1 f1 + n2 f2) . p + phase), (f1, f2) reciprocal to the lattice.
struct FourierTerm {
  int n1{0};
  int n2{0};
  double amplitude{0.0};
  double phase{0.0};
};

class PeriodicPotential {
 public:
  PeriodicPotential(Lattice2 lattice, std::vector<FourierTerm> terms)
      : lattice_(lattice), reciprocal_(reciprocal_basis(lattice)), terms_(std::move(terms)) {
    wavevectors_.reserve(terms_.size());
    for (const auto& t : terms_) {
      if (!std::isfinite(t.amplitude) || !std::isfinite(t.phase))
        throw Error(ErrorKind::InvalidArgument, "non-finite Fourier coefficient");
      wavevectors_.push_back((reciprocal_.e1() * t.n1 + reciprocal_.e2() * t.n2) *
                             (2.0 * std::numbers::pi));
    }
  }

  /// cos x + cos y on the 2 pi square lattice, scaled.
  static PeriodicPotential cosine_square(double amplitude = 1.0) {
    return {Lattice2::square(2.0 * std::numbers::pi), {{1, 0, amplitude, 0.0}, {0, 1, amplitude, 0.0}}};
  }
  /// Three shortest reciprocal vectors of a hexagonal lattice of spacing a.
  static PeriodicPotential cosine_hexagonal(double a, double amplitude = 1.0) {
    return {Lattice2::hexagonal(a),
            {{1, 0, amplitude, 0.0}, {0, 1, amplitude, 0.0}, {1, 1, amplitude, 0.0}}};
  }

  const Lattice2& lattice() const { return lattice_; }
  const Lattice2& reciprocal() const { return reciprocal_; }
  const std::vector<FourierTerm>& terms() const { return terms_; }

  double operator()(const Vec2& p) const {
    double s = 0.0;
    for (std::size_t k = 0; k < terms_.size(); ++k)
      s += terms_[k].amplitude * std::cos(dot(wavevectors_[k], p) + terms_[k].phase);
    return s;
  }

  /// Sum of |amplitude|: the potential lies in [-bound, bound].
  double amplitude_bound() const {
    double b = 0.0;
    for (const auto& t : terms_) b += std::abs(t.amplitude);
    return b;
  }

 private:
  Lattice2 lattice_;
  Lattice2 reciprocal_;
  std::vector<FourierTerm> terms_;
  std::vector<Vec2> wavevectors_;
};

inline double eval_periodic(const PeriodicPotential& p, const Vec2& x) { return p(x); }

namespace combiner {

struct Sum {};
struct WeightedSum {
  double c1{1.0};
  double c2{1.0};
};
struct Product {};

/// Q sampled on a regular (v, u) grid, bilinearly interpolated. Never extrapolates.
class TableLookup {
 public:
  TableLookup(double v_lo, double v_hi, double u_lo, double u_hi, std::size_t nv, std::size_t nu,
              std::vector<double> values)
      : v_lo_(v_lo), v_hi_(v_hi), u_lo_(u_lo), u_hi_(u_hi), nv_(nv), nu_(nu), values_(std::move(values)) {
    if (nv < 2 || nu < 2) throw Error(ErrorKind::InvalidArgument, "table needs at least 2x2 samples");
    if (!(v_hi > v_lo) || !(u_hi > u_lo)) throw Error(ErrorKind::InvalidArgument, "empty table range");
    if (values_.size() != nv * nu)
      throw Error(ErrorKind::InvalidArgument, "table has " + std::to_string(values_.size()) +
                                                  " values, expected " + std::to_string(nv * nu));
  }

  double operator()(double v, double u) const {
    if (!(v >= v_lo_ && v <= v_hi_ && u >= u_lo_ && u <= u_hi_))
      throw Error(ErrorKind::Range, "combiner table queried outside its sampled range at (" +
                                        std::to_string(v) + ", " + std::to_string(u) + ")");
    const double sv = (v - v_lo_) / (v_hi_ - v_lo_) * static_cast<double>(nv_ - 1);
    const double su = (u - u_lo_) / (u_hi_ - u_lo_) * static_cast<double>(nu_ - 1);
    const std::size_t i = std::min(static_cast<std::size_t>(sv), nv_ - 2);
    const std::size_t j = std::min(static_cast<std::size_t>(su), nu_ - 2);
    const double tv = sv - static_cast<double>(i);
    const double tu = su - static_cast<double>(j);
    const double q00 = at(i, j), q01 = at(i, j + 1), q10 = at(i + 1, j), q11 = at(i + 1, j + 1);
    return (1 - tv) * ((1 - tu) * q00 + tu * q01) + tv * ((1 - tu) * q10 + tu * q11);
  }

  double at(std::size_t iv, std::size_t iu) const { return values_[iv * nu_ + iu]; }
  double v_lo() const { return v_lo_; }
  double v_hi() const { return v_hi_; }
  double u_lo() const { return u_lo_; }
  double u_hi() const { return u_hi_; }
  std::size_t nv() const { return nv_; }
  std::size_t nu() const { return nu_; }
  const std::vector<double>& values() const { return values_; }

 private:
  double v_lo_, v_hi_, u_lo_, u_hi_;
  std::size_t nv_, nu_;
  std::vector<double> values_;
};

}  // namespace combiner

using Combiner = std::variant<combiner::Sum, combiner::WeightedSum, combiner::Product, combiner::TableLookup>;

inline double combine(const Combiner& q, double v, double u) {
  struct Visitor {
    double v, u;
    double operator()(const combiner::Sum&) const { return v + u; }
    double operator()(const combiner::WeightedSum& w) const { return w.c1 * v + w.c2 * u; }
    double operator()(const combiner::Product&) const { return v * u; }
    double operator()(const combiner::TableLookup& t) const { return t(v, u); }
  };
  return std::visit(Visitor{v, u}, q);
}

inline std::string combiner_name(const Combiner& q) {
  static constexpr const char* names[] = {"sum", "weighted", "product", "table"};
  return names[q.index()];
}

/// f(p) = Q(V(p), U(A(p))).
class SuperpositionPotential {
 public:
  SuperpositionPotential(PeriodicPotential v, PeriodicPotential u, EuclideanTransform a,
                         Combiner q = combiner::Sum{})
      : v_(std::move(v)), u_(std::move(u)), a_(a), q_(std::move(q)) {}

  const PeriodicPotential& v() const { return v_; }
  const PeriodicPotential& u() const { return u_; }
  const EuclideanTransform& transform() const { return a_; }
  const Combiner& combiner() const { return q_; }

  double operator()(const Vec2& p) const { return combine(q_, v_(p), u_(a_(p))); }

  /// F(z) = Q(V(z1, z2), U(z3, z4)).
  double lift(const Vec4& z) const { return combine(q_, v_(z.head()), u_(z.tail())); }

  /// Generators of the period lattice of the lift.
  std::array<Vec4, 4> period_generators() const {
    const auto& lv = v_.lattice();
    const auto& lu = u_.lattice();
    return {Vec4{lv.e1().x, lv.e1().y, 0, 0}, Vec4{lv.e2().x, lv.e2().y, 0, 0},
            Vec4{0, 0, lu.e1().x, lu.e1().y}, Vec4{0, 0, lu.e2().x, lu.e2().y}};
  }

  /// In-plane periods of the transformed second layer.
  Lattice2 plane_lattice_u() const { return pulled_back_lattice(u_.lattice(), a_); }

  double shortest_period() const {
    return std::min(v_.lattice().shortest_period(), u_.lattice().shortest_period());
  }
  double longest_period() const {
    return std::max(v_.lattice().longest_period(), u_.lattice().longest_period());
  }

  /// Guaranteed enclosing interval of f's values (not necessarily tight).
  std::pair<double, double> value_bounds() const {
    const double bv = v_.amplitude_bound();
    const double bu = u_.amplitude_bound();
    struct Visitor {
      double bv, bu;
      std::pair<double, double> operator()(const combiner::Sum&) const { return {-bv - bu, bv + bu}; }
      std::pair<double, double> operator()(const combiner::WeightedSum& w) const {
        const double r = std::abs(w.c1) * bv + std::abs(w.c2) * bu;
        return {-r, r};
      }
      std::pair<double, double> operator()(const combiner::Product&) const { return {-bv * bu, bv * bu}; }
      std::pair<double, double> operator()(const combiner::TableLookup& t) const {
        const auto [lo, hi] = std::minmax_element(t.values().begin(), t.values().end());
        return {*lo, *hi};
      }
    };
    return std::visit(Visitor{bv, bu}, q_);
  }

  SuperpositionPotential with_transform(const EuclideanTransform& a) const {
    SuperpositionPotential s = *this;
    s.a_ = a;
    return s;
  }
  SuperpositionPotential with_shift(Vec2 shift) const { return with_transform(a_.with_shift(shift)); }
  SuperpositionPotential with_alpha(double alpha) const { return with_transform(a_.with_alpha(alpha)); }

 private:
  PeriodicPotential v_;
  PeriodicPotential u_;
  EuclideanTransform a_;
  Combiner q_;
};

inline double eval_superposition(const SuperpositionPotential& s, const Vec2& p) { return s(p); }
inline double lift_F(const SuperpositionPotential& s, const Vec4& z) { return s.lift(z); }

/**
 * Bounded search for a common superlattice of lat_v and the in-plane image of
 * lat_u under a. Candidates are t = a v1 + b v2 with |a|, |b| <= bound whose
 * coordinates in the pulled-back U basis are integers within tol. Returns the
 * two shortest independent candidates (positively oriented), or nothing.
 */
inline std::optional<Lattice2> is_commensurate(const Lattice2& lat_v, const Lattice2& lat_u,
                                              const EuclideanTransform& a, int bound, double tol = 1e-8) {
  if (bound < 1) throw Error(ErrorKind::InvalidArgument, "commensurability bound must be >= 1");
  const Lattice2 w = pulled_back_lattice(lat_u, a);
  std::vector<Vec2> hits;
  for (int i = -bound; i <= bound; ++i) {
    for (int j = -bound; j <= bound; ++j) {
      if (i == 0 && j == 0) continue;
      const Vec2 t = lat_v.point(i, j);
      const Vec2 c = w.coordinates(t);
      if (std::abs(c.x - std::round(c.x)) < tol && std::abs(c.y - std::round(c.y)) < tol)
        hits.push_back(t);
    }
  }
  if (hits.empty()) return std::nullopt;
  // Deterministic order: length, then angle in [0, 2 pi).
  auto key = [](const Vec2& t) { return std::pair{dot(t, t), normalize_angle(std::atan2(t.y, t.x))}; };
  std::sort(hits.begin(), hits.end(), [&](const Vec2& p, const Vec2& q) { return key(p) < key(q); });
  const Vec2 t1 = hits.front();
  const double scale = dot(t1, t1);
  for (const Vec2& t2 : hits) {
    const double c = cross(t1, t2);
    if (std::abs(c) > Lattice2::kDegeneracyRatio * std::sqrt(scale * dot(t2, t2)))
      return c > 0 ? Lattice2(t1, t2) : Lattice2(t1, -t2);
  }
  return std::nullopt;
}

}  // namespace moire
