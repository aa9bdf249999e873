#pragma once
/**
 * @file geometry.hpp
 * @brief Plane vectors, lattices, Euclidean transforms and the plane-to-R^4 embedding.
 *
 * The transform convention is fixed: the linear part maps (x, y) to
 * (cos a * x + sin a * y, -sin a * x + cos a * y), i.e. a clockwise rotation
 * for positive a, followed by the shift.
 */

#include <array>
#include <cmath>
#include <numbers>

#include "moire/error.hpp"

namespace moire {

struct Vec2 {
  double x{0.0};
  double y{0.0};

  constexpr Vec2() = default;
  constexpr Vec2(double X, double Y) : x(X), y(Y) {}

  constexpr Vec2 operator+(const Vec2& r) const { return {x + r.x, y + r.y}; }
  constexpr Vec2 operator-(const Vec2& r) const { return {x - r.x, y - r.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(const Vec2& r) { x += r.x; y += r.y; return *this; }
  constexpr Vec2& operator-=(const Vec2& r) { x -= r.x; y -= r.y; return *this; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
/// z-component of the planar cross product (signed parallelogram area).
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
/// Counterclockwise quarter turn.
constexpr Vec2 perp(const Vec2& a) { return {-a.y, a.x}; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
inline Vec2 normalized(const Vec2& a) {
  const double n = norm(a);
  return n > 0.0 ? a / n : Vec2{};
}

struct Vec4 {
  std::array<double, 4> c{};

  constexpr Vec4() = default;
  constexpr Vec4(double z1, double z2, double z3, double z4) : c{z1, z2, z3, z4} {}
  constexpr double& operator[](std::size_t i) { return c[i]; }
  constexpr double operator[](std::size_t i) const { return c[i]; }
  constexpr Vec4 operator+(const Vec4& r) const {
    return {c[0] + r.c[0], c[1] + r.c[1], c[2] + r.c[2], c[3] + r.c[3]};
  }
  constexpr Vec4 operator-(const Vec4& r) const {
    return {c[0] - r.c[0], c[1] - r.c[1], c[2] - r.c[2], c[3] - r.c[3]};
  }
  constexpr bool operator==(const Vec4&) const = default;
  constexpr Vec2 head() const { return {c[0], c[1]}; }
  constexpr Vec2 tail() const { return {c[2], c[3]}; }
};

/// Two period vectors of a plane lattice. Construction rejects degenerate pairs.
class Lattice2 {
 public:
  /// |det(e1, e2)| must exceed this fraction of |e1||e2|.
  static constexpr double kDegeneracyRatio = 1e-9;

  Lattice2(Vec2 e1, Vec2 e2) : e1_(e1), e2_(e2) {
    const double scale = norm(e1) * norm(e2);
    const double d = cross(e1, e2);
    if (!std::isfinite(d) || !(std::abs(d) > kDegeneracyRatio * scale))
      throw Error(ErrorKind::InvalidLattice, "period vectors are (nearly) collinear");
  }

  static Lattice2 square(double a) { return {{a, 0.0}, {0.0, a}}; }
  static Lattice2 hexagonal(double a) {
    return {{a, 0.0}, {0.5 * a, 0.5 * std::numbers::sqrt3 * a}};
  }

  const Vec2& e1() const { return e1_; }
  const Vec2& e2() const { return e2_; }
  double det() const { return cross(e1_, e2_); }
  Vec2 point(double n1, double n2) const { return e1_ * n1 + e2_ * n2; }
  /// Coordinates of p in the (e1, e2) basis.
  Vec2 coordinates(const Vec2& p) const {
    const double d = det();
    return {cross(p, e2_) / d, cross(e1_, p) / d};
  }
  double shortest_period() const { return std::min(norm(e1_), norm(e2_)); }
  double longest_period() const { return std::max(norm(e1_), norm(e2_)); }

 private:
  Vec2 e1_;
  Vec2 e2_;
};

/// Basis (f1, f2) with fi . ej = delta_ij (no 2*pi factor).
inline Lattice2 reciprocal_basis(const Lattice2& lat) {
  const double d = lat.det();
  const Vec2& a = lat.e1();
  const Vec2& b = lat.e2();
  return {{b.y / d, -b.x / d}, {-a.y / d, a.x / d}};
}

inline double normalize_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r = 0.0;
  return r;
}

/// Rigid motion p -> R(alpha) p + shift, with R(alpha) the clockwise rotation.
class EuclideanTransform {
 public:
  EuclideanTransform() = default;
  explicit EuclideanTransform(double alpha, Vec2 shift = {})
      : alpha_(normalize_angle(alpha)), cos_(std::cos(alpha_)), sin_(std::sin(alpha_)), shift_(shift) {}

  double alpha() const { return alpha_; }
  const Vec2& shift() const { return shift_; }

  EuclideanTransform with_shift(Vec2 s) const {
    EuclideanTransform t = *this;
    t.shift_ = s;
    return t;
  }
  EuclideanTransform with_alpha(double a) const { return EuclideanTransform(a, shift_); }

  /// Linear part only.
  Vec2 rotate(const Vec2& p) const { return {cos_ * p.x + sin_ * p.y, -sin_ * p.x + cos_ * p.y}; }
  /// Inverse of the linear part (counterclockwise rotation by alpha).
  Vec2 unrotate(const Vec2& p) const { return {cos_ * p.x - sin_ * p.y, sin_ * p.x + cos_ * p.y}; }
  Vec2 operator()(const Vec2& p) const { return rotate(p) + shift_; }

 private:
  double alpha_{0.0};
  double cos_{1.0};
  double sin_{0.0};
  Vec2 shift_{};
};

inline Vec2 apply_transform(const EuclideanTransform& a, const Vec2& p) { return a(p); }

/// (x, y) -> (x, y, A(x, y)).
inline Vec4 embed(const EuclideanTransform& a, const Vec2& p) {
  const Vec2 q = a(p);
  return {p.x, p.y, q.x, q.y};
}

/// In-plane periods of p -> U(A(p)) when U has the lattice `lat`.
inline Lattice2 pulled_back_lattice(const Lattice2& lat, const EuclideanTransform& a) {
  return {a.unrotate(lat.e1()), a.unrotate(lat.e2())};
}

}  // namespace moire
