#pragma once
/// @file geometry.hpp
/// Plane vectors, 2x2 matrices and the small rank-3 tensor type used for
/// velocity gradients. Everything here is a plain aggregate of doubles with
/// value semantics; the quadrature engines treat these types generically
/// through the component accessors at the bottom.

#include <cmath>

namespace rotflow {

struct Vec2 {
  double e1 = 0.0;
  double e2 = 0.0;
};

constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.e1 + b.e1, a.e2 + b.e2}; }
constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.e1 - b.e1, a.e2 - b.e2}; }
constexpr Vec2 operator-(Vec2 a) { return {-a.e1, -a.e2}; }
constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.e1, s * a.e2}; }
constexpr Vec2 operator*(Vec2 a, double s) { return s * a; }
constexpr Vec2 operator/(Vec2 a, double s) { return {a.e1 / s, a.e2 / s}; }
constexpr Vec2& operator+=(Vec2& a, Vec2 b) { a = a + b; return a; }
constexpr Vec2& operator-=(Vec2& a, Vec2 b) { a = a - b; return a; }

constexpr double dot(Vec2 a, Vec2 b) { return a.e1 * b.e1 + a.e2 * b.e2; }
constexpr double norm_sq(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::sqrt(norm_sq(a)); }

/// Counterclockwise quarter turn: perp(v) = (-v2, v1).
constexpr Vec2 perp(Vec2 v) { return {-v.e2, v.e1}; }

/// Unit direction at angle theta from the positive first axis.
inline Vec2 dir(double theta) { return {std::cos(theta), std::sin(theta)}; }

struct Mat2 {
  double m11 = 0.0;
  double m12 = 0.0;
  double m21 = 0.0;
  double m22 = 0.0;
};

constexpr Mat2 operator+(Mat2 a, Mat2 b) {
  return {a.m11 + b.m11, a.m12 + b.m12, a.m21 + b.m21, a.m22 + b.m22};
}
constexpr Mat2 operator-(Mat2 a, Mat2 b) {
  return {a.m11 - b.m11, a.m12 - b.m12, a.m21 - b.m21, a.m22 - b.m22};
}
constexpr Mat2 operator-(Mat2 a) { return {-a.m11, -a.m12, -a.m21, -a.m22}; }
constexpr Mat2 operator*(double s, Mat2 a) {
  return {s * a.m11, s * a.m12, s * a.m21, s * a.m22};
}
constexpr Mat2 operator*(Mat2 a, double s) { return s * a; }
constexpr Mat2& operator+=(Mat2& a, Mat2 b) { a = a + b; return a; }
constexpr Mat2& operator-=(Mat2& a, Mat2 b) { a = a - b; return a; }

constexpr Vec2 operator*(Mat2 m, Vec2 v) {
  return {m.m11 * v.e1 + m.m12 * v.e2, m.m21 * v.e1 + m.m22 * v.e2};
}
constexpr Mat2 operator*(Mat2 a, Mat2 b) {
  return {a.m11 * b.m11 + a.m12 * b.m21, a.m11 * b.m12 + a.m12 * b.m22,
          a.m21 * b.m11 + a.m22 * b.m21, a.m21 * b.m12 + a.m22 * b.m22};
}

constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
constexpr Mat2 transpose(Mat2 m) { return {m.m11, m.m21, m.m12, m.m22}; }
constexpr Mat2 outer(Vec2 a, Vec2 b) {
  return {a.e1 * b.e1, a.e1 * b.e2, a.e2 * b.e1, a.e2 * b.e2};
}
constexpr double trace(Mat2 m) { return m.m11 + m.m22; }

/// Counterclockwise rotation by angle theta.
inline Mat2 rotation(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {c, -s, s, c};
}

inline double frobenius(Mat2 m) {
  return std::sqrt(m.m11 * m.m11 + m.m12 * m.m12 + m.m21 * m.m21 + m.m22 * m.m22);
}

/// Gradient of a matrix kernel with respect to the second argument.
/// d1 and d2 hold the partial derivatives along the two coordinates, so
/// d1.m12 is the derivative of the (1,2) entry along y1.
struct Grad2 {
  Mat2 d1;
  Mat2 d2;
};

constexpr Grad2 operator+(const Grad2& a, const Grad2& b) { return {a.d1 + b.d1, a.d2 + b.d2}; }
constexpr Grad2 operator-(const Grad2& a, const Grad2& b) { return {a.d1 - b.d1, a.d2 - b.d2}; }
constexpr Grad2 operator*(double s, const Grad2& g) { return {s * g.d1, s * g.d2}; }
constexpr Grad2 operator*(const Grad2& g, double s) { return s * g; }
constexpr Grad2& operator+=(Grad2& a, const Grad2& b) { a = a + b; return a; }

/// Contraction sum_{j,k} dK_k[i][j] F[j][k] giving one velocity component
/// per row index i. Used by the divergence-form solve path.
constexpr Vec2 contract_force(const Grad2& g, Mat2 f) {
  return {g.d1.m11 * f.m11 + g.d1.m12 * f.m21 + g.d2.m11 * f.m12 + g.d2.m12 * f.m22,
          g.d1.m21 * f.m11 + g.d1.m22 * f.m21 + g.d2.m21 * f.m12 + g.d2.m22 * f.m22};
}

// Generic component access so the quadrature and extrapolation engines can
// operate on scalars, vectors, matrices and gradients uniformly.

constexpr int component_count(double) { return 1; }
constexpr int component_count(Vec2) { return 2; }
constexpr int component_count(Mat2) { return 4; }
constexpr int component_count(const Grad2&) { return 8; }

constexpr double get_component(double v, int) { return v; }
constexpr double get_component(Vec2 v, int i) { return i == 0 ? v.e1 : v.e2; }
constexpr double get_component(Mat2 m, int i) {
  switch (i) {
    case 0: return m.m11;
    case 1: return m.m12;
    case 2: return m.m21;
    default: return m.m22;
  }
}
constexpr double get_component(const Grad2& g, int i) {
  return i < 4 ? get_component(g.d1, i) : get_component(g.d2, i - 4);
}

constexpr void set_component(double& v, int, double s) { v = s; }
constexpr void set_component(Vec2& v, int i, double s) { (i == 0 ? v.e1 : v.e2) = s; }
constexpr void set_component(Mat2& m, int i, double s) {
  switch (i) {
    case 0: m.m11 = s; break;
    case 1: m.m12 = s; break;
    case 2: m.m21 = s; break;
    default: m.m22 = s; break;
  }
}
constexpr void set_component(Grad2& g, int i, double s) {
  if (i < 4) set_component(g.d1, i, s); else set_component(g.d2, i - 4, s);
}

constexpr double abs_max(double v) { return v < 0 ? -v : v; }
constexpr double abs_max(Vec2 v) {
  return abs_max(v.e1) > abs_max(v.e2) ? abs_max(v.e1) : abs_max(v.e2);
}
constexpr double abs_max(Mat2 m) {
  double r = 0.0;
  for (int i = 0; i < 4; ++i) r = abs_max(get_component(m, i)) > r ? abs_max(get_component(m, i)) : r;
  return r;
}
constexpr double abs_max(const Grad2& g) {
  const double a = abs_max(g.d1), b = abs_max(g.d2);
  return a > b ? a : b;
}

}  // namespace rotflow
