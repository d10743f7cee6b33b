#ifndef ANISOADAPT_GEOMETRY_HPP
#define ANISOADAPT_GEOMETRY_HPP

#include <cmath>

namespace aniso {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
};

inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
// counterclockwise quarter turn
inline Vec2 perp(Vec2 v) { return {-v.y, v.x}; }

// General (not necessarily symmetric) 2x2 matrix, row major.
struct Mat2 {
  double a00 = 0.0, a01 = 0.0, a10 = 0.0, a11 = 0.0;

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  Vec2 operator*(Vec2 v) const { return {a00 * v.x + a01 * v.y, a10 * v.x + a11 * v.y}; }
  Mat2 operator*(const Mat2& o) const {
    return {a00 * o.a00 + a01 * o.a10, a00 * o.a01 + a01 * o.a11,
            a10 * o.a00 + a11 * o.a10, a10 * o.a01 + a11 * o.a11};
  }
  Mat2 transposed() const { return {a00, a10, a01, a11}; }
  double det() const { return a00 * a11 - a01 * a10; }
  Mat2 inverse() const {
    double d = det();
    return {a11 / d, -a01 / d, -a10 / d, a00 / d};
  }
};

// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct SymMat2 {
  double xx = 0.0, xy = 0.0, yy = 0.0;

  static SymMat2 identity() { return {1.0, 0.0, 1.0}; }
  static SymMat2 diag(double a, double b) { return {a, 0.0, b}; }
  double det() const { return xx * yy - xy * xy; }
  double trace() const { return xx + yy; }
  SymMat2 operator+(const SymMat2& o) const { return {xx + o.xx, xy + o.xy, yy + o.yy}; }
  SymMat2 operator-(const SymMat2& o) const { return {xx - o.xx, xy - o.xy, yy - o.yy}; }
  SymMat2 operator*(double s) const { return {xx * s, xy * s, yy * s}; }
  SymMat2& operator+=(const SymMat2& o) { xx += o.xx; xy += o.xy; yy += o.yy; return *this; }
  Vec2 operator*(Vec2 v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }
  double quad(Vec2 v) const { return v.x * (xx * v.x + xy * v.y) + v.y * (xy * v.x + yy * v.y); }
};

// Eigendecomposition M = R diag(l1, l2) R^T with R = [[c, -s], [s, c]].
// Closed form via the half-angle of a single Jacobi rotation; no ordering
// between l1 and l2 is guaranteed.
struct SymEigen2 {
  double l1 = 0.0, l2 = 0.0;
  double c = 1.0, s = 0.0;
};

inline SymEigen2 eig_sym(const SymMat2& m) {
  SymEigen2 e;
  if (m.xy == 0.0) {
    e.l1 = m.xx;
    e.l2 = m.yy;
    return e;
  }
  double theta = 0.5 * std::atan2(2.0 * m.xy, m.xx - m.yy);
  e.c = std::cos(theta);
  e.s = std::sin(theta);
  e.l1 = e.c * e.c * m.xx + 2.0 * e.c * e.s * m.xy + e.s * e.s * m.yy;
  e.l2 = e.s * e.s * m.xx - 2.0 * e.c * e.s * m.xy + e.c * e.c * m.yy;
  return e;
}

inline SymMat2 sym_from_eigen(double l1, double l2, double c, double s) {
  return {c * c * l1 + s * s * l2, c * s * (l1 - l2), s * s * l1 + c * c * l2};
}

// Applies f to the eigenvalues: f(M) = R diag(f(l1), f(l2)) R^T.
template <class F>
SymMat2 sym_map_eigen(const SymMat2& m, F&& f) {
  SymEigen2 e = eig_sym(m);
  return sym_from_eigen(f(e.l1), f(e.l2), e.c, e.s);
}

// F^T M F for a general 2x2 F; result is symmetric.
inline SymMat2 congruence(const Mat2& f, const SymMat2& m) {
  // columns of F
  Vec2 f0{f.a00, f.a10};
  Vec2 f1{f.a01, f.a11};
  Vec2 mf0 = m * f0;
  Vec2 mf1 = m * f1;
  return {dot(f0, mf0), dot(f0, mf1), dot(f1, mf1)};
}

}  // namespace aniso

#endif
