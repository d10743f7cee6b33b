#ifndef ANISOADAPT_QUADRATURE_HPP
#define ANISOADAPT_QUADRATURE_HPP

#include <array>

namespace aniso {

// Triangle rule in barycentric coordinates; weights sum to one, so an
// integral is |K| * sum_q w_q f(x_q).
struct TriQuadPoint {
  double l0, l1, l2, w;
};

// 3-point edge-midpoint rule, exact for polynomials of degree 2.
inline const std::array<TriQuadPoint, 3>& tri_rule_order2() {
  static const std::array<TriQuadPoint, 3> r = {{
      {0.5, 0.5, 0.0, 1.0 / 3.0},
      {0.0, 0.5, 0.5, 1.0 / 3.0},
      {0.5, 0.0, 0.5, 1.0 / 3.0},
  }};
  return r;
}

// 6-point rule, exact for polynomials of degree 4.
inline const std::array<TriQuadPoint, 6>& tri_rule_order4() {
  constexpr double wa = 0.223381589678011;
  constexpr double aa = 0.445948490915965;
  constexpr double ab = 0.108103018168070;
  constexpr double wb = 0.109951743655322;
  constexpr double ba = 0.091576213509771;
  constexpr double bb = 0.816847572980459;
  static const std::array<TriQuadPoint, 6> r = {{
      {ab, aa, aa, wa},
      {aa, ab, aa, wa},
      {aa, aa, ab, wa},
      {bb, ba, ba, wb},
      {ba, bb, ba, wb},
      {ba, ba, bb, wb},
  }};
  return r;
}

// Segment rule on [0, 1]; weights sum to one.
struct SegQuadPoint {
  double t, w;
};

// 3-point Gauss-Legendre, exact for polynomials of degree 5.
inline const std::array<SegQuadPoint, 3>& seg_rule() {
  constexpr double s = 0.3872983346207417;  // sqrt(0.15)
  static const std::array<SegQuadPoint, 3> r = {{
      {0.5 - s, 5.0 / 18.0},
      {0.5, 8.0 / 18.0},
      {0.5 + s, 5.0 / 18.0},
  }};
  return r;
}

}  // namespace aniso

#endif
