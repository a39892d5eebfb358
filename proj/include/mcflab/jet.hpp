#pragma once

#include <array>
#include <cmath>

namespace mcflab {

/// Second-order Taylor jet in two variables: value, gradient and Hessian.
/// Used to push height-function derivatives through the normal field of
/// the support surface without hand-expanding the quotient rule.
struct Jet2 {
  double v = 0.0;
  std::array<double, 2> d{};
  std::array<std::array<double, 2>, 2> dd{};

  static Jet2 constant(double c) {
    Jet2 j;
    j.v = c;
    return j;
  }
};

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.v = a.v + b.v;
  for (int i = 0; i < 2; ++i) {
    r.d[i] = a.d[i] + b.d[i];
    for (int k = 0; k < 2; ++k) r.dd[i][k] = a.dd[i][k] + b.dd[i][k];
  }
  return r;
}

inline Jet2 operator-(const Jet2& a) {
  Jet2 r;
  r.v = -a.v;
  for (int i = 0; i < 2; ++i) {
    r.d[i] = -a.d[i];
    for (int k = 0; k < 2; ++k) r.dd[i][k] = -a.dd[i][k];
  }
  return r;
}

inline Jet2 operator-(const Jet2& a, const Jet2& b) { return a + (-b); }

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.v = a.v * b.v;
  for (int i = 0; i < 2; ++i) {
    r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    for (int k = 0; k < 2; ++k) {
      r.dd[i][k] = a.dd[i][k] * b.v + a.d[i] * b.d[k] + a.d[k] * b.d[i] + a.v * b.dd[i][k];
    }
  }
  return r;
}

inline Jet2 operator*(double s, const Jet2& a) {
  Jet2 r = a;
  r.v *= s;
  for (int i = 0; i < 2; ++i) {
    r.d[i] *= s;
    for (int k = 0; k < 2; ++k) r.dd[i][k] *= s;
  }
  return r;
}

/// Chain rule for a scalar function with known first and second derivative.
inline Jet2 compose(const Jet2& a, double f, double df, double d2f) {
  Jet2 r;
  r.v = f;
  for (int i = 0; i < 2; ++i) {
    r.d[i] = df * a.d[i];
    for (int k = 0; k < 2; ++k) r.dd[i][k] = d2f * a.d[i] * a.d[k] + df * a.dd[i][k];
  }
  return r;
}

inline Jet2 sqrt(const Jet2& a) {
  const double s = std::sqrt(a.v);
  return compose(a, s, 0.5 / s, -0.25 / (s * a.v));
}

inline Jet2 reciprocal(const Jet2& a) {
  const double inv = 1.0 / a.v;
  return compose(a, inv, -inv * inv, 2.0 * inv * inv * inv);
}

inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * reciprocal(b); }

}  // namespace mcflab
