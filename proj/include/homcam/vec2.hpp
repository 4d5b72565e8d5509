#pragma once

#include <cmath>

namespace homcam {

/// Transverse 2-vector. Units depend on context (µm for positions, µm⁻¹ for momenta).
struct Vec2 {
  double x{0.0};
  double y{0.0};

  constexpr Vec2& operator+=(const Vec2& o) noexcept { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(const Vec2& o) noexcept { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) noexcept { x *= s; y *= s; return *this; }

  friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) noexcept { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) noexcept { return a -= b; }
  friend constexpr Vec2 operator-(const Vec2& a) noexcept { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) noexcept { return a *= s; }
  friend constexpr Vec2 operator*(double s, Vec2 a) noexcept { return a *= s; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

inline double norm2(const Vec2& v) noexcept { return v.x * v.x + v.y * v.y; }
inline double norm(const Vec2& v) noexcept { return std::hypot(v.x, v.y); }

/// Counter-clockwise rotation by `angle` radians.
inline Vec2 rotate(const Vec2& v, double angle) noexcept {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

} // namespace homcam
