#pragma once

#include <cmath>

namespace gbflow {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
};

inline Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
inline Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
inline Vec2 operator*(double s, Vec2 v) { return v *= s; }
inline Vec2 operator*(Vec2 v, double s) { return v *= s; }
inline Vec2 operator/(Vec2 v, double s) { return v *= (1.0 / s); }
inline Vec2 operator-(const Vec2& v) { return {-v.x, -v.y}; }

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm2(const Vec2& v) { return v.x * v.x + v.y * v.y; }
inline double norm(const Vec2& v) { return std::sqrt(norm2(v)); }
inline Vec2 unit(const Vec2& v) { return v / norm(v); }

// Rotate v by +pi/2.
inline Vec2 perp(const Vec2& v) { return {-v.y, v.x}; }

}  // namespace gbflow
