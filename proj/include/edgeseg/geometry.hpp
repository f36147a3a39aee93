#pragma once

#include <cmath>

namespace edgeseg {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }

  double norm() const { return std::sqrt(x * x + y * y); }
  double norm2() const { return x * x + y * y; }

  bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }
inline double distance2(const Vec2& a, const Vec2& b) { return (a - b).norm2(); }

// Axis-aligned simulation area anchored at the origin.
struct Area {
  double width = 0.0;
  double height = 0.0;

  bool contains(const Vec2& p) const {
    return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height;
  }

  Vec2 clamp(const Vec2& p) const {
    Vec2 q = p;
    if (q.x < 0.0) q.x = 0.0;
    if (q.x > width) q.x = width;
    if (q.y < 0.0) q.y = 0.0;
    if (q.y > height) q.y = height;
    return q;
  }
};

}  // namespace edgeseg
