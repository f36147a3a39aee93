#pragma once

#include <cmath>

#include "edgeseg/geometry.hpp"
#include "edgeseg/model.hpp"
#include "edgeseg/rng.hpp"

namespace edgeseg {

// Per-user movement state. Pedestrians walk waypoint-to-waypoint with dwell
// pauses; vehicles keep a perturbed heading and reflect off area walls.
struct MobilityState {
  bool vehicle = false;
  Vec2 waypoint;
  double dwell_until_s = 0.0;
  double heading_rad = 0.0;
};

namespace mob_detail {

inline Vec2 random_point(const Area& area, Rng& rng) {
  return Vec2{rng.uniform(0.0, area.width), rng.uniform(0.0, area.height)};
}

}  // namespace mob_detail

// Random-waypoint walk: advance toward the waypoint at the user's fixed
// speed; on arrival dwell for a uniform pause, then draw the next waypoint.
// Displacement within one call never exceeds speed * dt.
inline void step_pedestrian(EndUser& user, MobilityState& st, double now_s, double dt_s,
                            const Area& area, double dwell_max_s, Rng& rng) {
  if (dt_s <= 0.0 || user.speed_mps <= 0.0) return;
  double t = now_s;
  const double t_end = now_s + dt_s;
  while (t < t_end) {
    if (t < st.dwell_until_s) {
      t = std::min(st.dwell_until_s, t_end);
      continue;
    }
    double d = distance(user.physical_pos, st.waypoint);
    if (d <= 1e-12) {
      st.dwell_until_s = t + rng.uniform(0.0, dwell_max_s);
      st.waypoint = mob_detail::random_point(area, rng);
      continue;
    }
    double travel_s = d / user.speed_mps;
    if (t + travel_s <= t_end) {
      user.physical_pos = st.waypoint;
      t += travel_s;
    } else {
      Vec2 dir = (st.waypoint - user.physical_pos) / d;
      user.physical_pos += dir * (user.speed_mps * (t_end - t));
      t = t_end;
    }
  }
  user.physical_pos = area.clamp(user.physical_pos);
}

// Heading-persistence drive: one Gaussian heading perturbation per step,
// then straight-line motion with specular reflection at area boundaries.
inline void step_vehicle(EndUser& user, MobilityState& st, double dt_s, const Area& area,
                         double heading_sigma_rad, Rng& rng) {
  if (dt_s <= 0.0) return;
  st.heading_rad += rng.normal(0.0, heading_sigma_rad);
  double remaining = user.speed_mps * dt_s;
  Vec2 dir{std::cos(st.heading_rad), std::sin(st.heading_rad)};
  int guard = 0;
  while (remaining > 1e-12 && guard++ < 16) {
    Vec2 next = user.physical_pos + dir * remaining;
    if (area.contains(next)) {
      user.physical_pos = next;
      break;
    }
    // Find the first wall hit along the segment, reflect there.
    double best_frac = 1.0;
    int wall = -1;  // 0: x=0, 1: x=w, 2: y=0, 3: y=h
    auto consider = [&](double frac, int w) {
      if (frac >= 0.0 && frac < best_frac) {
        best_frac = frac;
        wall = w;
      }
    };
    if (next.x < 0.0) consider(user.physical_pos.x / (user.physical_pos.x - next.x), 0);
    if (next.x > area.width) consider((area.width - user.physical_pos.x) / (next.x - user.physical_pos.x), 1);
    if (next.y < 0.0) consider(user.physical_pos.y / (user.physical_pos.y - next.y), 2);
    if (next.y > area.height) consider((area.height - user.physical_pos.y) / (next.y - user.physical_pos.y), 3);
    if (wall < 0) {
      user.physical_pos = area.clamp(next);
      break;
    }
    user.physical_pos += dir * (remaining * best_frac);
    remaining *= 1.0 - best_frac;
    if (wall <= 1)
      dir.x = -dir.x;
    else
      dir.y = -dir.y;
    user.physical_pos = area.clamp(user.physical_pos);
  }
  st.heading_rad = std::atan2(dir.y, dir.x);
}

}  // namespace edgeseg
