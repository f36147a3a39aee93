#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "edgeseg/errors.hpp"
#include "edgeseg/geometry.hpp"
#include "edgeseg/latency.hpp"
#include "edgeseg/model.hpp"
#include "edgeseg/rng.hpp"

namespace edgeseg {

// The 2D latency map. Map units are milliseconds: distances between
// coordinates approximate measured latencies, so cluster radii read directly
// as latency budgets. Anchors stay fixed between full re-embeddings; users
// are re-placed against them on every refresh.
struct LatencyMap {
  std::vector<DeviceId> device_ids;
  std::vector<Vec2> anchor_coords;               // per device, centered at origin
  std::vector<std::optional<Vec2>> user_coords;  // per user; absent => unlocalizable
  double stress_value = 0.0;                     // normalized stress of anchors vs device block
  double embedded_at = 0.0;
};

struct EmbedResult {
  std::vector<Vec2> coords;  // centroid at the origin
  double stress = 0.0;       // normalized
  std::vector<double> stress_trace;  // per iteration, winning start
  int iterations = 0;
};

struct PlaceResult {
  Vec2 pos;
  double objective = 0.0;  // sum of squared latency residuals
  int iterations = 0;
};

// Normalized stress of a configuration against a latency matrix block:
//   sqrt( sum_{i<j} w_ij (d_ij - delta_ij)^2 / sum_{i<j} w_ij delta_ij^2 )
// with w_ij = 0 for unreachable (ceiling) entries and 1 otherwise.
inline double normalized_stress(const std::vector<Vec2>& coords,
                                const std::vector<double>& dissim, double ceiling_ms) {
  const int n = static_cast<int>(coords.size());
  double num = 0.0, denom = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double delta = dissim[static_cast<std::size_t>(i) * n + j];
      if (delta >= ceiling_ms) continue;
      double d = distance(coords[i], coords[j]);
      num += (d - delta) * (d - delta);
      denom += delta * delta;
    }
  }
  if (denom <= 0.0) return 0.0;
  return std::sqrt(num / denom);
}

namespace loc_detail {

// One weighted-SMACOF descent from a given start. Returns the raw stress
// trace (sigma = sum w (d-delta)^2) alongside the final configuration.
inline void smacof_descend(const std::vector<double>& delta, const std::vector<char>& weight,
                           int n, const Eigen::MatrixXd& v_pinv, int max_iter, double tol,
                           Eigen::MatrixXd& x, std::vector<double>& sigma_trace) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  sigma_trace.clear();

  auto eval = [&]() {
    double sigma = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (!weight[static_cast<std::size_t>(i) * n + j]) continue;
        double dij = (x.row(i) - x.row(j)).norm();
        d(i, j) = dij;
        d(j, i) = dij;
        double r = dij - delta[static_cast<std::size_t>(i) * n + j];
        sigma += r * r;
      }
    }
    return sigma;
  };

  double sigma = eval();
  sigma_trace.push_back(sigma);

  for (int it = 0; it < max_iter; ++it) {
    // Guttman transform: X <- V^+ B(X) X
    b.setZero();
    for (int i = 0; i < n; ++i) {
      double diag = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i || !weight[static_cast<std::size_t>(i) * n + j]) continue;
        double dij = d(i, j);
        double bij = dij > 1e-12 ? -delta[static_cast<std::size_t>(i) * n + j] / dij : 0.0;
        b(i, j) = bij;
        diag -= bij;
      }
      b(i, i) = diag;
    }
    x = v_pinv * (b * x);

    double prev = sigma;
    sigma = eval();
    sigma_trace.push_back(sigma);
    if (prev > 0.0 && (prev - sigma) / prev < tol) break;
    if (sigma <= 0.0) break;
  }
}

}  // namespace loc_detail

// Embeds the device block into 2D by iterative stress majorization. Starts
// from several seeded random configurations and keeps the lowest-stress
// result; the returned configuration is translated so its centroid is the
// origin. Ceiling entries carry zero weight.
inline EmbedResult embed_devices(const std::vector<double>& device_device, int n,
                                 double ceiling_ms, std::uint64_t seed, int max_iter = 500,
                                 double tol = 1e-10, int restarts = 8) {
  if (n < 3) throw TooFewAnchors("embedding needs >= 3 devices");

  std::vector<char> weight(static_cast<std::size_t>(n) * n, 0);
  double delta_sum = 0.0, denom = 0.0;
  int finite_pairs = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double delta = device_device[static_cast<std::size_t>(i) * n + j];
      if (delta < ceiling_ms) {
        weight[static_cast<std::size_t>(i) * n + j] = 1;
        if (j > i) {
          ++finite_pairs;
          delta_sum += delta;
          denom += delta * delta;
        }
      }
    }
  }
  if (finite_pairs == 0 || denom <= 0.0)
    throw DegenerateMatrix("no usable entries in device latency block");

  // V from the weight pattern; its pseudo-inverse is reused by every start.
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double diag = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double w = weight[static_cast<std::size_t>(i) * n + j] ? 1.0 : 0.0;
      v(i, j) = -w;
      diag += w;
    }
    v(i, i) = diag;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
  const auto& evals = es.eigenvalues();
  const auto& evecs = es.eigenvectors();
  double cutoff = evals(n - 1) * 1e-12;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    if (evals(i) > cutoff) inv(i) = 1.0 / evals(i);
  Eigen::MatrixXd v_pinv = evecs * inv.asDiagonal() * evecs.transpose();

  const double init_scale = delta_sum / finite_pairs;

  EmbedResult best;
  double best_sigma = -1.0;
  Eigen::MatrixXd x(n, 2);
  std::vector<double> trace;
  for (int r = 0; r < restarts; ++r) {
    Rng rng(substream_seed(seed, "embed.init", static_cast<std::uint64_t>(r)));
    for (int i = 0; i < n; ++i) {
      x(i, 0) = rng.uniform() * init_scale;
      x(i, 1) = rng.uniform() * init_scale;
    }
    loc_detail::smacof_descend(device_device, weight, n, v_pinv, max_iter, tol, x, trace);
    double sigma = trace.back();
    if (best_sigma < 0.0 || sigma < best_sigma) {
      best_sigma = sigma;
      best.coords.resize(n);
      Vec2 centroid{0.0, 0.0};
      for (int i = 0; i < n; ++i) centroid += Vec2{x(i, 0), x(i, 1)};
      centroid = centroid / n;
      for (int i = 0; i < n; ++i) best.coords[i] = Vec2{x(i, 0), x(i, 1)} - centroid;
      best.stress_trace.assign(trace.size(), 0.0);
      for (std::size_t t = 0; t < trace.size(); ++t)
        best.stress_trace[t] = std::sqrt(trace[t] / denom);
      best.iterations = static_cast<int>(trace.size()) - 1;
    }
  }
  best.stress = std::sqrt(best_sigma / denom);
  return best;
}

struct PlaceOpts {
  int max_iter = 400;
  double tol = 1e-10;
  int restarts = 12;
};

// Places one point against fixed anchors by majorizing
//   f(x) = sum_j (||x - a_j|| - delta_j)^2
// over the finite-latency anchors. Cold placement multi-starts from the
// weighted centroid of the three lowest-latency anchors, those anchors
// themselves, and seeded random points; a warm start descends once.
inline PlaceResult place_user(const std::vector<double>& latencies,
                              const std::vector<Vec2>& anchors, double ceiling_ms,
                              std::uint64_t seed, const PlaceOpts& opts = {},
                              std::optional<Vec2> warm_start = {}) {
  const int n = static_cast<int>(anchors.size());
  std::vector<int> finite;
  finite.reserve(n);
  for (int j = 0; j < n; ++j)
    if (latencies[j] < ceiling_ms) finite.push_back(j);
  if (finite.size() < 3)
    throw InsufficientAnchors("user placement needs >= 3 finite latency entries");

  Rng rng(substream_seed(seed, "place.jitter"));

  auto objective = [&](const Vec2& p) {
    double f = 0.0;
    for (int j : finite) {
      double r = distance(p, anchors[j]) - latencies[j];
      f += r * r;
    }
    return f;
  };

  auto descend = [&](Vec2 p, int& iters_out) {
    double f = objective(p);
    int it = 0;
    for (; it < opts.max_iter; ++it) {
      Vec2 acc{0.0, 0.0};
      for (int j : finite) {
        Vec2 diff = p - anchors[j];
        double d = diff.norm();
        Vec2 dir;
        if (d > 1e-12) {
          dir = diff / d;
        } else {
          double ang = rng.uniform() * 2.0 * std::numbers::pi;
          dir = Vec2{std::cos(ang), std::sin(ang)};
        }
        acc += anchors[j] + dir * latencies[j];
      }
      p = acc / static_cast<double>(finite.size());
      double prev = f;
      f = objective(p);
      if (prev <= 1e-18 || (prev - f) / prev < opts.tol) {
        ++it;
        break;
      }
    }
    iters_out = it;
    return std::pair<Vec2, double>{p, f};
  };

  std::vector<Vec2> starts;
  if (warm_start) {
    starts.push_back(*warm_start);
  } else {
    std::vector<int> nearest(finite.begin(), finite.end());
    std::sort(nearest.begin(), nearest.end(),
              [&](int a, int b) { return latencies[a] < latencies[b]; });
    nearest.resize(3);
    Vec2 c{0.0, 0.0};
    double wsum = 0.0;
    for (int j : nearest) {
      double w = 1.0 / std::max(latencies[j], 1e-6);
      c += anchors[j] * w;
      wsum += w;
    }
    starts.push_back(c / wsum);
    for (int j : nearest) starts.push_back(anchors[j]);

    Vec2 lo = anchors[finite[0]], hi = anchors[finite[0]];
    double max_delta = 0.0;
    for (int j : finite) {
      lo.x = std::min(lo.x, anchors[j].x);
      lo.y = std::min(lo.y, anchors[j].y);
      hi.x = std::max(hi.x, anchors[j].x);
      hi.y = std::max(hi.y, anchors[j].y);
      max_delta = std::max(max_delta, latencies[j]);
    }
    Rng start_rng(substream_seed(seed, "place.starts"));
    while (static_cast<int>(starts.size()) < opts.restarts) {
      starts.push_back(Vec2{start_rng.uniform(lo.x - max_delta, hi.x + max_delta),
                            start_rng.uniform(lo.y - max_delta, hi.y + max_delta)});
    }
  }

  PlaceResult best;
  double best_f = -1.0;
  for (const Vec2& s : starts) {
    int iters = 0;
    auto [p, f] = descend(s, iters);
    if (best_f < 0.0 || f < best_f) {
      best_f = f;
      best = PlaceResult{p, f, iters};
    }
  }
  return best;
}

// Maintains the map across ticks: anchors are re-embedded only when absent or
// when the device set changed; user coordinates are recomputed every call
// (warm-started from their previous position when available). Users without
// three finite anchor latencies are left unlocalized.
inline LatencyMap refresh_map(const LatencyMatrix& m, const std::vector<EndUser>& users,
                              const std::vector<EdgeDevice>& devices,
                              const std::optional<LatencyMap>& previous,
                              const LatencyModelParams& lat, const EmbeddingParams& emb,
                              const PlacementSolverParams& solver, std::uint64_t seed) {
  LatencyMap out;
  out.device_ids.reserve(devices.size());
  for (const auto& d : devices) out.device_ids.push_back(d.id);
  out.embedded_at = m.measured_at;

  const bool reuse_anchors = previous && previous->device_ids == out.device_ids;
  if (reuse_anchors) {
    out.anchor_coords = previous->anchor_coords;
    out.stress_value = normalized_stress(out.anchor_coords, m.device_device, lat.ceiling_ms);
  } else {
    EmbedResult er = embed_devices(m.device_device, m.n_devices, lat.ceiling_ms,
                                   substream_seed(seed, "embed"), emb.max_iter, emb.tol,
                                   emb.restarts);
    out.anchor_coords = std::move(er.coords);
    out.stress_value = er.stress;
  }

  out.user_coords.resize(users.size());
  std::vector<double> row(devices.size());
  for (std::size_t u = 0; u < users.size(); ++u) {
    for (int d = 0; d < m.n_devices; ++d) row[d] = m.ud(static_cast<int>(u), d);
    std::optional<Vec2> warm;
    if (reuse_anchors && previous->user_coords.size() == users.size())
      warm = previous->user_coords[u];
    PlaceOpts opts;
    if (warm) {
      opts.max_iter = solver.warm_max_iter;
      opts.tol = solver.warm_tol;
      opts.restarts = 1;
    } else {
      opts.max_iter = solver.cold_max_iter;
      opts.tol = solver.cold_tol;
      opts.restarts = solver.cold_restarts;
    }
    try {
      out.user_coords[u] =
          place_user(row, out.anchor_coords, lat.ceiling_ms,
                     substream_seed(seed, "place", users[u].id), opts, warm)
              .pos;
    } catch (const InsufficientAnchors&) {
      out.user_coords[u] = std::nullopt;
    }
  }
  return out;
}

}  // namespace edgeseg
