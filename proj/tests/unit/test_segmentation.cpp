#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <optional>
#include <set>
#include <vector>

#include <edgeseg/errors.hpp>
#include <edgeseg/segmentation.hpp>

#include "support/oracles.hpp"

using namespace edgeseg;

namespace {

EndUser localized_user(UserId id, Vec2 map_pos, double speed) {
  EndUser u;
  u.id = id;
  u.speed_mps = speed;
  u.map_pos = map_pos;
  return u;
}

std::vector<ClusterPoint> points_at(std::initializer_list<std::pair<UserId, Vec2>> spec) {
  std::vector<ClusterPoint> pts;
  for (const auto& [id, pos] : spec) pts.push_back({id, pos});
  return pts;
}

}  // namespace

TEST_CASE("speed threshold splits users into mobility layers", "[segmentation]") {
  std::vector<EndUser> users = {
      localized_user(0, {0, 0}, 0.0), localized_user(1, {1, 0}, 1.2),
      localized_user(2, {2, 0}, 9.0), localized_user(3, {3, 0}, 14.0)};
  auto layers = segregate(users, 3.0);
  CHECK(layers.low == std::vector<UserId>{0, 1});
  CHECK(layers.high == std::vector<UserId>{2, 3});
}

TEST_CASE("exactly-at-threshold speed counts as low mobility", "[segmentation]") {
  std::vector<EndUser> users = {localized_user(0, {0, 0}, 3.0)};
  auto layers = segregate(users, 3.0);
  CHECK(layers.low == std::vector<UserId>{0});
  CHECK(layers.high.empty());
}

TEST_CASE("unlocalized users never enter the mobility layers", "[segmentation]") {
  std::vector<EndUser> users = {localized_user(0, {0, 0}, 1.0), localized_user(1, {1, 0}, 9.0)};
  users.push_back([] {
    EndUser u;
    u.id = 2;
    u.speed_mps = 1.0;  // would be low, but has no map position
    return u;
  }());
  auto layers = segregate(users, 3.0);
  CHECK(layers.low == std::vector<UserId>{0});
  CHECK(layers.high == std::vector<UserId>{1});
}

TEST_CASE("cluster count rounds half up and never drops below one", "[segmentation]") {
  CHECK(select_k(0, 50) == 1);
  CHECK(select_k(10, 50) == 1);   // 0.2 rounds to 0, floored to 1
  CHECK(select_k(25, 50) == 1);   // 0.5 rounds to 1
  CHECK(select_k(75, 50) == 2);   // 1.5 rounds to 2
  CHECK(select_k(100, 50) == 2);
  CHECK(select_k(149, 50) == 3);  // 2.98 rounds to 3
  CHECK(select_k(300, 30) == 10);
}

TEST_CASE("single-cluster kmeans lands on the centroid", "[segmentation]") {
  auto pts = points_at({{0, {0, 0}}, {1, {2, 0}}, {2, {4, 0}}});
  auto r = kmeans_lax(pts, 1, 100.0, 42);
  REQUIRE(r.clustering.clusters.size() == 1);
  CHECK(r.clustering.clusters[0].center == Vec2{2.0, 0.0});
  CHECK(r.clustering.clusters[0].members == std::vector<UserId>{0, 1, 2});
  CHECK(r.wcss == Catch::Approx(8.0));
  CHECK(r.clustering.nomads.empty());
}

TEST_CASE("points beyond the outlier radius become nomads", "[segmentation]") {
  // centroid of all four is (28, 0); only the far point exceeds radius 40
  auto pts = points_at({{0, {0, 0}}, {1, {4, 0}}, {2, {8, 0}}, {3, {100, 0}}});
  auto r = kmeans_lax(pts, 1, 40.0, 42);
  REQUIRE(r.clustering.clusters.size() == 1);
  CHECK(r.clustering.nomads == std::vector<UserId>{3});
  CHECK(r.clustering.clusters[0].members == std::vector<UserId>{0, 1, 2});
  // centroid is not recomputed after removal; radius covers remaining members
  CHECK(r.clustering.clusters[0].center == Vec2{28.0, 0.0});
  CHECK(r.clustering.clusters[0].radius == Catch::Approx(28.0));
}

TEST_CASE("well-separated blobs are recovered exactly", "[segmentation]") {
  auto pts = points_at({{0, {0, 0}}, {1, {2, 1}}, {2, {1, 2}},
                        {3, {100, 100}}, {4, {102, 101}}, {5, {101, 99}}});
  auto r = kmeans_lax(pts, 2, 50.0, 7);
  REQUIRE(r.clustering.clusters.size() == 2);
  std::set<std::vector<UserId>> got = {r.clustering.clusters[0].members,
                                       r.clustering.clusters[1].members};
  std::set<std::vector<UserId>> want = {{0, 1, 2}, {3, 4, 5}};
  CHECK(got == want);
  CHECK(r.wcss == Catch::Approx(oracles::best_wcss(pts, 2)));
}

TEST_CASE("objective trace never increases across lloyd iterations", "[segmentation]") {
  Rng rng(21);
  std::vector<ClusterPoint> pts;
  for (UserId id = 0; id < 40; ++id)
    pts.push_back({id, {rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0)}});
  auto r = kmeans_lax(pts, 3, 1000.0, 5);
  REQUIRE(r.wcss_trace.size() >= 2);
  for (std::size_t t = 1; t < r.wcss_trace.size(); ++t)
    CHECK(r.wcss_trace[t] <= r.wcss_trace[t - 1] + 1e-9);
}

TEST_CASE("kmeans stays within five percent of exhaustive optimum", "[segmentation][oracle]") {
  for (std::uint64_t inst = 0; inst < 8; ++inst) {
    Rng rng(substream_seed(99, "wcss", inst));
    const int n = 5 + static_cast<int>(rng.uniform_index(4));  // 5..8 points
    const int k = 2 + static_cast<int>(rng.uniform_index(2));  // 2..3 clusters
    std::vector<ClusterPoint> pts;
    for (int i = 0; i < n; ++i)
      pts.push_back({static_cast<UserId>(i), {rng.uniform(0.0, 50.0), rng.uniform(0.0, 50.0)}});
    auto r = kmeans_lax(pts, k, 1e9, inst);
    const double exact = oracles::best_wcss(pts, k);
    INFO("instance " << inst << " n=" << n << " k=" << k);
    CHECK(r.wcss <= exact * 1.05 + 1e-9);
    CHECK(r.wcss >= exact - 1e-9);  // cannot beat the true optimum
  }
}

TEST_CASE("kmeans rejects empty input and clamps oversized k", "[segmentation]") {
  CHECK_THROWS_AS(kmeans_lax({}, 1, 10.0, 1), EmptyInput);
  auto pts = points_at({{0, {0, 0}}, {1, {5, 5}}});
  auto r = kmeans_lax(pts, 10, 100.0, 1);  // k clamps to n
  std::size_t total = 0;
  for (const auto& c : r.clustering.clusters) total += c.members.size();
  CHECK(total + r.clustering.nomads.size() == 2);
}

TEST_CASE("radial clustering claims dense neighborhoods first", "[segmentation]") {
  // a three-point blob and a two-point blob, far apart
  auto pts = points_at({{0, {0, 0}}, {1, {2, 0}}, {2, {0, 2}},
                        {10, {50, 50}}, {11, {52, 50}}});
  auto r = radial_cluster(pts, 5.0, 0.25, 2);
  REQUIRE(r.clusters.size() == 2);
  CHECK(r.clusters[0].members == std::vector<UserId>{0, 1, 2});  // denser blob first
  CHECK(r.clusters[1].members == std::vector<UserId>{10, 11});
  CHECK(r.nomads.empty());
  // centers sit on actual member points and carry the configured radius
  CHECK(r.clusters[0].center == Vec2{0.0, 0.0});
  CHECK(r.clusters[0].radius == 5.0);
  CHECK(r.clusters[1].radius == 5.0);
}

TEST_CASE("radial ties break toward the lowest user id", "[segmentation]") {
  auto pts = points_at({{5, {0, 0}}, {3, {1, 0}}, {1, {100, 0}}, {2, {101, 0}}});
  auto r = radial_cluster(pts, 5.0, 0.0, 2);
  REQUIRE(r.clusters.size() == 2);
  // both pairs tie at two neighbors; id 1 wins the first pick
  CHECK(r.clusters[0].center == Vec2{100.0, 0.0});
  CHECK(r.clusters[0].members == std::vector<UserId>{1, 2});
  CHECK(r.clusters[1].members == std::vector<UserId>{3, 5});
}

TEST_CASE("isolated points fall below min_members and become nomads", "[segmentation]") {
  auto pts = points_at({{0, {0, 0}}, {1, {1, 0}}, {7, {500, 500}}});
  auto r = radial_cluster(pts, 5.0, 0.25, 2);
  REQUIRE(r.clusters.size() == 1);
  CHECK(r.clusters[0].members == std::vector<UserId>{0, 1});
  CHECK(r.nomads == std::vector<UserId>{7});
}

TEST_CASE("min_members of one clusters everything", "[segmentation]") {
  auto pts = points_at({{0, {0, 0}}, {9, {500, 500}}});
  auto r = radial_cluster(pts, 5.0, 0.25, 1);
  CHECK(r.clusters.size() == 2);
  CHECK(r.nomads.empty());
}

TEST_CASE("padded boundary extends the subspace beyond its radius", "[segmentation]") {
  Subspace s;
  s.center = {0.0, 0.0};
  s.radius = 40.0;
  s.padding_fraction = 0.25;
  CHECK(s.boundary() == Catch::Approx(50.0));
  CHECK(s.contains({49.0, 0.0}));
  CHECK(s.contains({50.0, 0.0}));
  CHECK_FALSE(s.contains({50.1, 0.0}));
}

TEST_CASE("devices are shared into every overlapping subspace", "[segmentation]") {
  std::vector<Subspace> subs(2);
  subs[0].center = {0.0, 0.0};
  subs[0].radius = 10.0;
  subs[0].padding_fraction = 0.5;  // boundary 15
  subs[1].center = {20.0, 0.0};
  subs[1].radius = 10.0;
  subs[1].padding_fraction = 0.5;
  std::vector<Vec2> anchors = {{5.0, 0.0}, {12.0, 0.0}, {40.0, 0.0}};
  std::vector<DeviceId> ids = {100, 101, 102};
  attach_devices(subs, anchors, ids);
  CHECK(subs[0].devices == std::vector<DeviceId>{100, 101});
  // anchor at 12 is inside both boundaries; anchor at 5 sits exactly on the
  // second boundary (inclusive); anchor at 40 is 20 away, outside both
  CHECK(subs[1].devices == std::vector<DeviceId>{100, 101});
}

TEST_CASE("a subspace with no anchor in reach gets its nearest one", "[segmentation]") {
  std::vector<Subspace> subs(1);
  subs[0].center = {1000.0, 1000.0};
  subs[0].radius = 5.0;
  subs[0].padding_fraction = 0.0;
  std::vector<Vec2> anchors = {{0.0, 0.0}, {900.0, 900.0}, {500.0, 0.0}};
  std::vector<DeviceId> ids = {7, 8, 9};
  attach_devices(subs, anchors, ids);
  CHECK(subs[0].devices == std::vector<DeviceId>{8});
}

TEST_CASE("strict assignment covers every point and breaks ties low", "[segmentation]") {
  std::vector<Vec2> centers = {{0.0, 0.0}, {10.0, 0.0}};
  auto pts = points_at({{0, {5, 0}}, {1, {2, 0}}, {2, {9, 0}}});
  auto assign = strict_assign(pts, centers);
  CHECK(assign == std::vector<int>{0, 0, 1});  // point 0 is equidistant, goes low
  CHECK(strict_assign(pts, {}) == std::vector<int>{-1, -1, -1});
}

TEST_CASE("cluster health counts lost and added against the creation roster", "[segmentation]") {
  std::vector<UserId> roster = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  SECTION("one lost, one added") {
    std::vector<UserId> current = {0, 1, 2, 3, 4, 5, 6, 7, 8, 10};
    CHECK(cluster_health(roster, current) == Catch::Approx(0.2));
  }
  SECTION("identical roster has zero churn") {
    CHECK(cluster_health(roster, roster) == 0.0);
  }
  SECTION("full turnover exceeds one") {
    std::vector<UserId> small = {0, 1, 2, 3};
    std::vector<UserId> replaced = {10, 11, 12, 13, 14, 15};
    CHECK(cluster_health(small, replaced) == Catch::Approx(2.5));
  }
  SECTION("everyone left") {
    std::vector<UserId> small = {0, 1};
    CHECK(cluster_health(small, {}) == Catch::Approx(1.0));
  }
  SECTION("empty creation roster is a contract violation") {
    CHECK_THROWS_AS(cluster_health({}, roster), EmptyRoster);
  }
}

namespace {

// A small world: localized users in two spatial groups, three anchors.
struct SegFixture {
  std::vector<std::optional<Vec2>> coords;
  MobilityLayers layers;
  std::vector<Vec2> anchors = {{0.0, 0.0}, {30.0, 0.0}, {0.0, 30.0}};
  std::vector<DeviceId> device_ids = {0, 1, 2};
  SegmentationParams params;

  SegFixture() {
    params.kmeans.target_cluster_size = 10;
    params.kmeans.outlier_radius = 1000.0;
    params.radial.radius = 6.0;
    params.radial.min_members = 2;
    Rng rng(31);
    for (UserId id = 0; id < 24; ++id) {
      Vec2 base = id % 2 == 0 ? Vec2{5.0, 5.0} : Vec2{25.0, 25.0};
      coords.emplace_back(Vec2{base.x + rng.uniform(-3.0, 3.0), base.y + rng.uniform(-3.0, 3.0)});
      if (id < 16)
        layers.low.push_back(id);
      else
        layers.high.push_back(id);
    }
  }
};

}  // namespace

TEST_CASE("segmentation partitions localized users between subspaces and nomads",
          "[segmentation]") {
  SegFixture f;
  auto seg = build_segmentation(f.coords, f.layers, f.anchors, f.device_ids, f.params, 42, 0.0);

  std::multiset<UserId> seen(seg.nomads.begin(), seg.nomads.end());
  for (const auto& s : seg.subspaces) {
    CHECK(std::is_sorted(s.members.begin(), s.members.end()));
    CHECK_FALSE(s.members.empty());
    CHECK_FALSE(s.devices.empty());
    CHECK(s.roster_at_creation == s.members);
    for (UserId id : s.members) seen.insert(id);
  }
  REQUIRE(seen.size() == 24);
  for (UserId id = 0; id < 24; ++id) CHECK(seen.count(id) == 1);
  // subspace ids follow their index
  for (std::size_t i = 0; i < seg.subspaces.size(); ++i)
    CHECK(seg.subspaces[i].id == static_cast<SubspaceId>(i));
}

TEST_CASE("each subspace draws members from a single mobility layer", "[segmentation]") {
  SegFixture f;
  auto seg = build_segmentation(f.coords, f.layers, f.anchors, f.device_ids, f.params, 42, 0.0);
  bool saw_low = false, saw_high = false;
  for (const auto& s : seg.subspaces) {
    const auto& layer_ids =
        s.layer == MobilityClass::LowMobility ? f.layers.low : f.layers.high;
    (s.layer == MobilityClass::LowMobility ? saw_low : saw_high) = true;
    for (UserId id : s.members)
      CHECK(std::binary_search(layer_ids.begin(), layer_ids.end(), id));
  }
  CHECK(saw_low);
  CHECK(saw_high);
}

TEST_CASE("unlocalized users are reported as nomads", "[segmentation]") {
  SegFixture f;
  f.coords.emplace_back(std::nullopt);  // user 24, never in any layer
  auto seg = build_segmentation(f.coords, f.layers, f.anchors, f.device_ids, f.params, 42, 0.0);
  CHECK(std::binary_search(seg.nomads.begin(), seg.nomads.end(), UserId{24}));
}

TEST_CASE("zero users produce an empty segmentation", "[segmentation]") {
  SegmentationParams params;
  auto seg = build_segmentation({}, {}, {{0, 0}, {1, 0}, {0, 1}}, {0, 1, 2}, params, 1, 0.0);
  CHECK(seg.subspaces.empty());
  CHECK(seg.nomads.empty());
}

TEST_CASE("pedestrian-only populations build only low-mobility subspaces", "[segmentation]") {
  SegFixture f;
  f.layers.low.insert(f.layers.low.end(), f.layers.high.begin(), f.layers.high.end());
  std::sort(f.layers.low.begin(), f.layers.low.end());
  f.layers.high.clear();
  auto seg = build_segmentation(f.coords, f.layers, f.anchors, f.device_ids, f.params, 42, 0.0);
  REQUIRE_FALSE(seg.subspaces.empty());
  for (const auto& s : seg.subspaces) CHECK(s.layer == MobilityClass::LowMobility);
}

TEST_CASE("strict mode leaves no localized user unassigned", "[segmentation]") {
  SegFixture f;
  // push two low users far away so lax would shed them as outliers
  f.params.kmeans.outlier_radius = 15.0;
  f.coords[0] = Vec2{300.0, 300.0};
  f.coords[2] = Vec2{-300.0, 200.0};

  auto lax = build_segmentation(f.coords, f.layers, f.anchors, f.device_ids, f.params, 42, 0.0);
  f.params.mode = ClusteringMode::Strict;
  auto strict = build_segmentation(f.coords, f.layers, f.anchors, f.device_ids, f.params, 42, 0.0);

  CHECK_FALSE(lax.nomads.empty());
  CHECK(strict.nomads.empty());

  // strict keeps every lax member in the same layer, plus the former nomads
  std::size_t lax_total = 0, strict_total = 0;
  for (const auto& s : lax.subspaces) lax_total += s.members.size();
  for (const auto& s : strict.subspaces) strict_total += s.members.size();
  CHECK(strict_total == lax_total + lax.nomads.size());
}

TEST_CASE("membership refresh keeps users inside their padded boundary", "[segmentation]") {
  Segmentation seg;
  seg.subspaces.resize(1);
  auto& s = seg.subspaces[0];
  s.id = 0;
  s.layer = MobilityClass::LowMobility;
  s.center = {0.0, 0.0};
  s.radius = 10.0;
  s.padding_fraction = 0.0;
  s.members = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  s.roster_at_creation = s.members;

  std::vector<std::optional<Vec2>> coords(10, Vec2{1.0, 0.0});
  MobilityLayers layers;
  layers.low = s.members;

  SegmentationParams params;
  params.kmeans.outlier_radius = 1000.0;

  SECTION("no movement: no churn, no rebuild") {
    auto out = maybe_resegment(seg, coords, layers, {{0, 0}, {5, 0}, {0, 5}}, {0, 1, 2}, params,
                               42, 100.0);
    CHECK_FALSE(out.resegmented);
    CHECK(out.mean_churn == 0.0);
    CHECK(out.seg.subspaces[0].members == s.members);
  }

  SECTION("churn exactly at the threshold does not trigger a rebuild") {
    for (UserId id : {7, 8, 9}) coords[id] = Vec2{500.0, 0.0};  // 3 of 10 leave
    auto out = maybe_resegment(seg, coords, layers, {{0, 0}, {5, 0}, {0, 5}}, {0, 1, 2}, params,
                               42, 100.0);
    CHECK(out.mean_churn == Catch::Approx(0.3));
    CHECK_FALSE(out.resegmented);
    CHECK(out.seg.subspaces[0].members == std::vector<UserId>{0, 1, 2, 3, 4, 5, 6});
    CHECK(out.seg.nomads == std::vector<UserId>{7, 8, 9});
    // the creation roster is untouched by a refresh
    CHECK(out.seg.subspaces[0].roster_at_creation == s.roster_at_creation);
  }

  SECTION("churn above the threshold rebuilds from scratch") {
    for (UserId id : {6, 7, 8, 9}) coords[id] = Vec2{500.0, 0.0};  // 4 of 10 leave
    auto out = maybe_resegment(seg, coords, layers, {{0, 0}, {5, 0}, {0, 5}}, {0, 1, 2}, params,
                               42, 100.0);
    CHECK(out.mean_churn == Catch::Approx(0.4));
    CHECK(out.resegmented);
    CHECK(out.seg.created_at == 100.0);
    // the rebuilt segmentation reassigns everyone, resetting rosters
    std::size_t total = 0;
    for (const auto& sub : out.seg.subspaces) {
      total += sub.members.size();
      CHECK(sub.roster_at_creation == sub.members);
    }
    CHECK(total + out.seg.nomads.size() == 10);
  }

  SECTION("drifting users rejoin a boundary that still covers them") {
    s.padding_fraction = 0.5;  // boundary 15
    coords[3] = Vec2{12.0, 0.0};
    auto out = maybe_resegment(seg, coords, layers, {{0, 0}, {5, 0}, {0, 5}}, {0, 1, 2}, params,
                               42, 100.0);
    CHECK(out.mean_churn == 0.0);
    CHECK(out.seg.subspaces[0].members == s.members);
  }
}

TEST_CASE("strict refresh reassigns by nearest center instead of dropping", "[segmentation]") {
  Segmentation seg;
  seg.subspaces.resize(2);
  for (int i = 0; i < 2; ++i) {
    auto& s = seg.subspaces[i];
    s.id = static_cast<SubspaceId>(i);
    s.layer = MobilityClass::LowMobility;
    s.radius = 5.0;
  }
  seg.subspaces[0].center = {0.0, 0.0};
  seg.subspaces[0].members = {0, 1};
  seg.subspaces[0].roster_at_creation = {0, 1};
  seg.subspaces[1].center = {100.0, 0.0};
  seg.subspaces[1].members = {2, 3};
  seg.subspaces[1].roster_at_creation = {2, 3};

  // user 1 wanders into the gap, outside both radii but nearer the second
  std::vector<std::optional<Vec2>> coords = {Vec2{1.0, 0.0}, Vec2{60.0, 0.0}, Vec2{99.0, 0.0},
                                             Vec2{101.0, 0.0}};
  MobilityLayers layers;
  layers.low = {0, 1, 2, 3};

  SegmentationParams params;
  params.mode = ClusteringMode::Strict;
  params.churn_threshold = 10.0;  // isolate the refresh behaviour

  auto out = maybe_resegment(seg, coords, layers, {{0, 0}, {5, 0}, {0, 5}}, {0, 1, 2}, params, 42,
                             1.0);
  CHECK_FALSE(out.resegmented);
  CHECK(out.seg.subspaces[0].members == std::vector<UserId>{0});
  CHECK(out.seg.subspaces[1].members == std::vector<UserId>{1, 2, 3});
  CHECK(out.seg.nomads.empty());
}
