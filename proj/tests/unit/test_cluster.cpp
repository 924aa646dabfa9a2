#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "lisor/cluster.hpp"
#include "lisor/data.hpp"
#include "lisor/errors.hpp"
#include "support/oracles.hpp"

using namespace lisor;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

RnnModel random_model(std::uint64_t seed, std::size_t hidden = 4) {
  Rng rng(seed);
  return RnnModel::random(CellKind::MGU, Alphabet::binary(), {2, hidden, 2}, 1.0, rng);
}

}  // namespace

TEST(CollectTraces, SixteenStringsGiveSixtyFourPoints) {
  Task0110Options o;
  const Dataset ds = gen_task_0110(o);
  const TracePool pool = collect_traces(random_model(1), ds.validation);
  EXPECT_EQ(pool.points.size(), 64u);
  EXPECT_EQ(pool.n_sequences, 16u);
  EXPECT_EQ(pool.d, 4u);
  std::size_t n = 0;
  for (std::size_t i = 0; i < ds.validation.size(); ++i)
    for (std::size_t j = 0; j < 4; ++j, ++n) {
      EXPECT_EQ(pool.points[n].seq_index, i + 1);
      EXPECT_EQ(pool.points[n].position, j + 1);
      EXPECT_EQ(pool.points[n].symbol, ds.validation[i].tokens[j]);
    }
  EXPECT_NO_THROW(validate(pool));
}

TEST(CollectTraces, SingleStep) {
  const TracePool pool = collect_traces(random_model(2), {Sequence{{1}, 0}});
  ASSERT_EQ(pool.points.size(), 1u);
  EXPECT_EQ(pool.points[0].position, 1u);
  EXPECT_EQ(pool.points[0].symbol, 1u);
}

TEST(TracePool, ValidateCatchesGaps) {
  TracePool pool = collect_traces(random_model(2), {Sequence{{1, 0, 1}, 0}, Sequence{{0}, 0}});
  pool.points[1].position = 3;
  EXPECT_THROW(validate(pool), StructuralError);
}

TEST(AugmentPosition, PlacesPositionInSequenceSlot) {
  TracePool pool;
  pool.d = 2;
  pool.n_sequences = 3;
  for (std::size_t i = 1; i <= 3; ++i)
    for (std::size_t j = 1; j <= 4; ++j) pool.points.push_back({vec({0.1 * static_cast<double>(i), 0.2}), i, j, 0});
  pool.points[7].h = vec({0.1, 0.2});
  const auto aug = augment_position(pool);
  ASSERT_EQ(aug.size(), 12u);
  EXPECT_EQ(aug[7], vec({0.1, 0.2, 0.0, 4.0, 0.0}));
  for (const auto& a : aug) EXPECT_EQ(a.size(), 5);
  EXPECT_EQ(augment_position(pool, 0.5)[7], vec({0.1, 0.2, 0.0, 2.0, 0.0}));
}

TEST(AugmentPosition, SingleSequence) {
  TracePool pool = collect_traces(random_model(3), {Sequence{{0, 1, 1}, 0}});
  const auto aug = augment_position(pool);
  for (std::size_t n = 0; n < aug.size(); ++n) {
    EXPECT_EQ(aug[n].size(), 5);
    EXPECT_EQ(aug[n][4], static_cast<double>(n + 1));
  }
}

TEST(KMeansPP, KEqualsNPicksEveryPoint) {
  Rng rng(4);
  std::vector<Vector> pts{vec({0, 0}), vec({1, 0}), vec({0, 3}), vec({5, 5}), vec({-2, 1})};
  auto c = kmeanspp_init(pts, pts.size(), rng);
  auto key = [](const Vector& v) { return std::make_pair(v[0], v[1]); };
  std::set<std::pair<double, double>> got, want;
  for (const auto& v : c) got.insert(key(v));
  for (const auto& v : pts) want.insert(key(v));
  EXPECT_EQ(got, want);
}

TEST(KMeansPP, SingleCentroidIsAnInputPoint) {
  Rng rng(5);
  std::vector<Vector> pts{v1(1), v1(2), v1(7)};
  const auto c = kmeanspp_init(pts, 1, rng);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_TRUE(std::find(pts.begin(), pts.end(), c[0]) != pts.end());
}

TEST(KMeansPP, TooManyClustersRejected) {
  Rng rng(6);
  std::vector<Vector> pts{v1(1), v1(1), v1(2)};
  EXPECT_THROW(kmeanspp_init(pts, 3, rng), ClusteringError);
  EXPECT_THROW(kmeanspp_init(pts, 0, rng), ClusteringError);
  EXPECT_EQ(count_distinct(pts), 2u);
}

TEST(KMeansPP, TwoBlobsSplitAlmostAlways) {
  int split = 0;
  for (int run = 0; run < 100; ++run) {
    Rng rng(1000 + run);
    std::vector<Vector> pts;
    for (int i = 0; i < 20; ++i) pts.push_back(vec({rng.uniform(-1, 1), rng.uniform(-1, 1)}));
    for (int i = 0; i < 20; ++i) pts.push_back(vec({100 + rng.uniform(-1, 1), rng.uniform(-1, 1)}));
    const auto c = kmeanspp_init(pts, 2, rng);
    if ((c[0][0] < 50) != (c[1][0] < 50)) ++split;
  }
  EXPECT_GE(split, 95);
}

TEST(KMeansPP, NeverRepeatsAChosenPoint) {
  Rng rng(8);
  for (int run = 0; run < 200; ++run) {
    auto pts = oracle::random_points(rng, 12, 2, 1.0);
    const auto c = kmeanspp_init(pts, 12, rng);
    for (std::size_t a = 0; a < c.size(); ++a)
      for (std::size_t b = a + 1; b < c.size(); ++b) EXPECT_NE(c[a], c[b]);
  }
}

TEST(Lloyd, SingleClusterIsTheMean) {
  std::vector<Vector> pts{vec({0, 0}), vec({2, 0}), vec({1, 3})};
  const Clustering c = lloyd(pts, {pts[0]});
  EXPECT_TRUE(c.centroids[0].isApprox(vec({1, 1})));
  EXPECT_NEAR(c.cost, 1 + 1 + 1 + 1 + 0 + 4, 1e-12);
}

TEST(Lloyd, FourPointsOnALineMatchBruteForce) {
  std::vector<Vector> pts{v1(0), v1(1), v1(10), v1(11)};
  // Every 2-partition; the best one is {0,1},{10,11}.
  double best = 1e300;
  unsigned best_mask = 0;
  for (unsigned mask = 1; mask < 15; ++mask) {
    double cost = 0;
    for (int side = 0; side < 2; ++side) {
      double sum = 0;
      int n = 0;
      for (int i = 0; i < 4; ++i)
        if (((mask >> i) & 1u) == static_cast<unsigned>(side)) sum += pts[i][0], ++n;
      for (int i = 0; i < 4; ++i)
        if (((mask >> i) & 1u) == static_cast<unsigned>(side)) cost += std::pow(pts[i][0] - sum / n, 2);
    }
    if (cost < best) best = cost, best_mask = mask;
  }
  EXPECT_TRUE(best_mask == 0b0011u || best_mask == 0b1100u);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Clustering c = lloyd(pts, kmeanspp_init(pts, 2, rng));
    EXPECT_NEAR(c.cost, best, 1e-12);
    EXPECT_EQ(c.assign[0], c.assign[1]);
    EXPECT_EQ(c.assign[2], c.assign[3]);
    EXPECT_NE(c.assign[0], c.assign[2]);
    std::vector<double> cs{c.centroids[0][0], c.centroids[1][0]};
    std::sort(cs.begin(), cs.end());
    EXPECT_DOUBLE_EQ(cs[0], 0.5);
    EXPECT_DOUBLE_EQ(cs[1], 10.5);
  }
}

TEST(Lloyd, FixedPoint) {
  Rng rng(12);
  const auto pts = oracle::random_points(rng, 40, 3, 2.0);
  const Clustering a = lloyd(pts, kmeanspp_init(pts, 4, rng));
  const Clustering b = lloyd(pts, a.centroids);
  EXPECT_EQ(a.assign, b.assign);
  EXPECT_EQ(b.iterations, 1u);
}

TEST(Lloyd, EmptyClusterRepaired) {
  std::vector<Vector> pts{v1(0), v1(1), v1(2), v1(10)};
  // The third centroid attracts nothing.
  const Clustering c = lloyd(pts, {v1(0), v1(10), v1(1000)});
  std::set<std::size_t> used(c.assign.begin(), c.assign.end());
  EXPECT_EQ(used.size(), 3u);
}

TEST(Lloyd, TiesGoToLowestId) {
  EXPECT_EQ(nearest_centroid(v1(5), {v1(4), v1(6)}), 0u);
  EXPECT_EQ(nearest_centroid(v1(5), {v1(7), v1(4), v1(6)}), 1u);
}

TEST(ClusterPool, SpaceFollowsMethod) {
  Task0110Options o;
  const Dataset ds = gen_task_0110(o);
  const TracePool pool = collect_traces(random_model(9), ds.validation);
  Rng r1(1), r2(1);
  EXPECT_EQ(cluster_pool(pool, 3, ClusterMethod::KMeansPP, r1).space, ClusterSpace::Raw);
  EXPECT_EQ(cluster_pool(pool, 3, ClusterMethod::KMeansX, r2).space, ClusterSpace::PositionAugmented);
  EXPECT_EQ(cluster_pool(pool, 3, ClusterMethod::KMeansX, r2).centroids[0].size(), 4 + 16);
}

TEST(ClusterPool, Deterministic) {
  Task0110Options o;
  const TracePool pool = collect_traces(random_model(9), gen_task_0110(o).validation);
  for (ClusterMethod m : {ClusterMethod::KMeansPP, ClusterMethod::KMeansX}) {
    Rng a(77), b(77);
    const Clustering x = cluster_pool(pool, 5, m, a);
    const Clustering y = cluster_pool(pool, 5, m, b);
    EXPECT_EQ(x.assign, y.assign);
    EXPECT_EQ(x.centroids, y.centroids);
  }
}

TEST(ClusterPool, KMeansXSeparatesSequencesWhenHiddenStatesCoincide) {
  TracePool pool;
  pool.d = 2;
  pool.n_sequences = 3;
  for (std::size_t i = 1; i <= 3; ++i)
    for (std::size_t j = 1; j <= 3; ++j) pool.points.push_back({vec({0.3, -0.3}), i, j, 0});
  Rng rng(3);
  const Clustering c = cluster_pool(pool, 3, ClusterMethod::KMeansX, rng);
  for (std::size_t n = 0; n < pool.points.size(); ++n)
    for (std::size_t m = 0; m < pool.points.size(); ++m)
      EXPECT_EQ(c.assign[n] == c.assign[m], pool.points[n].seq_index == pool.points[m].seq_index);
}

TEST(ClusterMethodNames, Parse) {
  EXPECT_EQ(parse_cluster_method("LISOR-k"), ClusterMethod::KMeansPP);
  EXPECT_EQ(parse_cluster_method("kmeans++"), ClusterMethod::KMeansPP);
  EXPECT_EQ(parse_cluster_method("LISOR-x"), ClusterMethod::KMeansX);
  EXPECT_EQ(parse_cluster_method("kmeans-x"), ClusterMethod::KMeansX);
  EXPECT_THROW(parse_cluster_method("dbscan"), ConfigError);
}

TEST(TracePoolJson, RoundTripAndHeader) {
  Task0110Options o;
  const TracePool pool = collect_traces(random_model(10), gen_task_0110(o).validation);
  std::stringstream ss;
  write_trace_pool(ss, pool, Alphabet::binary());
  const std::string text = ss.str();
  EXPECT_NE(text.find(R"("d":4)"), std::string::npos);
  EXPECT_NE(text.find(R"("n_sequences":16)"), std::string::npos);
  EXPECT_NE(text.find(R"({"i":2,"j":4,"symbol":"1","h":[)"), std::string::npos);
  Alphabet a;
  EXPECT_EQ(read_trace_pool(ss, &a), pool);
  EXPECT_EQ(a, Alphabet::binary());
}
