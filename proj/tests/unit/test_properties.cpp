#include <gtest/gtest.h>

#include "lisor/fsa.hpp"
#include "support/oracles.hpp"

using namespace lisor;

TEST(Property, LloydCostMonotoneAndNearest) {
  Rng rng(101);
  for (int n = 0; n < 1000; ++n) {
    const std::size_t count = 2 + rng.index(40);
    const std::size_t d = 1 + rng.index(4);
    auto pts = oracle::random_points(rng, count, d, 1.0 + static_cast<double>(rng.index(10)));
    // Duplicates make ties and empty clusters more likely.
    if (rng.index(3) == 0) {
      const std::vector<Vector> dup(pts.begin(), pts.begin() + static_cast<long>(count / 2));
      pts.insert(pts.end(), dup.begin(), dup.end());
    }
    const std::size_t k = 1 + rng.index(std::min<std::size_t>(8, count_distinct(pts)));
    ASSERT_EQ(oracle::check_lloyd(pts, k, rng), "") << "set " << n;
  }
}

TEST(Property, CellOutputsBounded) {
  Rng rng(202);
  for (CellKind kind : kAllCellKinds)
    for (int n = 0; n < 1000; ++n) ASSERT_EQ(oracle::check_cell_bounded(kind, rng), "") << to_string(kind);
}

TEST(Property, CountConservationAndDeterminism) {
  Rng rng(303);
  for (int n = 0; n < 300; ++n) {
    const std::size_t d = 1 + rng.index(3);
    const RnnModel m = RnnModel::random(CellKind::LSTM, Alphabet::binary(), {2, d, 1}, 1.0, rng);
    const TracePool pool = oracle::random_pool(rng, 10, 8, d, 2);
    std::vector<Vector> raw;
    for (const auto& p : pool.points) raw.push_back(p.h);
    const std::size_t k = 1 + rng.index(std::min<std::size_t>(6, count_distinct(raw)));
    const Extraction ex = extract_fsa(m, pool, k, ClusterMethod::KMeansPP, rng);
    ASSERT_EQ(oracle::check_counts(pool, ex.clustering, ex.counts), "");
    ASSERT_EQ(oracle::check_determinism(ex.fsa, ex.counts), "");
  }
}

TEST(Property, SerializationRoundTrips) {
  Rng rng(404);
  for (int n = 0; n < 200; ++n) ASSERT_EQ(oracle::check_roundtrips(rng), "") << "case " << n;
}
