#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "lisor/data.hpp"
#include "lisor/random.hpp"
#include "lisor/rnn.hpp"

namespace lisor {

struct TracePoint {
  Vector h;
  std::size_t seq_index = 1;  // 1-based sequence number i
  std::size_t position = 1;   // 1-based step j
  Symbol symbol = 0;          // token consumed at step j

  friend bool operator==(const TracePoint& a, const TracePoint& b) {
    return a.seq_index == b.seq_index && a.position == b.position && a.symbol == b.symbol &&
           a.h.size() == b.h.size() && a.h == b.h;
  }
};

// Hidden-state points of a split, sequence-major then by position.
struct TracePool {
  std::size_t d = 0;
  std::size_t n_sequences = 0;
  std::vector<TracePoint> points;

  friend bool operator==(const TracePool&, const TracePool&) = default;
};

// Throws StructuralError unless every sequence 1..n_sequences has positions
// 1..T_i in order and every h has length d.
void validate(const TracePool& pool);

TracePool collect_traces(const RnnModel& model, const std::vector<Sequence>& split,
                         const ForwardOptions& opts = {});

// [h, 0..0, j * scale, 0..0] with the position value in extra slot i.
std::vector<Vector> augment_position(const TracePool& pool, double position_scale = 1.0);

enum class ClusterMethod { KMeansPP, KMeansX };
enum class ClusterSpace { Raw, PositionAugmented };

std::string_view to_string(ClusterMethod method);
std::string_view to_string(ClusterSpace space);
// Accepts "kmeans++"/"LISOR-k" and "kmeans-x"/"LISOR-x".
ClusterMethod parse_cluster_method(std::string_view name);

std::size_t count_distinct(const std::vector<Vector>& points);

// Index of the closest centroid by squared Euclidean distance; ties go to the
// lowest index.
std::size_t nearest_centroid(const Vector& point, const std::vector<Vector>& centroids);

// D^2-weighted seeding. Throws ClusteringError when k exceeds the number of
// distinct points or is zero.
std::vector<Vector> kmeanspp_init(const std::vector<Vector>& points, std::size_t k, Rng& rng);

struct Clustering {
  std::size_t k = 0;
  std::vector<Vector> centroids;
  std::vector<std::size_t> assign;
  ClusterSpace space = ClusterSpace::Raw;
  double cost = 0.0;
  std::size_t iterations = 0;
  // Cost after the initial assignment and after every subsequent one.
  std::vector<double> cost_history;
};

inline constexpr std::size_t kDefaultMaxIterations = 300;

// Lloyd iterations from the given centroids until the assignment is stable or
// max_iterations is hit. Empty clusters take the point farthest from its
// current centroid.
Clustering lloyd(const std::vector<Vector>& points, std::vector<Vector> centroids,
                 std::size_t max_iterations = kDefaultMaxIterations);

struct ClusterOptions {
  double position_scale = 1.0;
  std::size_t max_iterations = kDefaultMaxIterations;
};

Clustering cluster_pool(const TracePool& pool, std::size_t k, ClusterMethod method, Rng& rng,
                        const ClusterOptions& opts = {});

// JSON Lines: header {"d":..,"n_sequences":..,"alphabet":[..]} then one
// {"i":..,"j":..,"symbol":..,"h":[..]} per point.
void write_trace_pool(std::ostream& out, const TracePool& pool, const Alphabet& alphabet);
TracePool read_trace_pool(std::istream& in, Alphabet* alphabet_out = nullptr);

}  // namespace lisor
