#include "lisor/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include "json.hpp"
#include "lisor/errors.hpp"

namespace lisor {

using ordered_json = nlohmann::ordered_json;

void validate(const TracePool& pool) {
  std::size_t expected_seq = 0;
  std::size_t expected_pos = 0;
  for (const auto& p : pool.points) {
    if (static_cast<std::size_t>(p.h.size()) != pool.d)
      throw StructuralError("trace point has dimension " + std::to_string(p.h.size()) + ", pool d = " +
                            std::to_string(pool.d));
    if (p.position == 1 && p.seq_index == expected_seq + 1) {
      expected_seq = p.seq_index;
      expected_pos = 1;
    } else if (p.seq_index == expected_seq && p.position == expected_pos + 1) {
      expected_pos = p.position;
    } else {
      throw StructuralError("trace points out of order at sequence " + std::to_string(p.seq_index) +
                            ", position " + std::to_string(p.position));
    }
  }
  if (expected_seq != pool.n_sequences)
    throw StructuralError("pool declares " + std::to_string(pool.n_sequences) + " sequences but holds " +
                          std::to_string(expected_seq));
}

TracePool collect_traces(const RnnModel& model, const std::vector<Sequence>& split,
                         const ForwardOptions& opts) {
  if (split.empty()) throw InputError("cannot collect traces from an empty split");
  TracePool pool;
  pool.d = model.dims.hidden;
  pool.n_sequences = split.size();
  for (std::size_t i = 0; i < split.size(); ++i) {
    auto trace = forward(model, split[i].tokens, opts);
    for (std::size_t j = 0; j < trace.h.size(); ++j)
      pool.points.push_back({std::move(trace.h[j]), i + 1, j + 1, trace.symbols[j]});
  }
  return pool;
}

std::vector<Vector> augment_position(const TracePool& pool, double position_scale) {
  const auto d = static_cast<Eigen::Index>(pool.d);
  const auto n = static_cast<Eigen::Index>(pool.n_sequences);
  std::vector<Vector> out;
  out.reserve(pool.points.size());
  for (const auto& p : pool.points) {
    Vector v = Vector::Zero(d + n);
    v.head(d) = p.h;
    v(d + static_cast<Eigen::Index>(p.seq_index) - 1) = static_cast<double>(p.position) * position_scale;
    out.push_back(std::move(v));
  }
  return out;
}

std::string_view to_string(ClusterMethod method) {
  return method == ClusterMethod::KMeansPP ? "kmeans++" : "kmeans-x";
}

std::string_view to_string(ClusterSpace space) {
  return space == ClusterSpace::Raw ? "raw" : "position-augmented";
}

ClusterMethod parse_cluster_method(std::string_view name) {
  if (name == "kmeans++" || name == "LISOR-k") return ClusterMethod::KMeansPP;
  if (name == "kmeans-x" || name == "LISOR-x") return ClusterMethod::KMeansX;
  throw ConfigError("unknown clustering method '" + std::string(name) +
                    "' (expected LISOR-k, LISOR-x, kmeans++ or kmeans-x)");
}

std::size_t count_distinct(const std::vector<Vector>& points) {
  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(points[a].data(), points[a].data() + points[a].size(),
                                        points[b].data(), points[b].data() + points[b].size());
  };
  std::sort(idx.begin(), idx.end(), less);
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < idx.size(); ++i)
    if (i == 0 || points[idx[i - 1]] != points[idx[i]]) ++distinct;
  return distinct;
}

std::size_t nearest_centroid(const Vector& point, const std::vector<Vector>& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double dist = (point - centroids[c]).squaredNorm();
    if (dist < best_d) {
      best_d = dist;
      best = c;
    }
  }
  return best;
}

std::vector<Vector> kmeanspp_init(const std::vector<Vector>& points, std::size_t k, Rng& rng) {
  if (k == 0) throw ClusteringError("k must be at least 1");
  const std::size_t distinct = count_distinct(points);
  if (k > distinct)
    throw ClusteringError("k = " + std::to_string(k) + " exceeds the " + std::to_string(distinct) +
                          " distinct points");
  const std::size_t n = points.size();
  std::vector<Vector> centroids;
  centroids.reserve(k);
  centroids.push_back(points[rng.index(n)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = (points[i] - centroids[0]).squaredNorm();

  while (centroids.size() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    const double target = rng.uniform() * total;
    std::size_t pick = n;
    double cum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      cum += d2[i];
      pick = i;
      if (cum > target) break;
    }
    if (pick == n) throw ClusteringError("no point with positive D^2 weight left");
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (points[i] - centroids.back()).squaredNorm());
  }
  return centroids;
}

namespace {

double assign_all(const std::vector<Vector>& points, const std::vector<Vector>& centroids,
                  std::vector<std::size_t>& assign) {
  double cost = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    assign[i] = nearest_centroid(points[i], centroids);
    cost += (points[i] - centroids[assign[i]]).squaredNorm();
  }
  return cost;
}

// Moves the farthest point of a multi-member cluster into each empty cluster.
void repair_empty(const std::vector<Vector>& points, std::vector<Vector>& centroids,
                  std::vector<std::size_t>& assign) {
  const std::size_t k = centroids.size();
  std::vector<std::size_t> sizes(k, 0);
  for (auto a : assign) ++sizes[a];
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] > 0) continue;
    std::size_t far = points.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (sizes[assign[i]] < 2) continue;
      const double dist = (points[i] - centroids[assign[i]]).squaredNorm();
      if (dist > far_d) {
        far_d = dist;
        far = i;
      }
    }
    if (far == points.size()) return;  // fewer points than clusters
    --sizes[assign[far]];
    assign[far] = c;
    sizes[c] = 1;
    centroids[c] = points[far];
  }
}

void update_means(const std::vector<Vector>& points, const std::vector<std::size_t>& assign,
                  std::vector<Vector>& centroids) {
  const std::size_t k = centroids.size();
  std::vector<Vector> sums(k, Vector::Zero(centroids.front().size()));
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    sums[assign[i]] += points[i];
    ++counts[assign[i]];
  }
  for (std::size_t c = 0; c < k; ++c)
    if (counts[c] > 0) centroids[c] = sums[c] / static_cast<double>(counts[c]);
}

}  // namespace

Clustering lloyd(const std::vector<Vector>& points, std::vector<Vector> centroids,
                 std::size_t max_iterations) {
  if (centroids.empty()) throw ClusteringError("lloyd needs at least one centroid");
  for (const auto& c : centroids)
    if (!points.empty() && c.size() != points.front().size())
      throw ShapeError("centroid dimension does not match the points");
  Clustering out;
  out.k = centroids.size();
  out.assign.assign(points.size(), 0);
  out.cost = assign_all(points, centroids, out.assign);
  out.cost_history.push_back(out.cost);

  std::vector<std::size_t> next(points.size());
  for (std::size_t iter = 0; iter < max_iterations && !points.empty(); ++iter) {
    repair_empty(points, centroids, out.assign);
    update_means(points, out.assign, centroids);
    const double cost = assign_all(points, centroids, next);
    out.cost_history.push_back(cost);
    out.cost = cost;
    out.iterations = iter + 1;
    if (next == out.assign) break;
    out.assign.swap(next);
  }
  out.centroids = std::move(centroids);
  return out;
}

Clustering cluster_pool(const TracePool& pool, std::size_t k, ClusterMethod method, Rng& rng,
                        const ClusterOptions& opts) {
  std::vector<Vector> points;
  if (method == ClusterMethod::KMeansX) {
    points = augment_position(pool, opts.position_scale);
  } else {
    points.reserve(pool.points.size());
    for (const auto& p : pool.points) points.push_back(p.h);
  }
  auto init = kmeanspp_init(points, k, rng);
  Clustering c = lloyd(points, std::move(init), opts.max_iterations);
  c.space = method == ClusterMethod::KMeansX ? ClusterSpace::PositionAugmented : ClusterSpace::Raw;
  return c;
}

void write_trace_pool(std::ostream& out, const TracePool& pool, const Alphabet& alphabet) {
  ordered_json header;
  header["d"] = pool.d;
  header["n_sequences"] = pool.n_sequences;
  header["alphabet"] = alphabet.symbols();
  out << header.dump() << '\n';
  for (const auto& p : pool.points) {
    ordered_json line;
    line["i"] = p.seq_index;
    line["j"] = p.position;
    line["symbol"] = alphabet.symbol(p.symbol);
    auto h = ordered_json::array();
    for (Eigen::Index k = 0; k < p.h.size(); ++k) h.push_back(p.h(k));
    line["h"] = std::move(h);
    out << line.dump() << '\n';
  }
}

TracePool read_trace_pool(std::istream& in, Alphabet* alphabet_out) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("header", "empty trace stream");
  TracePool pool;
  Alphabet alphabet;
  try {
    const auto header = ordered_json::parse(line);
    pool.d = header.at("d").get<std::size_t>();
    pool.n_sequences = header.at("n_sequences").get<std::size_t>();
    alphabet = Alphabet(header.at("alphabet").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("header", e.what());
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto obj = ordered_json::parse(line);
      TracePoint p;
      p.seq_index = obj.at("i").get<std::size_t>();
      p.position = obj.at("j").get<std::size_t>();
      p.symbol = alphabet.index(obj.at("symbol").get<std::string>());
      const auto& h = obj.at("h");
      p.h.resize(static_cast<Eigen::Index>(h.size()));
      for (std::size_t k = 0; k < h.size(); ++k) p.h(static_cast<Eigen::Index>(k)) = h[k].get<double>();
      pool.points.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line_no), e.what());
    } catch (const InputError& e) {
      throw ParseError("line " + std::to_string(line_no) + ".symbol", e.what());
    }
  }
  validate(pool);
  if (alphabet_out) *alphabet_out = alphabet;
  return pool;
}

}  // namespace lisor
