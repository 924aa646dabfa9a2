#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/graphviz.hpp>

#include "lisor/data.hpp"

namespace lisor::oracle {

BruteFsa brute_force_fsa(const TracePool& pool, const std::vector<std::size_t>& assign, std::size_t k,
                         std::size_t n_symbols, const RnnModel& model) {
  BruteFsa out;
  out.counts.assign(n_symbols, std::vector<std::vector<std::uint64_t>>(k + 1, std::vector<std::uint64_t>(k, 0)));
  std::size_t prev = k;
  std::size_t prev_seq = 0;
  for (std::size_t n = 0; n < pool.points.size(); ++n) {
    const TracePoint& p = pool.points[n];
    if (p.seq_index != prev_seq) {
      prev = k;
      prev_seq = p.seq_index;
    }
    out.counts[p.symbol][prev][assign[n]] += 1;
    prev = assign[n];
  }

  out.T.assign(k + 1, std::vector<int>(n_symbols, -1));
  for (std::size_t s = 0; s < n_symbols; ++s) {
    for (std::size_t from = 0; from <= k; ++from) {
      std::uint64_t best = 0;
      for (std::size_t to = 0; to < k; ++to) {
        if (out.counts[s][from][to] > best) {
          best = out.counts[s][from][to];
          out.T[from][s] = static_cast<int>(to);
        }
      }
    }
  }

  const std::size_t d = pool.d;
  std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t n = 0; n < pool.points.size(); ++n) {
    for (std::size_t i = 0; i < d; ++i) sums[assign[n]][i] += pool.points[n].h[i];
    sizes[assign[n]] += 1;
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] == 0) continue;
    double logit = model.params.classifier_b;
    for (std::size_t i = 0; i < d; ++i)
      logit += model.params.classifier_w[i] * (sums[c][i] / static_cast<double>(sizes[c]));
    if (logit > 0.0) out.accepting.push_back(static_cast<int>(c));
  }
  return out;
}

std::string compare_with_brute(const Extraction& ex, const BruteFsa& brute) {
  std::ostringstream msg;
  const std::size_t k = ex.fsa.n_states();
  const std::size_t n_symbols = ex.fsa.alphabet().size();
  if (brute.T.size() != k + 1) return "state count differs";
  for (std::size_t s = 0; s < n_symbols; ++s)
    for (std::size_t from = 0; from <= k; ++from)
      for (std::size_t to = 0; to < k; ++to)
        if (ex.counts.at(static_cast<Symbol>(s), from, to) != brute.counts[s][from][to]) {
          msg << "count N_" << s << "[" << from << "][" << to << "] differs";
          return msg.str();
        }
  for (std::size_t from = 0; from <= k; ++from)
    for (std::size_t s = 0; s < n_symbols; ++s)
      if (ex.fsa.transitions().at(from, static_cast<Symbol>(s)) != brute.T[from][s]) {
        msg << "T[" << from << "][" << s << "] = " << ex.fsa.transitions().at(from, static_cast<Symbol>(s))
            << ", expected " << brute.T[from][s];
        return msg.str();
      }
  const std::vector<int> got(ex.fsa.accepting().begin(), ex.fsa.accepting().end());
  if (got != brute.accepting) return "accepting set differs";
  return {};
}

TracePool random_pool(Rng& rng, std::size_t max_sequences, std::size_t max_len, std::size_t d,
                      std::size_t n_symbols) {
  TracePool pool;
  pool.d = d;
  pool.n_sequences = 1 + rng.index(max_sequences);
  for (std::size_t i = 1; i <= pool.n_sequences; ++i) {
    const std::size_t len = 1 + rng.index(max_len);
    for (std::size_t j = 1; j <= len; ++j) {
      TracePoint p;
      p.h = Vector(static_cast<Eigen::Index>(d));
      // A coarse grid so duplicate points and distance ties actually happen.
      for (std::size_t a = 0; a < d; ++a) p.h[a] = std::round(rng.uniform(-1.0, 1.0) * 4.0) / 4.0;
      p.seq_index = i;
      p.position = j;
      p.symbol = static_cast<Symbol>(rng.index(n_symbols));
      pool.points.push_back(std::move(p));
    }
  }
  return pool;
}

std::vector<Vector> random_points(Rng& rng, std::size_t n, std::size_t d, double spread) {
  std::vector<Vector> pts;
  for (std::size_t i = 0; i < n; ++i) {
    Vector v(static_cast<Eigen::Index>(d));
    for (std::size_t a = 0; a < d; ++a) v[a] = rng.uniform(-spread, spread);
    pts.push_back(v);
  }
  return pts;
}

const DotNode* DotGraph::node(const std::string& id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

namespace {

struct VProps {
  std::string id;
  std::string shape;
};

struct EProps {
  std::string label;
  std::string color;
  std::string style;
};

using Graph = boost::adjacency_list<boost::vecS, boost::vecS, boost::directedS, VProps, EProps>;

}  // namespace

DotGraph parse_dot(const std::string& text) {
  Graph g;
  boost::dynamic_properties dp(boost::ignore_other_properties);
  dp.property("node_id", boost::get(&VProps::id, g));
  dp.property("shape", boost::get(&VProps::shape, g));
  dp.property("label", boost::get(&EProps::label, g));
  dp.property("color", boost::get(&EProps::color, g));
  dp.property("style", boost::get(&EProps::style, g));
  if (!boost::read_graphviz(text, g, dp, "node_id")) throw std::runtime_error("graphviz reader rejected the document");
  DotGraph out;
  for (auto v : boost::make_iterator_range(boost::vertices(g))) out.nodes.push_back({g[v].id, g[v].shape});
  for (auto e : boost::make_iterator_range(boost::edges(g))) {
    out.edges.push_back({g[boost::source(e, g)].id, g[boost::target(e, g)].id, g[e].label, g[e].color, g[e].style});
  }
  return out;
}

std::string follow_red_route(const DotGraph& g, const std::vector<std::string>& labels) {
  std::vector<bool> used(g.edges.size(), false);
  std::string at = "start";
  for (const auto& label : labels) {
    bool moved = false;
    for (std::size_t e = 0; e < g.edges.size() && !moved; ++e) {
      const DotEdge& edge = g.edges[e];
      if (used[e] || edge.color != "red" || edge.source != at || edge.label != label) continue;
      used[e] = true;
      at = edge.target;
      moved = true;
    }
    if (!moved) return {};
  }
  return at;
}

std::string check_lloyd(const std::vector<Vector>& points, std::size_t k, Rng& rng) {
  std::ostringstream msg;
  const Clustering c = lloyd(points, kmeanspp_init(points, k, rng));
  for (std::size_t i = 1; i < c.cost_history.size(); ++i) {
    if (c.cost_history[i] > c.cost_history[i - 1] * (1.0 + 1e-12) + 1e-12) {
      msg << "cost rose from " << c.cost_history[i - 1] << " to " << c.cost_history[i] << " at step " << i;
      return msg.str();
    }
  }
  if (c.assign.size() != points.size()) return "not every point is assigned";
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (c.assign[i] >= k) return "assignment out of range";
    sizes[c.assign[i]] += 1;
    // Independent nearest search with the lowest-id tie rule.
    std::size_t best = 0;
    double best_d = (points[i] - c.centroids[0]).squaredNorm();
    for (std::size_t j = 1; j < k; ++j) {
      const double dj = (points[i] - c.centroids[j]).squaredNorm();
      if (dj < best_d) {
        best_d = dj;
        best = j;
      }
    }
    if (c.iterations < kDefaultMaxIterations && best != c.assign[i]) {
      msg << "point " << i << " assigned to " << c.assign[i] << " but nearest is " << best;
      return msg.str();
    }
  }
  if (c.iterations < kDefaultMaxIterations)
    for (std::size_t j = 0; j < k; ++j)
      if (sizes[j] == 0) return "empty cluster after convergence";
  return {};
}

std::string check_counts(const TracePool& pool, const Clustering& clustering, const CountTensor& counts) {
  const std::size_t k = counts.n_states();
  if (counts.total() != pool.points.size()) return "total count differs from the number of points";
  std::uint64_t from_start = 0;
  std::vector<std::uint64_t> into(k, 0), out_of(k, 0);
  for (Symbol s = 0; s < counts.n_symbols(); ++s) {
    for (std::size_t to = 0; to < k; ++to) from_start += counts.at(s, k, to);
    for (std::size_t from = 0; from <= k; ++from)
      for (std::size_t to = 0; to < k; ++to) {
        into[to] += counts.at(s, from, to);
        if (from < k) out_of[from] += counts.at(s, from, to);
      }
  }
  if (from_start != pool.n_sequences) return "start row does not hold one count per sequence";
  std::vector<std::uint64_t> size(k, 0), non_final(k, 0);
  for (std::size_t n = 0; n < pool.points.size(); ++n) {
    size[clustering.assign[n]] += 1;
    const bool last = n + 1 == pool.points.size() || pool.points[n + 1].seq_index != pool.points[n].seq_index;
    if (!last) non_final[clustering.assign[n]] += 1;
  }
  for (std::size_t q = 0; q < k; ++q) {
    if (into[q] != size[q]) return "incoming counts differ from cluster size";
    if (out_of[q] != non_final[q]) return "outgoing counts differ from non-final visits";
  }
  return {};
}

std::string check_determinism(const Fsa& fsa, const CountTensor& counts) {
  const auto& T = fsa.transitions();
  const std::size_t k = fsa.n_states();
  for (std::size_t r = 0; r <= k; ++r) {
    for (Symbol s = 0; s < T.cols(); ++s) {
      const StateId t = T.at(r, s);
      if (t < kUndefined || t >= static_cast<StateId>(k)) return "transition target out of range";
      std::uint64_t best = 0;
      for (std::size_t to = 0; to < k; ++to) best = std::max(best, counts.at(s, r, to));
      if (best == 0) {
        if (t != kUndefined) return "unobserved transition is defined";
        continue;
      }
      if (t == kUndefined || counts.at(s, r, static_cast<std::size_t>(t)) != best)
        return "transition is not the most frequent successor";
      for (StateId lower = 0; lower < t; ++lower)
        if (counts.at(s, r, static_cast<std::size_t>(lower)) == best) return "tie not broken to the lowest state";
    }
  }
  return {};
}

std::string check_cell_bounded(CellKind kind, Rng& rng) {
  const std::size_t d = 1 + rng.index(6);
  const std::size_t d_in = 1 + rng.index(4);
  CellParams p = CellParams::zeros(kind, d, d_in);
  for (auto& w : p.W)
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-5.0, 5.0);
  for (auto& b : p.b)
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = rng.uniform(-5.0, 5.0);
  LayerState st;
  st.h = Vector(static_cast<Eigen::Index>(d));
  st.c = Vector(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    st.h[i] = rng.uniform(-1.0, 1.0);
    st.c[i] = rng.uniform(-10.0, 10.0);
  }
  Vector x(static_cast<Eigen::Index>(d_in));
  for (std::size_t i = 0; i < d_in; ++i) x[i] = rng.uniform(-20.0, 20.0);
  const LayerState next = cell_step(p, st, x);
  for (std::size_t i = 0; i < d; ++i) {
    if (!std::isfinite(next.h[i]) || std::abs(next.h[i]) > 1.0) return "hidden output outside [-1, 1]";
    if (kind == CellKind::LSTM &&
        (!std::isfinite(next.c[i]) || std::abs(next.c[i]) > std::abs(st.c[i]) + 1.0))
      return "memory cell grew by more than 1";
  }
  return {};
}

namespace {

Fsa random_fsa(Rng& rng) {
  const std::size_t n = 1 + rng.index(6);
  std::vector<std::string> symbols;
  const std::size_t m = 1 + rng.index(4);
  for (std::size_t s = 0; s < m; ++s) symbols.push_back("w" + std::to_string(s));
  TransitionTable T(n, m);
  for (std::size_t r = 0; r <= n; ++r)
    for (Symbol s = 0; s < m; ++s) T.at(r, s) = static_cast<StateId>(rng.index(n + 1)) - 1;
  std::vector<StateId> acc;
  for (std::size_t q = 0; q < n; ++q)
    if (rng.index(2) == 1) acc.push_back(static_cast<StateId>(q));
  return Fsa(Alphabet(symbols), n, acc, T);
}

}  // namespace

std::string check_roundtrips(Rng& rng) {
  {
    Task000Options o;
    o.n_train = 1 + rng.index(20);
    o.n_valid = rng.index(10);
    o.n_test = rng.index(10);
    o.min_len = 3;
    o.max_len = 3 + rng.index(6);
    o.seed = rng.next();
    const Dataset ds = gen_task_000(o);
    std::stringstream ss;
    write_dataset(ss, ds);
    const Dataset back = read_dataset(ss);
    if (!(back.alphabet == ds.alphabet && back.task_name == ds.task_name && back.seed == ds.seed))
      return "dataset header changed";
    auto same = [](const std::vector<Sequence>& a, const std::vector<Sequence>& b) {
      if (a.size() != b.size()) return false;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].tokens != b[i].tokens || a[i].label != b[i].label) return false;
      return true;
    };
    if (!same(ds.train, back.train) || !same(ds.validation, back.validation) || !same(ds.test, back.test))
      return "dataset sequences changed";
  }
  const CellKind kind = kAllCellKinds[rng.index(kAllCellKinds.size())];
  const ModelDims dims{1 + rng.index(3), 1 + rng.index(5), 1 + rng.index(3)};
  const Alphabet alpha = rng.index(2) == 0 ? Alphabet::binary() : Alphabet({"a", "b", "c"});
  RnnModel model = RnnModel::random(kind, alpha, dims, 1.0, rng);
  for (auto t : model.params.tensors())
    for (double& x : t) x = rng.uniform(-3.0, 3.0) * std::pow(10.0, rng.uniform(-8.0, 2.0));
  model.train_embedding = rng.index(2) == 1;
  if (!(model_from_json(model_to_json(model)) == model)) return "model changed";

  std::vector<Sequence> split;
  for (std::size_t i = 0, n = 1 + rng.index(4); i < n; ++i) {
    Sequence s;
    for (std::size_t j = 0, len = 1 + rng.index(5); j < len; ++j)
      s.tokens.push_back(static_cast<Symbol>(rng.index(alpha.size())));
    split.push_back(s);
  }
  const TracePool pool = collect_traces(model, split);
  std::stringstream ss;
  write_trace_pool(ss, pool, alpha);
  Alphabet alpha_back;
  if (!(read_trace_pool(ss, &alpha_back) == pool) || !(alpha_back == alpha)) return "trace pool changed";

  const Fsa fsa = random_fsa(rng);
  if (!(fsa_from_json(fsa_to_json(fsa)) == fsa)) return "fsa changed";
  return {};
}

}  // namespace lisor::oracle
