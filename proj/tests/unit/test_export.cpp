#include <gtest/gtest.h>

#include "json.hpp"
#include "lisor/errors.hpp"
#include "lisor/export.hpp"
#include "support/oracles.hpp"

using namespace lisor;

namespace {

Fsa hand_0110() {
  TransitionTable T(5, 2);
  const int rows[6][2] = {{4, 1}, {4, 2}, {3, 4}, {4, 4}, {4, 4}, {0, 4}};
  for (std::size_t r = 0; r < 6; ++r)
    for (Symbol s = 0; s < 2; ++s) T.at(r, s) = rows[r][s];
  return Fsa(Alphabet::binary(), 5, {3}, T);
}

std::size_t count_red(const oracle::DotGraph& g) {
  std::size_t n = 0;
  for (const auto& e : g.edges) n += e.color == "red";
  return n;
}

}  // namespace

TEST(Dot, StartAndAcceptingStyles) {
  const auto g = oracle::parse_dot(to_dot(hand_0110()));
  ASSERT_NE(g.node("start"), nullptr);
  EXPECT_EQ(g.node("S_3")->shape, "doublecircle");
  EXPECT_EQ(g.node("S_0")->shape, "circle");
  EXPECT_EQ(g.nodes.size(), 6u);
  EXPECT_NE(to_dot(hand_0110()).find("fillcolor=gray"), std::string::npos);
}

TEST(Dot, MergedEdgeLabel) {
  TransitionTable T(2, 2);
  T.at(0, 0) = 1;
  T.at(0, 1) = 1;
  const Fsa fsa(Alphabet::binary(), 2, {1}, T);
  DotOptions opts;
  opts.merge_edges = true;
  const auto g = oracle::parse_dot(to_dot(fsa, opts));
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.edges[0].label, "0,1");
  EXPECT_EQ(g.edges[0].source, "S_0");
  EXPECT_EQ(g.edges[0].target, "S_1");
}

TEST(Dot, WordClassForLongLabels) {
  std::vector<std::string> words{"good", "great", "fine", "bad"};
  TransitionTable T(2, 4);
  for (Symbol s = 0; s < 3; ++s) T.at(0, s) = 1;
  T.at(0, 3) = 0;
  for (Symbol s = 0; s < 4; ++s) T.at(2, s) = 0;
  const Fsa fsa(Alphabet(words), 2, {1}, T);
  DotOptions opts;
  opts.merge_edges = true;
  opts.max_label_symbols = 2;
  const std::string dot = to_dot(fsa, opts);
  EXPECT_NE(dot.find("word_class_0-1"), std::string::npos);
  EXPECT_NE(dot.find("word_class_start-0"), std::string::npos);
  const auto classes = word_classes(fsa, opts);
  EXPECT_EQ(classes.at("word_class_0-1"), (std::vector<std::string>{"good", "great", "fine"}));
  const auto j = nlohmann::json::parse(word_classes_json(fsa, opts));
  EXPECT_EQ(j["word_class_start-0"].size(), 4u);
  EXPECT_FALSE(j.contains("word_class_0-0"));
}

TEST(Dot, HighlightPathHasOneRedEdgePerToken) {
  DotOptions opts;
  opts.highlight_path = std::vector<Symbol>{0, 1, 1, 0};
  const auto g = oracle::parse_dot(to_dot(hand_0110(), opts));
  EXPECT_EQ(count_red(g), 4u);
  const std::string end = oracle::follow_red_route(g, {"0", "1", "1", "0"});
  ASSERT_EQ(end, "S_3");
  EXPECT_EQ(g.node(end)->shape, "doublecircle");
  opts.merge_edges = true;
  EXPECT_EQ(count_red(oracle::parse_dot(to_dot(hand_0110(), opts))), 4u);
}

TEST(Dot, HighlightFallbackStepIsDashed) {
  TransitionTable T(2, 2);
  T.at(2, 0) = 1;
  const Fsa fsa(Alphabet::binary(), 2, {1}, T);
  DotOptions opts;
  opts.highlight_path = std::vector<Symbol>{0, 1};
  const auto g = oracle::parse_dot(to_dot(fsa, opts));
  EXPECT_EQ(count_red(g), 2u);
  bool dashed = false;
  for (const auto& e : g.edges) dashed |= e.color == "red" && e.style == "dashed" && e.source == "S_1" && e.target == "S_1";
  EXPECT_TRUE(dashed);
}

TEST(Dot, InvalidHighlightToken) {
  DotOptions opts;
  opts.highlight_path = std::vector<Symbol>{0, 2};
  EXPECT_THROW(to_dot(hand_0110(), opts), InputError);
}

TEST(Dot, PureAndBounded) {
  Rng rng(4);
  for (int n = 0; n < 100; ++n) {
    const std::size_t q = 1 + rng.index(8);
    const std::size_t m = 1 + rng.index(12);
    std::vector<std::string> syms;
    for (std::size_t s = 0; s < m; ++s) syms.push_back("w" + std::to_string(s));
    TransitionTable T(q, m);
    for (std::size_t r = 0; r <= q; ++r)
      for (Symbol s = 0; s < m; ++s) T.at(r, s) = static_cast<StateId>(rng.index(q + 1)) - 1;
    std::vector<StateId> acc;
    for (std::size_t i = 0; i < q; ++i)
      if (rng.index(3) == 0) acc.push_back(static_cast<StateId>(i));
    const Fsa fsa(Alphabet(syms), q, acc, T);
    DotOptions opts;
    opts.merge_edges = rng.index(2) == 1;
    opts.max_label_symbols = 1 + rng.index(4);
    if (rng.index(2)) {
      std::vector<Symbol> path;
      for (std::size_t j = 0, len = 1 + rng.index(6); j < len; ++j) path.push_back(static_cast<Symbol>(rng.index(m)));
      opts.highlight_path = path;
    }
    const std::string a = to_dot(fsa, opts);
    EXPECT_EQ(a, to_dot(fsa, opts));
    const auto g = oracle::parse_dot(a);
    EXPECT_EQ(g.nodes.size(), q + 1);
    std::size_t plain = 0;
    for (const auto& e : g.edges) plain += e.color != "red";
    EXPECT_LE(plain, (q + 1) * m);
    if (opts.highlight_path) EXPECT_EQ(count_red(g), opts.highlight_path->size());
  }
}

TEST(Dot, IsolatedStatesKept) {
  TransitionTable T(3, 2);
  T.at(3, 0) = 0;
  const auto g = oracle::parse_dot(to_dot(Fsa(Alphabet::binary(), 3, {}, T)));
  EXPECT_NE(g.node("S_2"), nullptr);
}
