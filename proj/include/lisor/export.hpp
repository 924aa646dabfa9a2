#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lisor/fsa.hpp"

namespace lisor {

struct DotOptions {
  // Collapse all symbols sharing (source, target) into one edge.
  bool merge_edges = false;
  // Merged edges with more symbols than this get a word-class label.
  std::size_t max_label_symbols = 8;
  // Tokens whose route is drawn in red, one edge per step.
  std::optional<std::vector<Symbol>> highlight_path;
};

// Graphviz digraph: start node filled gray, accepting states double-circled,
// real states named S_<id>. Undefined transitions are not drawn. Output is a
// pure function of (fsa, opts).
std::string to_dot(const Fsa& fsa, const DotOptions& opts = {});

// Word classes a merged rendering would introduce: label -> symbols.
// Names follow word_class_<src>-<dst>, with "start" for the start state.
std::map<std::string, std::vector<std::string>> word_classes(const Fsa& fsa, const DotOptions& opts = {});

// Sidecar JSON for the word classes ({"word_class_0-1":["a","b",...],...}).
std::string word_classes_json(const Fsa& fsa, const DotOptions& opts = {});

}  // namespace lisor
