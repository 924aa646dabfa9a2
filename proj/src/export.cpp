#include "lisor/export.hpp"

#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "lisor/errors.hpp"

namespace lisor {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

std::string node_name(const Fsa& fsa, StateId s) {
  return s == fsa.start() ? "start" : "S_" + std::to_string(s);
}

std::string class_id(const Fsa& fsa, StateId s) {
  return s == fsa.start() ? "start" : std::to_string(s);
}

std::string word_class_name(const Fsa& fsa, StateId src, StateId dst) {
  return "word_class_" + class_id(fsa, src) + "-" + class_id(fsa, dst);
}

// Rows in rendering order: start first, then real states ascending.
std::vector<StateId> row_order(const Fsa& fsa) {
  std::vector<StateId> rows{fsa.start()};
  for (std::size_t s = 0; s < fsa.n_states(); ++s) rows.push_back(static_cast<StateId>(s));
  return rows;
}

struct EdgeGroup {
  StateId src;
  StateId dst;
  std::vector<Symbol> symbols;
};

// Defined transitions grouped by (src, dst) in render order, skipping the
// (state, symbol) pairs in `skip`.
std::vector<EdgeGroup> grouped_edges(const Fsa& fsa, const std::set<std::pair<StateId, Symbol>>& skip) {
  std::vector<EdgeGroup> groups;
  for (StateId src : row_order(fsa)) {
    std::map<StateId, std::vector<Symbol>> by_target;
    for (Symbol s = 0; s < fsa.alphabet().size(); ++s) {
      const StateId dst = fsa.transitions().at(static_cast<std::size_t>(src), s);
      if (dst == kUndefined || skip.count({src, s})) continue;
      by_target[dst].push_back(s);
    }
    for (auto& [dst, symbols] : by_target) groups.push_back({src, dst, std::move(symbols)});
  }
  return groups;
}

std::string join_symbols(const Fsa& fsa, const std::vector<Symbol>& symbols) {
  std::string out;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i) out += ',';
    out += fsa.alphabet().symbol(symbols[i]);
  }
  return out;
}

}  // namespace

std::string to_dot(const Fsa& fsa, const DotOptions& opts) {
  if (opts.max_label_symbols < 1) throw ConfigError("max_label_symbols must be at least 1");
  std::vector<StateId> path;
  std::set<std::pair<StateId, Symbol>> on_path;
  if (opts.highlight_path) {
    for (Symbol t : *opts.highlight_path)
      if (t >= fsa.alphabet().size())
        throw InputError("highlight token " + std::to_string(t) + " outside alphabet");
    path = fsa_path(fsa, *opts.highlight_path);
    for (std::size_t i = 0; i < opts.highlight_path->size(); ++i)
      on_path.insert({path[i], (*opts.highlight_path)[i]});
  }

  std::ostringstream out;
  out << "digraph fsa {\n";
  out << "  rankdir=LR;\n";
  out << "  node [shape=circle];\n";
  out << "  start [label=\"start\", style=filled, fillcolor=gray];\n";
  for (std::size_t s = 0; s < fsa.n_states(); ++s) {
    const auto id = static_cast<StateId>(s);
    out << "  " << node_name(fsa, id) << " [label=" << quote(node_name(fsa, id));
    if (fsa.is_accepting(id)) out << ", shape=doublecircle";
    out << "];\n";
  }

  for (const auto& g : grouped_edges(fsa, on_path)) {
    const std::string src = node_name(fsa, g.src);
    const std::string dst = node_name(fsa, g.dst);
    if (opts.merge_edges) {
      const std::string label = g.symbols.size() <= opts.max_label_symbols
                                    ? join_symbols(fsa, g.symbols)
                                    : word_class_name(fsa, g.src, g.dst);
      out << "  " << src << " -> " << dst << " [label=" << quote(label) << "];\n";
    } else {
      for (Symbol s : g.symbols)
        out << "  " << src << " -> " << dst << " [label=" << quote(fsa.alphabet().symbol(s)) << "];\n";
    }
  }

  if (opts.highlight_path) {
    const auto& tokens = *opts.highlight_path;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const bool fallback = fsa.transitions().at(static_cast<std::size_t>(path[i]), tokens[i]) == kUndefined;
      out << "  " << node_name(fsa, path[i]) << " -> " << node_name(fsa, path[i + 1])
          << " [label=" << quote(fsa.alphabet().symbol(tokens[i])) << ", color=red, fontcolor=red, penwidth=2";
      if (fallback) out << ", style=dashed";
      out << "];\n";
    }
  }
  out << "}\n";
  return out.str();
}

std::map<std::string, std::vector<std::string>> word_classes(const Fsa& fsa, const DotOptions& opts) {
  std::map<std::string, std::vector<std::string>> classes;
  if (!opts.merge_edges) return classes;
  std::set<std::pair<StateId, Symbol>> on_path;
  if (opts.highlight_path) {
    const auto path = fsa_path(fsa, *opts.highlight_path);
    for (std::size_t i = 0; i < opts.highlight_path->size(); ++i)
      on_path.insert({path[i], (*opts.highlight_path)[i]});
  }
  for (const auto& g : grouped_edges(fsa, on_path)) {
    if (g.symbols.size() <= opts.max_label_symbols) continue;
    auto& names = classes[word_class_name(fsa, g.src, g.dst)];
    for (Symbol s : g.symbols) names.push_back(fsa.alphabet().symbol(s));
  }
  return classes;
}

std::string word_classes_json(const Fsa& fsa, const DotOptions& opts) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [name, symbols] : word_classes(fsa, opts)) j[name] = symbols;
  return j.dump(1);
}

}  // namespace lisor
