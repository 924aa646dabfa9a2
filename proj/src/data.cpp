#include "lisor/data.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "lisor/errors.hpp"
#include "lisor/random.hpp"

namespace lisor {

using ordered_json = nlohmann::ordered_json;

Alphabet::Alphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.empty()) throw ConfigError("alphabet must not be empty");
  for (Symbol i = 0; i < symbols_.size(); ++i) {
    if (!lookup_.emplace(symbols_[i], i).second)
      throw ConfigError("duplicate alphabet symbol '" + symbols_[i] + "'");
  }
}

const std::string& Alphabet::symbol(Symbol index) const {
  if (index >= symbols_.size())
    throw InputError("symbol index " + std::to_string(index) + " outside alphabet of size " +
                     std::to_string(symbols_.size()));
  return symbols_[index];
}

Symbol Alphabet::index(const std::string& symbol) const {
  auto it = lookup_.find(symbol);
  if (it == lookup_.end()) throw InputError("symbol '" + symbol + "' not in alphabet");
  return it->second;
}

void validate(const Sequence& seq, const Alphabet& alphabet) {
  if (seq.tokens.empty()) throw InputError("sequence must have at least one token");
  for (Symbol t : seq.tokens) {
    if (t >= alphabet.size())
      throw InputError("token " + std::to_string(t) + " outside alphabet of size " +
                       std::to_string(alphabet.size()));
  }
  if (seq.label != 0 && seq.label != 1)
    throw InputError("label must be 0 or 1, got " + std::to_string(seq.label));
}

void validate(const Dataset& dataset) {
  for (const auto* split : {&dataset.train, &dataset.validation, &dataset.test})
    for (const auto& s : *split) validate(s, dataset.alphabet);
}

Label label_oracle(const std::string& task, const std::vector<Symbol>& tokens) {
  if (task == "0110") {
    static const std::vector<Symbol> target{0, 1, 1, 0};
    return tokens == target ? 1 : 0;
  }
  if (task == "000") {
    std::size_t run = 0;
    for (Symbol t : tokens) {
      run = (t == 0) ? run + 1 : 0;
      if (run >= 3) return 1;
    }
    return 0;
  }
  throw ConfigError("unknown task '" + task + "' (expected \"0110\" or \"000\")");
}

std::vector<std::vector<Symbol>> enumerate_binary(std::size_t length) {
  std::vector<std::vector<Symbol>> out;
  const std::size_t count = std::size_t{1} << length;
  out.reserve(count);
  for (std::size_t code = 0; code < count; ++code) {
    std::vector<Symbol> tokens(length);
    for (std::size_t b = 0; b < length; ++b)
      tokens[b] = static_cast<Symbol>((code >> (length - 1 - b)) & 1U);
    out.push_back(std::move(tokens));
  }
  return out;
}

namespace {

Sequence labeled(const std::string& task, std::vector<Symbol> tokens) {
  Sequence s;
  s.label = label_oracle(task, tokens);
  s.tokens = std::move(tokens);
  return s;
}

std::vector<Symbol> random_binary(Rng& rng, std::size_t length) {
  std::vector<Symbol> tokens(length);
  for (auto& t : tokens) t = static_cast<Symbol>(rng.index(2));
  return tokens;
}

}  // namespace

Dataset gen_task_0110(const Task0110Options& opts) {
  if (opts.n_train < 1) throw ConfigError("task 0110 needs n_train >= 1");
  Dataset ds;
  ds.alphabet = Alphabet::binary();
  ds.task_name = "0110";
  ds.seed = opts.seed;

  const auto all = enumerate_binary(4);
  Rng train_rng(derive_seed(opts.seed, 0));
  for (std::size_t i = 0; i < opts.n_train; ++i) {
    auto tokens = opts.enumerate_train ? all[i % all.size()] : random_binary(train_rng, 4);
    ds.train.push_back(labeled(ds.task_name, std::move(tokens)));
  }
  for (const auto& tokens : all) ds.validation.push_back(labeled(ds.task_name, tokens));
  Rng test_rng(derive_seed(opts.seed, 2));
  for (std::size_t i = 0; i < opts.n_test; ++i)
    ds.test.push_back(labeled(ds.task_name, random_binary(test_rng, 4)));
  return ds;
}

Dataset gen_task_000(const Task000Options& opts) {
  if (opts.min_len < 3)
    throw ConfigError("task 000 needs min_len >= 3, got " + std::to_string(opts.min_len));
  if (opts.max_len < opts.min_len) throw ConfigError("task 000 needs min_len <= max_len");
  Dataset ds;
  ds.alphabet = Alphabet::binary();
  ds.task_name = "000";
  ds.seed = opts.seed;

  const std::size_t span = opts.max_len - opts.min_len + 1;
  auto draw = [&](std::vector<Sequence>& split, std::size_t n, std::uint64_t salt) {
    Rng rng(derive_seed(opts.seed, salt));
    split.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t len = opts.min_len + rng.index(span);
      split.push_back(labeled(ds.task_name, random_binary(rng, len)));
    }
  };
  draw(ds.train, opts.n_train, 0);
  draw(ds.validation, opts.n_valid, 1);
  draw(ds.test, opts.n_test, 2);
  return ds;
}

double positive_rate(const std::vector<Sequence>& split) {
  if (split.empty()) return 0.0;
  std::size_t pos = 0;
  for (const auto& s : split) pos += s.label == 1;
  return static_cast<double>(pos) / static_cast<double>(split.size());
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  ordered_json header;
  header["alphabet"] = dataset.alphabet.symbols();
  header["task"] = dataset.task_name;
  header["seed"] = dataset.seed;
  out << header.dump() << '\n';
  auto emit = [&](const char* name, const std::vector<Sequence>& split) {
    for (const auto& s : split) {
      ordered_json line;
      line["split"] = name;
      auto tokens = ordered_json::array();
      for (Symbol t : s.tokens) tokens.push_back(dataset.alphabet.symbol(t));
      line["tokens"] = std::move(tokens);
      line["label"] = s.label;
      out << line.dump() << '\n';
    }
  };
  emit("train", dataset.train);
  emit("validation", dataset.validation);
  emit("test", dataset.test);
}

Dataset read_dataset(std::istream& in) {
  Dataset ds;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("header", "empty dataset stream");
  try {
    const auto header = ordered_json::parse(line);
    ds.alphabet = Alphabet(header.at("alphabet").get<std::vector<std::string>>());
    ds.task_name = header.at("task").get<std::string>();
    ds.seed = header.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("header", e.what());
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    try {
      const auto obj = ordered_json::parse(line);
      Sequence s;
      for (const auto& tok : obj.at("tokens")) s.tokens.push_back(ds.alphabet.index(tok.get<std::string>()));
      s.label = obj.at("label").get<Label>();
      validate(s, ds.alphabet);
      const auto split = obj.at("split").get<std::string>();
      if (split == "train") ds.train.push_back(std::move(s));
      else if (split == "validation") ds.validation.push_back(std::move(s));
      else if (split == "test") ds.test.push_back(std::move(s));
      else throw ParseError(where + ".split", "unknown split '" + split + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where, e.what());
    } catch (const InputError& e) {
      throw ParseError(where + ".tokens", e.what());
    }
  }
  return ds;
}

void save_dataset(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_dataset(out, dataset);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_dataset(in);
}

}  // namespace lisor
