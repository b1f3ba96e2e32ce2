#include "l2rs/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "l2rs/error.hpp"
#include "l2rs/io.hpp"

namespace l2rs {

NgramModel::NgramModel(int order) : grams_(static_cast<std::size_t>(order)) {
  if (order < 1) throw InvalidArgument("n-gram order must be >= 1");
}

bool NgramModel::contains(std::string_view word) const { return ids_.find(word) != ids_.end(); }

int NgramModel::id(std::string_view word) const {
  if (auto it = ids_.find(word); it != ids_.end()) return it->second;
  if (auto it = ids_.find(kUnk); it != ids_.end()) return it->second;
  return -1;
}

int NgramModel::add_word(const std::string& word) {
  if (auto it = ids_.find(word); it != ids_.end()) return it->second;
  const int id = static_cast<int>(words_.size());
  words_.push_back(word);
  ids_.emplace(word, id);
  return id;
}

double NgramModel::log10_prob(std::span<const int> context, int word) const {
  if (word < 0) return kLogZero;
  const std::size_t max_ctx = std::min(context.size(), grams_.size() - 1);
  double backoff = 0.0;
  Gram gram;
  for (std::size_t k = max_ctx + 1; k-- > 0;) {
    gram.assign(context.end() - static_cast<std::ptrdiff_t>(k), context.end());
    gram.push_back(word);
    const auto& table = grams_[k];
    if (auto it = table.find(gram); it != table.end()) return backoff + it->second.log10_prob;
    if (k > 0) {
      gram.pop_back();
      const auto& ctx_table = grams_[k - 1];
      if (auto it = ctx_table.find(gram); it != ctx_table.end()) backoff += it->second.log10_backoff;
    }
  }
  return kLogZero;
}

double NgramModel::sentence_log10prob(const Tokens& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size() + 2);
  ids.push_back(id(kBos));
  for (const auto& t : tokens) ids.push_back(id(t));
  ids.push_back(id(kEos));
  double total = 0.0;
  for (std::size_t i = 1; i < ids.size(); ++i) {
    total += log10_prob(std::span<const int>(ids.data(), i), ids[i]);
  }
  return total;
}

double NgramModel::sentence_logprob(const Tokens& tokens) const {
  return sentence_log10prob(tokens) * std::numbers::ln10;
}

double NgramModel::perplexity(const Tokens& tokens) const {
  return std::pow(10.0, -sentence_log10prob(tokens) / static_cast<double>(tokens.size() + 1));
}

namespace {

struct GramHash {
  std::size_t operator()(const NgramModel::Gram& g) const noexcept {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (int x : g) h = (h ^ static_cast<std::size_t>(x)) * 0x100000001b3ULL;
    return h;
  }
};

}  // namespace

NgramModel train_ngram(const std::vector<Tokens>& corpus, int order) {
  if (order < 1) throw InvalidArgument("n-gram order must be >= 1");
  if (corpus.empty()) throw EmptyCorpus();

  std::map<std::string, std::size_t> word_counts;
  for (const auto& sentence : corpus) {
    for (const auto& w : sentence) ++word_counts[w];
  }

  // Vocabulary in sorted order; singletons fold into <unk>.
  std::vector<std::string> vocab = {std::string(NgramModel::kBos), std::string(NgramModel::kEos),
                                    std::string(NgramModel::kUnk)};
  for (const auto& [w, c] : word_counts) {
    if (c >= 2 && w != NgramModel::kBos && w != NgramModel::kEos && w != NgramModel::kUnk) vocab.push_back(w);
  }
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());

  NgramModel model(order);
  for (const auto& w : vocab) model.add_word(w);
  const int bos = model.id(NgramModel::kBos);
  const int eos = model.id(NgramModel::kEos);

  // counts[k][gram] for k-grams, k = 1..order; predicted words never <s>.
  std::vector<std::unordered_map<NgramModel::Gram, std::size_t, GramHash>> counts(static_cast<std::size_t>(order));
  std::vector<int> ids;
  for (const auto& sentence : corpus) {
    ids.clear();
    ids.push_back(bos);
    for (const auto& w : sentence) ids.push_back(model.id(w));
    ids.push_back(eos);
    for (std::size_t i = 1; i < ids.size(); ++i) {
      for (std::size_t k = 1; k <= static_cast<std::size_t>(order) && k <= i + 1; ++k) {
        ++counts[k - 1][NgramModel::Gram(ids.begin() + static_cast<std::ptrdiff_t>(i + 1 - k),
                                         ids.begin() + static_cast<std::ptrdiff_t>(i + 1))];
      }
    }
  }

  // Unigrams: Witten-Bell interpolation with a uniform distribution over
  // every predictable word.
  {
    const double uniform = 1.0 / static_cast<double>(model.vocab_size() - 1);
    double total = 0.0;
    double types = 0.0;
    for (const auto& [g, c] : counts[0]) {
      total += static_cast<double>(c);
      types += 1.0;
    }
    auto& table = model.mutable_grams(1);
    for (int w = 0; w < static_cast<int>(model.vocab_size()); ++w) {
      NgramModel::Entry e;
      if (w == bos) {
        e.log10_prob = NgramModel::kLogZero;
      } else {
        auto it = counts[0].find({w});
        const double c = it == counts[0].end() ? 0.0 : static_cast<double>(it->second);
        e.log10_prob = std::log10((c + types * uniform) / (total + types));
      }
      table[{w}] = e;
    }
  }

  for (int n = 2; n <= order; ++n) {
    // Per-context totals and distinct-follower counts.
    std::map<NgramModel::Gram, std::pair<double, double>> context_stats;
    for (const auto& [g, c] : counts[static_cast<std::size_t>(n - 1)]) {
      auto& s = context_stats[NgramModel::Gram(g.begin(), g.end() - 1)];
      s.first += static_cast<double>(c);
      s.second += 1.0;
    }
    std::map<NgramModel::Gram, NgramModel::Entry> table;
    for (const auto& [g, c] : counts[static_cast<std::size_t>(n - 1)]) {
      const NgramModel::Gram context(g.begin(), g.end() - 1);
      const auto& [total, types] = context_stats.at(context);
      const double lower =
          std::pow(10.0, model.log10_prob(std::span<const int>(g.data() + 1, g.size() - 2), g.back()));
      NgramModel::Entry e;
      e.log10_prob = std::log10((static_cast<double>(c) + types * lower) / (total + types));
      table[g] = e;
    }
    // Interpolated Witten-Bell puts exactly T/(c+T) of the lower-order
    // distribution under every unseen follower, which is the backoff weight.
    auto& contexts = model.mutable_grams(n - 1);
    for (const auto& [context, stats] : context_stats) {
      auto& e = contexts.at(context);
      e.log10_backoff = std::log10(stats.second / (stats.first + stats.second));
      e.has_backoff = true;
    }
    model.mutable_grams(n) = std::move(table);
  }
  return model;
}

std::string format_arpa(const NgramModel& model) {
  std::string out = "\n\\data\\\n";
  for (int n = 1; n <= model.order(); ++n) {
    out += "ngram " + std::to_string(n) + "=" + std::to_string(model.grams(n).size()) + "\n";
  }
  for (int n = 1; n <= model.order(); ++n) {
    out += "\n\\" + std::to_string(n) + "-grams:\n";
    for (const auto& [gram, e] : model.grams(n)) {
      out += format_double(e.log10_prob, 17);
      for (std::size_t i = 0; i < gram.size(); ++i) out += (i ? " " : "\t") + model.word(gram[i]);
      if (e.has_backoff) out += "\t" + format_double(e.log10_backoff, 17);
      out += "\n";
    }
  }
  out += "\n\\end\\\n";
  return out;
}

void write_arpa(const NgramModel& model, const std::string& path) { write_file_atomic(path, format_arpa(model)); }

NgramModel parse_arpa(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, raw)) return false;
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    return true;
  };

  bool found = false;
  while (next_line()) {
    if (trim(raw) == "\\data\\") {
      found = true;
      break;
    }
  }
  if (!found) throw ParseError(source, line_no, "missing \\data\\ header");

  std::vector<std::size_t> declared;
  while (next_line()) {
    auto line = trim(raw);
    if (line.empty()) {
      if (!declared.empty()) break;
      continue;
    }
    if (line.substr(0, 6) != "ngram ") throw ParseError(source, line_no, "expected 'ngram N=count'");
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected 'ngram N=count'");
    const auto n = parse_int(trim(line.substr(6, eq - 6)), source, line_no);
    const auto c = parse_int(trim(line.substr(eq + 1)), source, line_no);
    if (n != static_cast<long long>(declared.size()) + 1 || c < 0) {
      throw ParseError(source, line_no, "n-gram orders must be declared as 1..N");
    }
    declared.push_back(static_cast<std::size_t>(c));
  }
  if (declared.empty()) throw ParseError(source, line_no, "no n-gram counts declared");

  NgramModel model(static_cast<int>(declared.size()));
  std::vector<std::vector<std::pair<std::vector<std::string>, NgramModel::Entry>>> sections(declared.size());
  int current = 0;
  std::size_t section_line = line_no;
  bool ended = false;
  auto close_section = [&]() {
    if (current > 0 && sections[static_cast<std::size_t>(current - 1)].size() != declared[static_cast<std::size_t>(current - 1)]) {
      throw ParseError(source, section_line,
                       std::to_string(current) + "-gram section has " +
                           std::to_string(sections[static_cast<std::size_t>(current - 1)].size()) + " entries, header declares " +
                           std::to_string(declared[static_cast<std::size_t>(current - 1)]));
    }
  };
  while (next_line()) {
    auto line = trim(raw);
    if (line.empty()) continue;
    if (line == "\\end\\") {
      close_section();
      ended = true;
      break;
    }
    if (line.front() == '\\') {
      close_section();
      const std::string expected = "\\" + std::to_string(current + 1) + "-grams:";
      if (line != expected) throw ParseError(source, line_no, "expected section header '" + expected + "'");
      ++current;
      if (current > static_cast<int>(declared.size())) throw ParseError(source, line_no, "undeclared n-gram order");
      section_line = line_no;
      continue;
    }
    if (current == 0) throw ParseError(source, line_no, "entry outside of an n-gram section");
    auto toks = split_ws(line);
    const auto n = static_cast<std::size_t>(current);
    if (toks.size() != n + 1 && toks.size() != n + 2) {
      throw ParseError(source, line_no, "expected " + std::to_string(n) + " words plus probability");
    }
    NgramModel::Entry e;
    e.log10_prob = parse_double(toks[0], source, line_no);
    if (toks.size() == n + 2) {
      e.log10_backoff = parse_double(toks[n + 1], source, line_no);
      e.has_backoff = true;
    }
    std::vector<std::string> words;
    for (std::size_t i = 1; i <= n; ++i) words.emplace_back(toks[i]);
    sections[n - 1].emplace_back(std::move(words), e);
  }
  if (!ended) throw ParseError(source, line_no, "missing \\end\\ marker");
  if (current != static_cast<int>(declared.size())) {
    throw ParseError(source, line_no, "missing " + std::to_string(current + 1) + "-gram section");
  }

  for (const auto& [words, e] : sections[0]) model.add_word(words[0]);
  for (std::size_t n = 1; n <= sections.size(); ++n) {
    auto& table = model.mutable_grams(static_cast<int>(n));
    for (const auto& [words, e] : sections[n - 1]) {
      NgramModel::Gram g;
      for (const auto& w : words) {
        if (!model.contains(w)) throw ParseError(source, line_no, "word '" + w + "' missing from unigrams");
        g.push_back(model.id(w));
      }
      table[g] = e;
    }
  }
  return model;
}

NgramModel read_arpa(const std::string& path) { return parse_arpa(read_file(path), path); }

}  // namespace l2rs
