#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "l2rs/nbest.hpp"

namespace l2rs {

// Backoff n-gram language model stored in ARPA form: log10 probabilities for
// every explicit n-gram and log10 backoff weights on n-grams that act as
// contexts. Trained models come out of interpolated Witten-Bell smoothing,
// converted to exact backoff form.
class NgramModel {
 public:
  static constexpr std::string_view kBos = "<s>";
  static constexpr std::string_view kEos = "</s>";
  static constexpr std::string_view kUnk = "<unk>";
  static constexpr double kLogZero = -99.0;

  struct Entry {
    double log10_prob = 0.0;
    double log10_backoff = 0.0;
    bool has_backoff = false;
  };
  using Gram = std::vector<int>;

  NgramModel() = default;
  explicit NgramModel(int order);

  int order() const { return static_cast<int>(grams_.size()); }
  std::size_t vocab_size() const { return words_.size(); }
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  bool contains(std::string_view word) const;

  // Id of `word`, or of <unk> when out of vocabulary (-1 if the model has
  // no <unk> entry).
  int id(std::string_view word) const;
  int add_word(const std::string& word);

  const std::map<Gram, Entry>& grams(int n) const { return grams_.at(static_cast<std::size_t>(n - 1)); }
  std::map<Gram, Entry>& mutable_grams(int n) { return grams_.at(static_cast<std::size_t>(n - 1)); }

  // log10 p(word | context). `context` holds preceding word ids, most
  // recent last; only the last order-1 are consulted.
  double log10_prob(std::span<const int> context, int word) const;

  // Includes the end-of-sentence event; <s> is the initial context.
  double sentence_log10prob(const Tokens& tokens) const;
  double sentence_logprob(const Tokens& tokens) const;  // natural log
  // 10^(-log10prob / (len + 1)).
  double perplexity(const Tokens& tokens) const;

 private:
  std::vector<std::string> words_;
  std::map<std::string, int, std::less<>> ids_;
  std::vector<std::map<Gram, Entry>> grams_;
};

NgramModel train_ngram(const std::vector<Tokens>& corpus, int order = 3);

NgramModel read_arpa(const std::string& path);
NgramModel parse_arpa(const std::string& text, const std::string& source);
std::string format_arpa(const NgramModel& model);
void write_arpa(const NgramModel& model, const std::string& path);

}  // namespace l2rs
