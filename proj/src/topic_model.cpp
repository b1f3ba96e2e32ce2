#include "l2rs/topic_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "l2rs/error.hpp"
#include "l2rs/io.hpp"
#include "l2rs/random.hpp"

namespace l2rs {

TopicModel::TopicModel(std::vector<std::string> vocab, int num_topics, double alpha, double beta)
    : vocab_(std::move(vocab)),
      num_topics_(num_topics),
      alpha_(alpha),
      beta_(beta),
      phi_(static_cast<std::size_t>(num_topics) * vocab_.size(), 0.0) {
  for (std::size_t i = 0; i < vocab_.size(); ++i) ids_.emplace(vocab_[i], static_cast<int>(i));
}

int TopicModel::id(std::string_view word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? -1 : it->second;
}

TopicModel train_lda(const std::vector<Tokens>& corpus, const LdaConfig& config) {
  if (config.num_topics < 1) throw InvalidArgument("LDA needs at least one topic");
  if (config.iterations < 1) throw InvalidArgument("LDA needs at least one iteration");
  std::set<std::string> words;
  for (const auto& doc : corpus) words.insert(doc.begin(), doc.end());
  if (words.empty()) throw EmptyCorpus();

  const int K = config.num_topics;
  const double alpha = config.effective_alpha();
  const double beta = config.beta;
  TopicModel model(std::vector<std::string>(words.begin(), words.end()), K, alpha, beta);
  const std::size_t W = model.vocab_size();
  const double wbeta = static_cast<double>(W) * beta;

  std::vector<std::vector<int>> docs;
  docs.reserve(corpus.size());
  for (const auto& doc : corpus) {
    std::vector<int> ids;
    ids.reserve(doc.size());
    for (const auto& w : doc) ids.push_back(model.id(w));
    docs.push_back(std::move(ids));
  }

  Rng rng(config.seed);
  std::vector<std::vector<int>> z(docs.size());
  std::vector<int> n_dk(docs.size() * static_cast<std::size_t>(K), 0);
  std::vector<int> n_kw(static_cast<std::size_t>(K) * W, 0);
  std::vector<int> n_k(static_cast<std::size_t>(K), 0);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    z[d].resize(docs[d].size());
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
      z[d][i] = k;
      ++n_dk[d * K + k];
      ++n_kw[static_cast<std::size_t>(k) * W + docs[d][i]];
      ++n_k[k];
    }
  }

  std::vector<double> weights(static_cast<std::size_t>(K));
  for (int it = 0; it < config.iterations; ++it) {
    for (std::size_t d = 0; d < docs.size(); ++d) {
      int* doc_topics = &n_dk[d * K];
      for (std::size_t i = 0; i < docs[d].size(); ++i) {
        const int w = docs[d][i];
        int k = z[d][i];
        --doc_topics[k];
        --n_kw[static_cast<std::size_t>(k) * W + w];
        --n_k[k];
        for (int t = 0; t < K; ++t) {
          weights[t] = (doc_topics[t] + alpha) * (n_kw[static_cast<std::size_t>(t) * W + w] + beta) / (n_k[t] + wbeta);
        }
        k = static_cast<int>(rng.categorical(weights));
        z[d][i] = k;
        ++doc_topics[k];
        ++n_kw[static_cast<std::size_t>(k) * W + w];
        ++n_k[k];
      }
    }
  }

  for (int k = 0; k < K; ++k) {
    for (std::size_t w = 0; w < W; ++w) {
      model.phi(k, static_cast<int>(w)) = (n_kw[static_cast<std::size_t>(k) * W + w] + beta) / (n_k[k] + wbeta);
    }
  }
  return model;
}

std::vector<double> infer_theta(const TopicModel& model, const Tokens& doc, int iterations, std::uint64_t seed) {
  const int K = model.num_topics();
  std::vector<int> ids;
  for (const auto& w : doc) {
    if (int id = model.id(w); id >= 0) ids.push_back(id);
  }
  std::vector<double> theta(static_cast<std::size_t>(K), 1.0 / K);
  if (ids.empty() || K == 1) return theta;
  iterations = std::max(iterations, 1);

  Rng rng(seed);
  const double alpha = model.alpha();
  std::vector<int> z(ids.size());
  std::vector<int> n_dk(static_cast<std::size_t>(K), 0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    z[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
    ++n_dk[z[i]];
  }

  const int window = std::max(1, iterations / 4);
  const double denom = static_cast<double>(ids.size()) + K * alpha;
  std::fill(theta.begin(), theta.end(), 0.0);
  std::vector<double> weights(static_cast<std::size_t>(K));
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      --n_dk[z[i]];
      for (int k = 0; k < K; ++k) weights[k] = (n_dk[k] + alpha) * model.phi(k, ids[i]);
      z[i] = static_cast<int>(rng.categorical(weights));
      ++n_dk[z[i]];
    }
    if (it >= iterations - window) {
      for (int k = 0; k < K; ++k) theta[k] += (n_dk[k] + alpha) / denom;
    }
  }
  double total = 0.0;
  for (double& t : theta) total += (t /= window);
  // Renormalize away accumulated rounding.
  for (double& t : theta) t /= total;
  return theta;
}

double TopicLmScore::perplexity() const {
  if (scored_words == 0) return 1.0;
  return std::exp(-logprob / static_cast<double>(scored_words));
}

double topic_unigram_prob(const TopicModel& model, const std::vector<double>& theta, int word) {
  double p = 0.0;
  for (int k = 0; k < model.num_topics(); ++k) p += theta[static_cast<std::size_t>(k)] * model.phi(k, word);
  return p;
}

TopicLmScore tm_lm_logprob(const TopicModel& model, const std::vector<double>& theta, const Tokens& doc) {
  if (theta.size() != static_cast<std::size_t>(model.num_topics())) {
    throw DimMismatch("theta has " + std::to_string(theta.size()) + " entries for a " +
                      std::to_string(model.num_topics()) + "-topic model");
  }
  TopicLmScore score;
  for (const auto& w : doc) {
    const int id = model.id(w);
    if (id < 0) {
      ++score.oov_words;
      continue;
    }
    score.logprob += std::log(topic_unigram_prob(model, theta, id));
    ++score.scored_words;
  }
  return score;
}

std::string format_topic_model(const TopicModel& model, std::uint64_t seed) {
  std::string out = "l2rs-topic-model v1\n";
  out += "K " + std::to_string(model.num_topics()) + "\n";
  out += "W " + std::to_string(model.vocab_size()) + "\n";
  out += "alpha " + format_double(model.alpha()) + "\n";
  out += "beta " + format_double(model.beta()) + "\n";
  out += "seed " + std::to_string(seed) + "\n";
  out += "vocab\n";
  for (const auto& w : model.vocab()) out += w + "\n";
  out += "phi\n";
  std::vector<double> row(model.vocab_size());
  for (int k = 0; k < model.num_topics(); ++k) {
    for (std::size_t w = 0; w < row.size(); ++w) row[w] = model.phi(k, static_cast<int>(w));
    out += join_doubles(row) + "\n";
  }
  return out;
}

TopicModel parse_topic_model(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> std::string& {
    if (!std::getline(in, line)) throw ParseError(source, line_no + 1, "unexpected end of file");
    ++line_no;
    return line;
  };
  auto keyed = [&](std::string_view key) -> std::string_view {
    auto toks = split_ws(next());
    if (toks.size() != 2 || toks[0] != key) throw ParseError(source, line_no, "expected '" + std::string(key) + " <value>'");
    return toks[1];
  };
  if (trim(next()) != "l2rs-topic-model v1") throw ParseError(source, line_no, "not a topic model file");
  const auto K = parse_int(keyed("K"), source, line_no);
  const auto W = parse_int(keyed("W"), source, line_no);
  const double alpha = parse_double(keyed("alpha"), source, line_no);
  const double beta = parse_double(keyed("beta"), source, line_no);
  keyed("seed");
  if (K < 1 || W < 0) throw ParseError(source, line_no, "bad model dimensions");
  if (trim(next()) != "vocab") throw ParseError(source, line_no, "expected 'vocab'");
  std::vector<std::string> vocab;
  for (long long w = 0; w < W; ++w) vocab.push_back(next());
  if (trim(next()) != "phi") throw ParseError(source, line_no, "expected 'phi'");
  TopicModel model(std::move(vocab), static_cast<int>(K), alpha, beta);
  for (int k = 0; k < K; ++k) {
    auto toks = split_ws(next());
    if (static_cast<long long>(toks.size()) != W) throw ParseError(source, line_no, "phi row has wrong length");
    for (long long w = 0; w < W; ++w) model.phi(k, static_cast<int>(w)) = parse_double(toks[static_cast<std::size_t>(w)], source, line_no);
  }
  return model;
}

void write_topic_model(const TopicModel& model, const std::string& path, std::uint64_t seed) {
  write_file_atomic(path, format_topic_model(model, seed));
}

TopicModel read_topic_model(const std::string& path) { return parse_topic_model(read_file(path), path); }

}  // namespace l2rs
