#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "l2rs/nbest.hpp"

namespace l2rs {

struct LdaConfig {
  int num_topics = 50;
  int iterations = 200;
  double alpha = -1.0;  // <= 0 selects 50 / num_topics
  double beta = 0.01;
  std::uint64_t seed = 1;

  double effective_alpha() const { return alpha > 0.0 ? alpha : 50.0 / num_topics; }
};

// Trained LDA parameters. phi is stored row-major, one row per topic.
class TopicModel {
 public:
  TopicModel() = default;
  TopicModel(std::vector<std::string> vocab, int num_topics, double alpha, double beta);

  int num_topics() const { return num_topics_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  const std::vector<std::string>& vocab() const { return vocab_; }

  // -1 when out of vocabulary.
  int id(std::string_view word) const;

  double phi(int topic, int word) const { return phi_[static_cast<std::size_t>(topic) * vocab_.size() + static_cast<std::size_t>(word)]; }
  double& phi(int topic, int word) { return phi_[static_cast<std::size_t>(topic) * vocab_.size() + static_cast<std::size_t>(word)]; }

  friend bool operator==(const TopicModel&, const TopicModel&) = default;

 private:
  std::vector<std::string> vocab_;
  std::map<std::string, int, std::less<>> ids_;
  int num_topics_ = 0;
  double alpha_ = 0.0;
  double beta_ = 0.0;
  std::vector<double> phi_;
};

// Collapsed Gibbs sampling; phi is read off the final sampler state.
TopicModel train_lda(const std::vector<Tokens>& corpus, const LdaConfig& config);

// theta for one document with phi held fixed, averaged over the last quarter
// of the sweeps. Documents with no in-vocabulary word get the uniform vector.
std::vector<double> infer_theta(const TopicModel& model, const Tokens& doc, int iterations, std::uint64_t seed);

struct TopicLmScore {
  double logprob = 0.0;          // sum of ln p(w|theta) over in-vocabulary words
  std::size_t scored_words = 0;
  std::size_t oov_words = 0;

  // exp(-logprob / scored_words); 1 when nothing was scored.
  double perplexity() const;
};

// Document-specific unigram p(w|theta) = sum_k theta_k phi_kw.
double topic_unigram_prob(const TopicModel& model, const std::vector<double>& theta, int word);
TopicLmScore tm_lm_logprob(const TopicModel& model, const std::vector<double>& theta, const Tokens& doc);

std::string format_topic_model(const TopicModel& model, std::uint64_t seed);
TopicModel parse_topic_model(const std::string& text, const std::string& source);
void write_topic_model(const TopicModel& model, const std::string& path, std::uint64_t seed = 0);
TopicModel read_topic_model(const std::string& path);

}  // namespace l2rs
