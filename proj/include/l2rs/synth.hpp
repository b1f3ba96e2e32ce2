#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "l2rs/features.hpp"
#include "l2rs/nbest.hpp"
#include "l2rs/sidecar.hpp"

namespace l2rs {

// Desk-scale stand-in for a decoded speech corpus. References come from an
// LDA-style generator over disjoint topic vocabularies plus shared function
// words; hypotheses are noisy corruptions of the reference; every decoder
// score and external feature is a noisy monotone function of the
// hypothesis WER with a per-block informativeness in [0, 1].
struct SynthConfig {
  std::uint64_t seed = 1;

  std::size_t num_topics = 4;
  std::size_t words_per_topic = 60;
  std::size_t function_words = 20;
  double function_word_rate = 0.3;
  double doc_topic_concentration = 0.2;
  std::size_t min_length = 6;
  std::size_t max_length = 14;

  std::size_t train_lists = 300;
  std::size_t dev_lists = 100;
  std::size_t test_lists = 100;
  std::size_t corpus_sentences = 2000;  // extra LM/topic-model training text
  std::size_t nbest = 20;

  double noise_rate = 0.4;  // upper bound of per-token corruption probability

  double am_info = 0.35;
  double lm_info = 0.35;
  double rnnlm_info = 0.45;
  double bertlm_info = 0.35;
  double embedding_info = 0.45;
  std::size_t embedding_dim = 16;

  int schema_topics = 50;  // topic-vector dim written into the default schema
};

struct SynthSplit {
  Dataset data;
  Sidecar embeddings;
};

struct SynthCorpus {
  SynthConfig config;
  std::vector<std::vector<std::string>> topic_words;  // generating topics
  std::vector<std::vector<double>> topic_word_probs;  // same shape as topic_words
  std::vector<std::string> function_words;
  std::vector<Tokens> transcripts;  // training text for the LM and topic model
  SynthSplit train, dev, test;
};

inline constexpr std::string_view kTruthScalar = "truth-neg-wer";

SynthCorpus generate_synthetic(const SynthConfig& config);

// Schema over every block the generator provides, except the ground-truth
// scalar.
FeatureSchema default_synth_schema(const SynthConfig& config);

// Writes corpus.txt, {train,dev,test}.nbest.jsonl, {split}.bert-emb.vec,
// schema.txt and manifest.json into `dir`.
void write_synthetic(const SynthCorpus& corpus, const std::string& dir);

}  // namespace l2rs
