#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "l2rs/eval.hpp"
#include "l2rs/ranker.hpp"
#include "l2rs/synth.hpp"
#include "l2rs/topic_model.hpp"

namespace l2rs::cmd {

// Each command reads its inputs, writes its outputs atomically and prints a
// short summary to `log`. Failures throw l2rs::Error.

struct TrainLmOptions {
  std::string corpus;  // one whitespace-tokenized sentence per line
  int order = 3;
  std::string out;
};
void train_lm(const TrainLmOptions& opt, std::ostream& log);

struct TrainLdaOptions {
  std::string corpus;
  LdaConfig lda;
  std::string out;
};
void train_lda(const TrainLdaOptions& opt, std::ostream& log);

struct ExtractOptions {
  std::string data;
  std::string schema;
  std::string lm;   // optional ARPA file
  std::string lda;  // optional topic model
  int infer_iterations = 40;
  std::uint64_t seed = 1;
  std::size_t nbest = kDefaultNBest;
  std::string out;
};
void extract_features(const ExtractOptions& opt, std::ostream& log);

struct TrainRankerOptions {
  std::string data;
  std::string features;
  RankerConfig ranker;
  std::size_t nbest = kDefaultNBest;
  std::string out;
};
void train_ranker(const TrainRankerOptions& opt, std::ostream& log);

struct RescoreOptions {
  std::string model;
  std::string data;
  std::string features;
  DecodeMode mode = DecodeMode::kFOnly;
  std::size_t nbest = kDefaultNBest;
  std::string out;
};
// Writes the dataset with each list reordered best-first; the score used for
// the ordering is stored as ext_scalars["l2rs-score"]. Relative ext_vec_ref
// paths are rewritten against the output directory.
void rescore(const RescoreOptions& opt, std::ostream& log);

struct EvaluateOptions {
  std::string data;  // hypothesis order in the file is the ranking
  int k = kDefaultNdcgK;
  std::size_t nbest = kDefaultNBest;
  std::string out;  // optional line-delimited records
};
void evaluate(const EvaluateOptions& opt, std::ostream& log);

struct AblateOptions {
  std::string train;
  std::string train_features;
  std::string eval;
  std::string eval_features;
  std::string schema;
  AblationConfig ablation;
  std::size_t nbest = kDefaultNBest;
  std::string out;
};
void ablate(const AblateOptions& opt, std::ostream& log);

struct SynthOptions {
  SynthConfig synth;
  std::string out;  // directory
};
void synth(const SynthOptions& opt, std::ostream& log);

// Helpers shared with tests.
std::vector<Tokens> read_corpus(const std::string& path);
Dataset load_dataset(const std::string& path, std::size_t nbest);
// Feature vectors ordered like `dataset`. Feature tables store each list's
// rows by asr_rank; throws Misalignment when an utterance or row is missing.
std::vector<std::vector<FeatureVector>> align_features(const Dataset& dataset, const FeatureTable& table);

}  // namespace l2rs::cmd
