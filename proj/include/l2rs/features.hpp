#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "l2rs/nbest.hpp"
#include "l2rs/ngram.hpp"
#include "l2rs/topic_model.hpp"

namespace l2rs {

enum class BlockSource {
  kNgram,            // ln P(w), ln perplexity from the built-in n-gram LM
  kTopicLm,          // ln p(w|theta), ln perplexity from the topic-model LM
  kTopicVector,      // theta itself
  kHypothesisField,  // am_score or lm_score
  kExtScalar,        // ext_scalars[key], optionally logged
  kExtVector,        // ext_vectors[key]
};

std::string_view source_name(BlockSource source);
BlockSource parse_source(std::string_view name);

struct FeatureBlock {
  std::string name;
  std::size_t dim = 1;
  BlockSource source = BlockSource::kExtScalar;
  std::string key;             // field or external feature name; defaults to name
  bool log_transform = false;  // perplexity-type scalars enter as log-perplexity

  friend bool operator==(const FeatureBlock&, const FeatureBlock&) = default;
};

// Ordered blocks making up the feature vector of a hypothesis. Text form is
// one block per line:
//   <name> <source> <dim> [key=<key>] [transform=log]
// with '#' starting a comment.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<FeatureBlock> blocks);

  const std::vector<FeatureBlock>& blocks() const { return blocks_; }
  std::size_t total_dim() const { return total_dim_; }
  std::size_t offset(std::size_t block) const { return offsets_.at(block); }
  std::size_t index_of(std::string_view name) const;  // throws InvalidArgument
  std::uint64_t id() const { return id_; }

  // Schema holding only the listed blocks, in the given order.
  FeatureSchema select(const std::vector<std::size_t>& block_indices) const;

  friend bool operator==(const FeatureSchema& a, const FeatureSchema& b) { return a.blocks_ == b.blocks_; }

 private:
  std::vector<FeatureBlock> blocks_;
  std::vector<std::size_t> offsets_;
  std::size_t total_dim_ = 0;
  std::uint64_t id_ = 0;
};

std::string format_schema(const FeatureSchema& schema);
FeatureSchema parse_schema(const std::string& text, const std::string& source);
FeatureSchema read_schema(const std::string& path);
void write_schema(const FeatureSchema& schema, const std::string& path);

struct FeatureVector {
  std::vector<double> values;
  std::uint64_t schema_id = 0;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct FeatureModels {
  const NgramModel* ngram = nullptr;
  const TopicModel* topics = nullptr;
  int infer_iterations = 40;
  std::uint64_t seed = 1;
};

// One vector per hypothesis, in list order.
std::vector<FeatureVector> assemble(const NBestList& list, const FeatureSchema& schema, const FeatureModels& models);

// Copies the columns of `from`'s blocks that `to` keeps.
FeatureVector project(const FeatureVector& vector, const FeatureSchema& from, const FeatureSchema& to);

class Normalizer {
 public:
  static constexpr double kMinStddev = 1e-8;

  Normalizer() = default;
  Normalizer(std::vector<double> mean, std::vector<double> stddev, std::uint64_t schema_id);
  static Normalizer identity(std::size_t dim, std::uint64_t schema_id);

  std::size_t dim() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return stddev_; }
  std::uint64_t schema_id() const { return schema_id_; }

  // (x - mean) / stddev; clamped (constant) dimensions map to 0.
  FeatureVector apply(const FeatureVector& vector) const;
  std::vector<FeatureVector> apply(const std::vector<FeatureVector>& vectors) const;
  FeatureVector inverse(const FeatureVector& vector) const;
  bool clamped(std::size_t d) const { return stddev_[d] <= kMinStddev; }

  friend bool operator==(const Normalizer&, const Normalizer&) = default;

 private:
  void check(const FeatureVector& vector) const;

  std::vector<double> mean_;
  std::vector<double> stddev_;
  std::uint64_t schema_id_ = 0;
};

// Population mean and standard deviation per dimension.
Normalizer fit_normalizer(const std::vector<FeatureVector>& train);

// Assembled features for a whole dataset, one entry per list.
// The header line carries the schema's block declarations.
struct FeatureTable {
  FeatureSchema schema;
  std::uint64_t seed = 0;
  std::vector<std::string> utt_ids;
  std::vector<std::vector<FeatureVector>> lists;
};

void write_feature_table(const FeatureTable& table, const std::string& path);
FeatureTable read_feature_table(const std::string& path);

}  // namespace l2rs
