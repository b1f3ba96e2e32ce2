#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "l2rs/features.hpp"
#include "l2rs/wer.hpp"

namespace l2rs {

inline constexpr double kDefaultC = 10.0;

// Difference vectors phi(better) - phi(worse) for every within-list pair of
// hypotheses whose grades differ. Stored row-major.
class PairSet {
 public:
  struct Origin {
    std::size_t list = 0;
    std::size_t better = 0;
    std::size_t worse = 0;

    friend bool operator==(const Origin&, const Origin&) = default;
  };

  PairSet() = default;
  PairSet(std::size_t dim, std::uint64_t schema_id) : dim_(dim), schema_id_(schema_id) {}

  std::size_t size() const { return origins_.size(); }
  bool empty() const { return origins_.empty(); }
  std::size_t dim() const { return dim_; }
  std::uint64_t schema_id() const { return schema_id_; }
  std::span<const double> diff(std::size_t i) const { return {diffs_.data() + i * dim_, dim_}; }
  const Origin& origin(std::size_t i) const { return origins_[i]; }

  void add(const Origin& origin, std::span<const double> better, std::span<const double> worse);

 private:
  std::size_t dim_ = 0;
  std::uint64_t schema_id_ = 0;
  std::vector<double> diffs_;
  std::vector<Origin> origins_;
};

struct PairOptions {
  std::size_t max_pairs_per_list = 0;  // 0 keeps every pair
  std::uint64_t seed = 1;              // used only when subsampling
};

// Pairs in list order, then (better index, worse index) lexicographically.
PairSet build_pairs(const std::vector<LabeledList>& lists, const std::vector<std::vector<FeatureVector>>& vectors,
                    const PairOptions& options = {});

struct SolverConfig {
  int max_epochs = 200;
  double tolerance = 1e-4;
  std::uint64_t seed = 1;
  // Called after every epoch with the dual variables and the weights.
  std::function<void(int epoch, std::span<const double> alpha, std::span<const double> weights)> on_epoch;
};

struct PrimalStats {
  double objective = 0.0;  // 0.5 |w|^2 + C sum(slack)
  double slack_sum = 0.0;
  std::size_t violations = 0;  // pairs with <w, diff> <= 0
};

PrimalStats primal_objective(std::span<const double> weights, const PairSet& pairs, double C);

struct TrainingDiagnostics {
  double C = kDefaultC;
  double objective = 0.0;
  double slack_sum = 0.0;
  std::size_t violations = 0;
  std::size_t num_pairs = 0;
  int epochs = 0;
  bool converged = false;
  // Per epoch: primal objective of the incumbent (best iterate so far), of
  // the raw iterate, and the dual objective sum(alpha) - 0.5 |w|^2.
  std::vector<double> epoch_objectives;
  std::vector<double> iterate_objectives;
  std::vector<double> dual_objectives;

  friend bool operator==(const TrainingDiagnostics&, const TrainingDiagnostics&) = default;
};

struct SolverResult {
  std::vector<double> weights;
  std::vector<double> alpha;
  TrainingDiagnostics diagnostics;
};

// Linear RankSVM with L1 slack on pairwise differences, no bias, solved by
// dual coordinate descent with per-epoch shuffled coordinate order. Dual
// coordinate steps only guarantee dual ascent, so the returned weights (and
// alpha) are those of the epoch-end iterate with the lowest primal objective.
SolverResult train_ranksvm(const PairSet& pairs, double C, const SolverConfig& config = {});

struct RankModel {
  FeatureSchema schema;
  Normalizer normalizer;
  std::vector<double> weights;
  std::uint64_t seed = 0;
  TrainingDiagnostics diagnostics;

  double C() const { return diagnostics.C; }
  friend bool operator==(const RankModel&, const RankModel&) = default;
};

struct RankerConfig {
  double C = kDefaultC;
  SolverConfig solver;
  PairOptions pairs;
};

// Fits the normalizer on every training vector, builds pairs from the
// normalized vectors and trains the solver.
RankModel train_rank_model(const std::vector<LabeledList>& lists, const std::vector<std::vector<FeatureVector>>& vectors,
                           const FeatureSchema& schema, const RankerConfig& config = {});

double score(const RankModel& model, const FeatureVector& vector);
std::vector<double> score_all(const RankModel& model, const std::vector<FeatureVector>& vectors);

// Indices by descending score, exact ties by ascending asr_rank.
std::vector<std::size_t> rank_by_scores(const NBestList& list, std::span<const double> scores);
std::vector<std::size_t> rescore(const RankModel& model, const NBestList& list, const std::vector<FeatureVector>& vectors);

enum class DecodeMode { kFOnly, kAdditive };
DecodeMode parse_decode_mode(std::string_view name);
std::string_view decode_mode_name(DecodeMode mode);

// f-only: argmax f(phi). additive: argmax lm_score + am_score + f(phi).
std::size_t decode(const RankModel& model, const NBestList& list, const std::vector<FeatureVector>& vectors,
                   DecodeMode mode = DecodeMode::kFOnly);

std::string format_rank_model(const RankModel& model);
RankModel parse_rank_model(const std::string& text, const std::string& source);
void write_rank_model(const RankModel& model, const std::string& path);
RankModel read_rank_model(const std::string& path);

}  // namespace l2rs
