#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "l2rs/ranker.hpp"
#include "l2rs/wer.hpp"

namespace l2rs {

inline constexpr int kDefaultNdcgK = 10;

// DCG with gain 2^grade - 1 and discount log2(position + 1), positions
// counted from 1. `permutation[i]` is the hypothesis placed at position i.
double dcg_at_k(std::span<const std::size_t> permutation, std::span<const int> grades, int k);

// DCG normalized by the ideal ordering; 1 when every grade is 0.
double ndcg_at_k(std::span<const std::size_t> permutation, std::span<const int> grades, int k);

struct RankingReport {
  int k = kDefaultNdcgK;
  std::vector<std::string> utt_ids;
  std::vector<double> ndcg;
  double mean_ndcg = 0.0;
};

RankingReport ranking_report(const std::vector<LabeledList>& lists,
                             const std::vector<std::vector<std::size_t>>& permutations, int k = kDefaultNdcgK);

struct PooledWer {
  std::size_t errors = 0;
  std::size_t ref_words = 0;
  double wer = 0.0;  // errors / ref_words; errors when no reference words
};

PooledWer pool(std::span<const EditStats> stats);

// Pooled WER of `selected[i]` against `references[i]`.
PooledWer corpus_wer(const std::vector<Tokens>& selected, const std::vector<std::optional<Tokens>>& references,
                     const std::vector<std::string>& utt_ids = {});

// Lowest-WER hypothesis, ties to the lowest asr_rank.
std::size_t oracle_index(const NBestList& list);
// The hypothesis with asr_rank 0.
std::size_t baseline_index(const NBestList& list);

double oracle_wer(const Dataset& dataset);

struct UtteranceWer {
  std::string utt_id;
  std::size_t selected = 0, oracle = 0, baseline = 0;
  EditStats selected_edits, oracle_edits, baseline_edits;
};

struct WerReport {
  PooledWer selected, oracle, baseline;
  std::vector<UtteranceWer> utterances;
};

WerReport wer_report(const Dataset& dataset, const std::vector<std::size_t>& selected);

std::string format_ranking_table(const RankingReport& report);
std::string format_wer_table(const WerReport& report);
// Line-delimited JSON: one record per utterance, then a corpus summary.
std::string format_report_records(const RankingReport& ranking, const WerReport& wer);

// Mean NDCG@k of a trained model over labeled lists.
double model_ndcg(const RankModel& model, const std::vector<LabeledList>& lists,
                  const std::vector<std::vector<FeatureVector>>& vectors, int k = kDefaultNdcgK);

struct AblationRow {
  std::string block;
  std::optional<std::size_t> dim_index;  // set for per-dimension rows
  std::size_t dims = 0;
  double train_ndcg = 0.0;
  double eval_ndcg = 0.0;
};

struct AblationConfig {
  RankerConfig ranker;
  int k = kDefaultNdcgK;
  bool per_dimension = false;
  bool include_full = true;
};

// Trains one model per block (and per scalar dimension when requested) on
// that slice alone. The last row is the full schema when include_full.
std::vector<AblationRow> ablate_features(const std::vector<LabeledList>& train,
                                         const std::vector<std::vector<FeatureVector>>& train_vectors,
                                         const std::vector<LabeledList>& eval,
                                         const std::vector<std::vector<FeatureVector>>& eval_vectors,
                                         const FeatureSchema& schema, const AblationConfig& config = {});

std::string format_ablation_table(const std::vector<AblationRow>& rows, int k = kDefaultNdcgK);
std::string format_ablation_records(const std::vector<AblationRow>& rows, int k = kDefaultNdcgK);

}  // namespace l2rs
