#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace l2rs {

using Tokens = std::vector<std::string>;

// Pointer from a hypothesis into a dense-vector sidecar file.
struct ExtVecRef {
  std::string file;
  long long row = 0;

  friend bool operator==(const ExtVecRef&, const ExtVecRef&) = default;
};

struct Hypothesis {
  Tokens tokens;        // empty is a legal decoder output
  double am_score = 0;  // ln P_AM(a|w)
  double lm_score = 0;  // ln P_LM(w)
  std::map<std::string, double> ext_scalars;
  std::map<std::string, std::vector<double>> ext_vectors;  // filled from sidecars, not serialized inline
  std::vector<ExtVecRef> ext_vec_refs;
  int asr_rank = 0;

  friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
};

struct NBestList {
  std::string utt_id;
  std::vector<Hypothesis> hypotheses;
  std::optional<Tokens> reference;

  friend bool operator==(const NBestList&, const NBestList&) = default;
};

using Dataset = std::vector<NBestList>;

inline constexpr std::size_t kDefaultNBest = 50;

// Throws ParseError when the asr_rank values of a list are not a permutation
// of 0..n-1.
void check_asr_ranks(const NBestList& list, const std::string& source, std::size_t line);

// One JSON record per line. Scores are written with 17 significant digits.
std::string format_nbest_record(const NBestList& list);
NBestList parse_nbest_record(const std::string& line, const std::string& source, std::size_t line_no);

Dataset read_nbest(const std::string& path);
void write_nbest(const Dataset& dataset, const std::string& path);

// Loads every ext_vec_ref of every hypothesis from sidecar files, resolving
// relative file names against `base_dir`, and stores the rows in ext_vectors
// under the sidecar's declared feature name.
void resolve_ext_vectors(Dataset& dataset, const std::string& base_dir);

// Keeps at most `max_hyps` hypotheses per list, dropping the worst ASR ranks.
void truncate_nbest(Dataset& dataset, std::size_t max_hyps);

}  // namespace l2rs
