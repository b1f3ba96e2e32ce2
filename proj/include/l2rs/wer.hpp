#pragma once

#include <cstddef>
#include <vector>

#include "l2rs/nbest.hpp"

namespace l2rs {

struct EditStats {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t ref_len = 0;
  double wer = 0.0;

  std::size_t errors() const { return substitutions + insertions + deletions; }

  friend bool operator==(const EditStats&, const EditStats&) = default;
};

// Lowercased, whitespace-trimmed form used for token comparison.
std::string normalize_token(std::string_view token);

// Minimum edit distance alignment with unit costs. Among optimal alignments
// the backtrace prefers substitution/match, then insertion, then deletion.
// With an empty reference, wer is the insertion count.
EditStats align(const Tokens& reference, const Tokens& hypothesis);

struct LabeledList {
  NBestList list;
  std::vector<EditStats> edits;  // one per hypothesis
  std::vector<int> labels;       // dense-rank grades, higher is better
};

// Grades hypotheses by WER: the lowest WER gets the highest grade, equal WERs
// share a grade, and grades are contiguous down to 0.
LabeledList label_list(const NBestList& list);

std::vector<int> dense_rank_grades(const std::vector<std::size_t>& errors);

}  // namespace l2rs
