#include "l2rs/wer.hpp"

#include <algorithm>
#include <cctype>

#include "l2rs/error.hpp"

namespace l2rs {

std::string normalize_token(std::string_view token) {
  auto b = token.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = token.find_last_not_of(" \t\r\n");
  std::string out(token.substr(b, e - b + 1));
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

EditStats align(const Tokens& reference, const Tokens& hypothesis) {
  const std::size_t n = reference.size();
  const std::size_t m = hypothesis.size();
  std::vector<std::string> ref(n), hyp(m);
  std::transform(reference.begin(), reference.end(), ref.begin(), normalize_token);
  std::transform(hypothesis.begin(), hypothesis.end(), hyp.begin(), normalize_token);

  // cost[i][j]: distance between ref[0..i) and hyp[0..j).
  const std::size_t width = m + 1;
  std::vector<std::size_t> cost((n + 1) * width);
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return cost[i * width + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i, j - 1) + 1, at(i - 1, j) + 1});
    }
  }

  EditStats stats;
  stats.ref_len = n;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        if (!same) ++stats.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      ++stats.insertions;
      --j;
    } else {
      ++stats.deletions;
      --i;
    }
  }

  if (n == 0) {
    stats.wer = static_cast<double>(stats.insertions);
  } else {
    stats.wer = static_cast<double>(stats.errors()) / static_cast<double>(n);
  }
  return stats;
}

std::vector<int> dense_rank_grades(const std::vector<std::size_t>& errors) {
  std::vector<std::size_t> levels(errors);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const int top = static_cast<int>(levels.size()) - 1;
  std::vector<int> grades(errors.size());
  for (std::size_t h = 0; h < errors.size(); ++h) {
    auto pos = std::lower_bound(levels.begin(), levels.end(), errors[h]) - levels.begin();
    grades[h] = top - static_cast<int>(pos);
  }
  return grades;
}

LabeledList label_list(const NBestList& list) {
  if (!list.reference) throw MissingReference(list.utt_id);
  LabeledList out;
  out.list = list;
  out.edits.reserve(list.hypotheses.size());
  // Every hypothesis shares the reference, so ordering by error count is
  // ordering by WER without floating-point ties.
  std::vector<std::size_t> errors;
  errors.reserve(list.hypotheses.size());
  for (const auto& hyp : list.hypotheses) {
    out.edits.push_back(align(*list.reference, hyp.tokens));
    errors.push_back(out.edits.back().errors());
  }
  out.labels = dense_rank_grades(errors);
  return out;
}

}  // namespace l2rs
