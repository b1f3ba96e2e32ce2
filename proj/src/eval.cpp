#include "l2rs/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "l2rs/error.hpp"
#include "l2rs/io.hpp"

namespace l2rs {

double dcg_at_k(std::span<const std::size_t> permutation, std::span<const int> grades, int k) {
  if (k < 1) throw InvalidK(k);
  const std::size_t depth = std::min(static_cast<std::size_t>(k), permutation.size());
  double dcg = 0.0;
  for (std::size_t i = 0; i < depth; ++i) {
    const int g = grades[permutation[i]];
    dcg += (std::exp2(g) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg;
}

double ndcg_at_k(std::span<const std::size_t> permutation, std::span<const int> grades, int k) {
  if (k < 1) throw InvalidK(k);
  if (permutation.size() != grades.size()) throw InvalidArgument("permutation and grades differ in length");
  std::vector<std::size_t> ideal(grades.size());
  for (std::size_t i = 0; i < ideal.size(); ++i) ideal[i] = i;
  std::stable_sort(ideal.begin(), ideal.end(), [&](std::size_t a, std::size_t b) { return grades[a] > grades[b]; });
  const double idcg = dcg_at_k(ideal, grades, k);
  if (idcg == 0.0) return 1.0;
  return dcg_at_k(permutation, grades, k) / idcg;
}

RankingReport ranking_report(const std::vector<LabeledList>& lists,
                             const std::vector<std::vector<std::size_t>>& permutations, int k) {
  if (k < 1) throw InvalidK(k);
  if (lists.size() != permutations.size()) throw InvalidArgument("one permutation per list is required");
  RankingReport report;
  report.k = k;
  double total = 0.0;
  for (std::size_t i = 0; i < lists.size(); ++i) {
    report.utt_ids.push_back(lists[i].list.utt_id);
    report.ndcg.push_back(ndcg_at_k(permutations[i], lists[i].labels, k));
    total += report.ndcg.back();
  }
  report.mean_ndcg = lists.empty() ? 0.0 : total / static_cast<double>(lists.size());
  return report;
}

PooledWer pool(std::span<const EditStats> stats) {
  PooledWer out;
  for (const auto& s : stats) {
    out.errors += s.errors();
    out.ref_words += s.ref_len;
  }
  out.wer = out.ref_words == 0 ? static_cast<double>(out.errors)
                               : static_cast<double>(out.errors) / static_cast<double>(out.ref_words);
  return out;
}

PooledWer corpus_wer(const std::vector<Tokens>& selected, const std::vector<std::optional<Tokens>>& references,
                     const std::vector<std::string>& utt_ids) {
  if (selected.size() != references.size()) throw InvalidArgument("selections and references differ in count");
  std::vector<EditStats> stats;
  stats.reserve(selected.size());
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (!references[i]) throw MissingReference(i < utt_ids.size() ? utt_ids[i] : "#" + std::to_string(i));
    stats.push_back(align(*references[i], selected[i]));
  }
  return pool(stats);
}

std::size_t oracle_index(const NBestList& list) {
  if (!list.reference) throw MissingReference(list.utt_id);
  if (list.hypotheses.empty()) throw InvalidArgument("N-best list '" + list.utt_id + "' is empty");
  std::size_t best = 0;
  std::size_t best_errors = SIZE_MAX;
  for (std::size_t h = 0; h < list.hypotheses.size(); ++h) {
    const auto e = align(*list.reference, list.hypotheses[h].tokens).errors();
    if (e < best_errors || (e == best_errors && list.hypotheses[h].asr_rank < list.hypotheses[best].asr_rank)) {
      best = h;
      best_errors = e;
    }
  }
  return best;
}

std::size_t baseline_index(const NBestList& list) {
  for (std::size_t h = 0; h < list.hypotheses.size(); ++h) {
    if (list.hypotheses[h].asr_rank == 0) return h;
  }
  throw InvalidArgument("N-best list '" + list.utt_id + "' has no asr_rank 0 hypothesis");
}

double oracle_wer(const Dataset& dataset) {
  std::vector<EditStats> stats;
  for (const auto& list : dataset) {
    stats.push_back(align(*list.reference, list.hypotheses[oracle_index(list)].tokens));
  }
  return pool(stats).wer;
}

WerReport wer_report(const Dataset& dataset, const std::vector<std::size_t>& selected) {
  if (selected.size() != dataset.size()) throw InvalidArgument("one selection per utterance is required");
  WerReport report;
  std::vector<EditStats> sel, orc, base;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& list = dataset[i];
    if (!list.reference) throw MissingReference(list.utt_id);
    UtteranceWer u;
    u.utt_id = list.utt_id;
    u.selected = selected[i];
    u.oracle = oracle_index(list);
    u.baseline = baseline_index(list);
    u.selected_edits = align(*list.reference, list.hypotheses.at(u.selected).tokens);
    u.oracle_edits = align(*list.reference, list.hypotheses[u.oracle].tokens);
    u.baseline_edits = align(*list.reference, list.hypotheses[u.baseline].tokens);
    sel.push_back(u.selected_edits);
    orc.push_back(u.oracle_edits);
    base.push_back(u.baseline_edits);
    report.utterances.push_back(std::move(u));
  }
  report.selected = pool(sel);
  report.oracle = pool(orc);
  report.baseline = pool(base);
  return report;
}

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string format_ranking_table(const RankingReport& report) {
  std::size_t width = 9;
  for (const auto& id : report.utt_ids) width = std::max(width, id.size());
  std::string out = pad("utterance", width) + "  NDCG@" + std::to_string(report.k) + "\n";
  for (std::size_t i = 0; i < report.utt_ids.size(); ++i) {
    out += pad(report.utt_ids[i], width) + "  " + fixed(report.ndcg[i], 4) + "\n";
  }
  out += pad("mean", width) + "  " + fixed(report.mean_ndcg, 4) + "\n";
  return out;
}

std::string format_wer_table(const WerReport& report) {
  auto row = [](const char* name, const PooledWer& w) {
    return pad(name, 10) + "  " + pad(fixed(100.0 * w.wer, 3) + "%", 9) + "  " + std::to_string(w.errors) + "/" +
           std::to_string(w.ref_words) + "\n";
  };
  std::string out = pad("system", 10) + "  " + pad("WER", 9) + "  errors/words\n";
  out += row("selected", report.selected);
  out += row("baseline", report.baseline);
  out += row("oracle", report.oracle);
  return out;
}

std::string format_report_records(const RankingReport& ranking, const WerReport& wer) {
  using nlohmann::ordered_json;
  std::string out;
  for (std::size_t i = 0; i < wer.utterances.size(); ++i) {
    const auto& u = wer.utterances[i];
    ordered_json rec;
    rec["utt_id"] = u.utt_id;
    if (i < ranking.ndcg.size()) rec["ndcg"] = ranking.ndcg[i];
    rec["selected"] = u.selected;
    rec["selected_errors"] = u.selected_edits.errors();
    rec["baseline_errors"] = u.baseline_edits.errors();
    rec["oracle_errors"] = u.oracle_edits.errors();
    rec["ref_words"] = u.selected_edits.ref_len;
    out += rec.dump() + "\n";
  }
  ordered_json summary;
  summary["summary"] = true;
  summary["k"] = ranking.k;
  summary["mean_ndcg"] = ranking.mean_ndcg;
  summary["selected_wer"] = wer.selected.wer;
  summary["baseline_wer"] = wer.baseline.wer;
  summary["oracle_wer"] = wer.oracle.wer;
  summary["ref_words"] = wer.selected.ref_words;
  out += summary.dump() + "\n";
  return out;
}

double model_ndcg(const RankModel& model, const std::vector<LabeledList>& lists,
                  const std::vector<std::vector<FeatureVector>>& vectors, int k) {
  if (lists.size() != vectors.size()) throw Misalignment("<dataset>");
  std::vector<std::vector<std::size_t>> perms;
  perms.reserve(lists.size());
  for (std::size_t i = 0; i < lists.size(); ++i) perms.push_back(rescore(model, lists[i].list, vectors[i]));
  return ranking_report(lists, perms, k).mean_ndcg;
}

namespace {

std::vector<std::vector<FeatureVector>> slice_vectors(const std::vector<std::vector<FeatureVector>>& vectors,
                                                      const FeatureSchema& schema, std::size_t offset,
                                                      std::size_t width, std::uint64_t schema_id) {
  std::vector<std::vector<FeatureVector>> out;
  out.reserve(vectors.size());
  for (const auto& vs : vectors) {
    std::vector<FeatureVector> sliced;
    sliced.reserve(vs.size());
    for (const auto& v : vs) {
      if (v.schema_id != schema.id() || v.values.size() != schema.total_dim()) {
        throw SchemaMismatch("ablation vectors were not assembled with the given schema");
      }
      sliced.push_back({std::vector<double>(v.values.begin() + static_cast<std::ptrdiff_t>(offset),
                                            v.values.begin() + static_cast<std::ptrdiff_t>(offset + width)),
                        schema_id});
    }
    out.push_back(std::move(sliced));
  }
  return out;
}

}  // namespace

std::vector<AblationRow> ablate_features(const std::vector<LabeledList>& train,
                                         const std::vector<std::vector<FeatureVector>>& train_vectors,
                                         const std::vector<LabeledList>& eval,
                                         const std::vector<std::vector<FeatureVector>>& eval_vectors,
                                         const FeatureSchema& schema, const AblationConfig& config) {
  std::vector<AblationRow> rows;
  auto run = [&](const FeatureSchema& slice_schema, std::size_t offset, AblationRow row) {
    const auto tr = slice_vectors(train_vectors, schema, offset, slice_schema.total_dim(), slice_schema.id());
    const auto ev = slice_vectors(eval_vectors, schema, offset, slice_schema.total_dim(), slice_schema.id());
    const auto model = train_rank_model(train, tr, slice_schema, config.ranker);
    row.dims = slice_schema.total_dim();
    row.train_ndcg = model_ndcg(model, train, tr, config.k);
    row.eval_ndcg = model_ndcg(model, eval, ev, config.k);
    rows.push_back(std::move(row));
  };

  for (std::size_t b = 0; b < schema.blocks().size(); ++b) {
    const auto& block = schema.blocks()[b];
    run(schema.select({b}), schema.offset(b), AblationRow{block.name, std::nullopt});
    if (config.per_dimension && block.dim > 1) {
      for (std::size_t d = 0; d < block.dim; ++d) {
        FeatureBlock single;
        single.name = block.name + "[" + std::to_string(d) + "]";
        single.dim = 1;
        single.source = BlockSource::kExtScalar;
        run(FeatureSchema({single}), schema.offset(b) + d, AblationRow{block.name, d});
      }
    }
  }
  if (config.include_full) run(schema, 0, AblationRow{"all", std::nullopt});
  return rows;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows, int k) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.block.size() + 6);
  const std::string metric = "NDCG@" + std::to_string(k);
  std::string out = pad("block", width) + "  " + pad("dims", 5) + "  " + pad("train " + metric, 14) + "  eval " + metric + "\n";
  for (const auto& r : rows) {
    std::string name = r.block;
    if (r.dim_index) name += "[" + std::to_string(*r.dim_index) + "]";
    out += pad(name, width) + "  " + pad(std::to_string(r.dims), 5) + "  " + pad(fixed(r.train_ndcg, 4), 14) + "  " +
           fixed(r.eval_ndcg, 4) + "\n";
  }
  return out;
}

std::string format_ablation_records(const std::vector<AblationRow>& rows, int k) {
  std::string out;
  for (const auto& r : rows) {
    nlohmann::ordered_json rec;
    rec["block"] = r.block;
    if (r.dim_index) rec["dim_index"] = *r.dim_index;
    rec["dims"] = r.dims;
    rec["k"] = k;
    rec["train_ndcg"] = r.train_ndcg;
    rec["eval_ndcg"] = r.eval_ndcg;
    out += rec.dump() + "\n";
  }
  return out;
}

}  // namespace l2rs
