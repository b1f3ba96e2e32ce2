#include "l2rs/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "l2rs/error.hpp"
#include "l2rs/io.hpp"
#include "l2rs/random.hpp"

namespace l2rs {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

void PairSet::add(const Origin& origin, std::span<const double> better, std::span<const double> worse) {
  if (better.size() != dim_ || worse.size() != dim_) throw DimMismatch("pair vectors do not match the pair set dim");
  for (std::size_t d = 0; d < dim_; ++d) diffs_.push_back(better[d] - worse[d]);
  origins_.push_back(origin);
}

PairSet build_pairs(const std::vector<LabeledList>& lists, const std::vector<std::vector<FeatureVector>>& vectors,
                    const PairOptions& options) {
  if (lists.size() != vectors.size()) {
    throw Misalignment(lists.empty() ? std::string("<dataset>") : lists.front().list.utt_id);
  }
  std::size_t dim = 0;
  std::uint64_t schema_id = 0;
  bool have_dim = false;
  for (std::size_t l = 0; l < lists.size(); ++l) {
    if (lists[l].labels.size() != vectors[l].size()) throw Misalignment(lists[l].list.utt_id);
    for (const auto& v : vectors[l]) {
      if (!have_dim) {
        dim = v.values.size();
        schema_id = v.schema_id;
        have_dim = true;
      } else if (v.values.size() != dim || v.schema_id != schema_id) {
        throw SchemaMismatch("pair construction mixes vectors from different schemas");
      }
    }
  }

  PairSet pairs(dim, schema_id);
  Rng rng(options.seed);
  std::vector<PairSet::Origin> candidates;
  for (std::size_t l = 0; l < lists.size(); ++l) {
    const auto& labels = lists[l].labels;
    candidates.clear();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[i] > labels[j]) candidates.push_back({l, i, j});
      }
    }
    if (options.max_pairs_per_list > 0 && candidates.size() > options.max_pairs_per_list) {
      std::vector<std::size_t> keep(candidates.size());
      std::iota(keep.begin(), keep.end(), 0);
      rng.shuffle(keep);
      keep.resize(options.max_pairs_per_list);
      std::sort(keep.begin(), keep.end());
      std::vector<PairSet::Origin> kept;
      for (auto k : keep) kept.push_back(candidates[k]);
      candidates = std::move(kept);
    }
    for (const auto& c : candidates) pairs.add(c, vectors[l][c.better].values, vectors[l][c.worse].values);
  }
  return pairs;
}

PrimalStats primal_objective(std::span<const double> weights, const PairSet& pairs, double C) {
  PrimalStats s;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double margin = dot(weights, pairs.diff(i));
    s.slack_sum += std::max(0.0, 1.0 - margin);
    if (margin <= 0.0) ++s.violations;
  }
  s.objective = 0.5 * dot(weights, weights) + C * s.slack_sum;
  return s;
}

SolverResult train_ranksvm(const PairSet& pairs, double C, const SolverConfig& config) {
  if (pairs.empty()) throw NoPairs();
  if (!(C > 0.0) || !std::isfinite(C)) throw InvalidArgument("C must be a positive finite number");
  const std::size_t n = pairs.size();
  const std::size_t dim = pairs.dim();

  std::vector<double> qdiag(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = pairs.diff(i);
    for (double v : x) {
      if (!std::isfinite(v)) {
        const auto& o = pairs.origin(i);
        throw NonFiniteFeature("pair " + std::to_string(i) + " (list " + std::to_string(o.list) + ") has a non-finite difference");
      }
    }
    qdiag[i] = dot(x, x);
  }

  SolverResult result;
  result.weights.assign(dim, 0.0);
  result.alpha.assign(n, 0.0);
  auto& w = result.weights;
  auto& alpha = result.alpha;

  // A zero difference vector leaves w untouched; its dual optimum is the
  // upper bound.
  for (std::size_t i = 0; i < n; ++i) {
    if (qdiag[i] == 0.0) alpha[i] = C;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed);

  auto& diag = result.diagnostics;
  diag.C = C;
  diag.num_pairs = n;
  PrimalStats best = primal_objective(w, pairs, C);
  std::vector<double> best_w = w;
  std::vector<double> best_alpha = alpha;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    rng.shuffle(order);
    double max_violation = 0.0;
    for (std::size_t idx : order) {
      if (qdiag[idx] == 0.0) continue;
      const auto x = pairs.diff(idx);
      const double g = dot(w, x) - 1.0;
      double pg = g;
      if (alpha[idx] == 0.0) {
        pg = std::min(g, 0.0);
      } else if (alpha[idx] == C) {
        pg = std::max(g, 0.0);
      }
      max_violation = std::max(max_violation, std::abs(pg));
      if (pg == 0.0) continue;
      const double old = alpha[idx];
      alpha[idx] = std::clamp(old - g / qdiag[idx], 0.0, C);
      const double delta = alpha[idx] - old;
      if (delta != 0.0) {
        for (std::size_t d = 0; d < dim; ++d) w[d] += delta * x[d];
      }
    }
    diag.epochs = epoch + 1;
    const auto stats = primal_objective(w, pairs, C);
    if (stats.objective <= best.objective) {
      best = stats;
      best_w = w;
      best_alpha = alpha;
    }
    diag.epoch_objectives.push_back(best.objective);
    diag.iterate_objectives.push_back(stats.objective);
    diag.dual_objectives.push_back(std::accumulate(alpha.begin(), alpha.end(), 0.0) - 0.5 * dot(w, w));
    if (config.on_epoch) config.on_epoch(epoch, alpha, w);
    if (max_violation < config.tolerance) {
      diag.converged = true;
      break;
    }
  }

  result.weights = std::move(best_w);
  result.alpha = std::move(best_alpha);
  diag.objective = best.objective;
  diag.slack_sum = best.slack_sum;
  diag.violations = best.violations;
  return result;
}

RankModel train_rank_model(const std::vector<LabeledList>& lists, const std::vector<std::vector<FeatureVector>>& vectors,
                           const FeatureSchema& schema, const RankerConfig& config) {
  if (lists.size() != vectors.size()) throw Misalignment("<dataset>");
  std::vector<FeatureVector> all;
  for (const auto& vs : vectors) {
    for (const auto& v : vs) {
      if (v.schema_id != schema.id() || v.values.size() != schema.total_dim()) {
        throw SchemaMismatch("training vectors were not assembled with the given schema");
      }
      all.push_back(v);
    }
  }
  RankModel model;
  model.schema = schema;
  model.seed = config.solver.seed;
  model.normalizer = fit_normalizer(all);
  std::vector<std::vector<FeatureVector>> normalized;
  normalized.reserve(vectors.size());
  for (const auto& vs : vectors) normalized.push_back(model.normalizer.apply(vs));
  auto pairs = build_pairs(lists, normalized, config.pairs);
  auto solved = train_ranksvm(pairs, config.C, config.solver);
  model.weights = std::move(solved.weights);
  model.diagnostics = std::move(solved.diagnostics);
  return model;
}

double score(const RankModel& model, const FeatureVector& vector) {
  if (vector.schema_id != model.schema.id()) {
    throw SchemaMismatch("vector schema " + hex64(vector.schema_id) + " does not match model schema " +
                         hex64(model.schema.id()));
  }
  return dot(model.weights, model.normalizer.apply(vector).values);
}

std::vector<double> score_all(const RankModel& model, const std::vector<FeatureVector>& vectors) {
  std::vector<double> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) out.push_back(score(model, v));
  return out;
}

std::vector<std::size_t> rank_by_scores(const NBestList& list, std::span<const double> scores) {
  if (scores.size() != list.hypotheses.size()) throw Misalignment(list.utt_id);
  std::vector<std::size_t> perm(scores.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return list.hypotheses[a].asr_rank < list.hypotheses[b].asr_rank;
  });
  return perm;
}

std::vector<std::size_t> rescore(const RankModel& model, const NBestList& list, const std::vector<FeatureVector>& vectors) {
  if (vectors.size() != list.hypotheses.size()) throw Misalignment(list.utt_id);
  const auto scores = score_all(model, vectors);
  return rank_by_scores(list, scores);
}

DecodeMode parse_decode_mode(std::string_view name) {
  if (name == "f-only") return DecodeMode::kFOnly;
  if (name == "additive") return DecodeMode::kAdditive;
  throw InvalidArgument("unknown decode mode '" + std::string(name) + "' (expected f-only or additive)");
}

std::string_view decode_mode_name(DecodeMode mode) { return mode == DecodeMode::kFOnly ? "f-only" : "additive"; }

std::size_t decode(const RankModel& model, const NBestList& list, const std::vector<FeatureVector>& vectors,
                   DecodeMode mode) {
  if (list.hypotheses.empty()) throw InvalidArgument("cannot decode an empty N-best list '" + list.utt_id + "'");
  if (vectors.size() != list.hypotheses.size()) throw Misalignment(list.utt_id);
  auto scores = score_all(model, vectors);
  if (mode == DecodeMode::kAdditive) {
    for (std::size_t h = 0; h < scores.size(); ++h) {
      scores[h] += list.hypotheses[h].lm_score + list.hypotheses[h].am_score;
    }
  }
  return rank_by_scores(list, scores).front();
}

std::string format_rank_model(const RankModel& model) {
  const auto& d = model.diagnostics;
  std::string out = "l2rs-rank-model v1\n";
  out += "seed " + std::to_string(model.seed) + "\n";
  out += "C " + format_double(d.C) + "\n";
  out += "schema_id " + hex64(model.schema.id()) + "\n";
  out += "blocks " + std::to_string(model.schema.blocks().size()) + "\n";
  std::string schema_text = format_schema(model.schema);
  // Drop the comment header; block lines only.
  schema_text.erase(0, schema_text.find('\n') + 1);
  out += schema_text;
  out += "dim " + std::to_string(model.weights.size()) + "\n";
  out += "mean " + join_doubles(model.normalizer.mean()) + "\n";
  out += "stddev " + join_doubles(model.normalizer.stddev()) + "\n";
  out += "weights " + join_doubles(model.weights) + "\n";
  out += "objective " + format_double(d.objective) + "\n";
  out += "slack_sum " + format_double(d.slack_sum) + "\n";
  out += "violations " + std::to_string(d.violations) + "\n";
  out += "pairs " + std::to_string(d.num_pairs) + "\n";
  out += "epochs " + std::to_string(d.epochs) + "\n";
  out += "converged " + std::to_string(d.converged ? 1 : 0) + "\n";
  return out;
}

RankModel parse_rank_model(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> std::string& {
    if (!std::getline(in, line)) throw ParseError(source, line_no + 1, "unexpected end of file");
    ++line_no;
    return line;
  };
  auto keyed = [&](std::string_view key) {
    auto toks = split_ws(next());
    if (toks.empty() || toks[0] != key) throw ParseError(source, line_no, "expected '" + std::string(key) + "'");
    return std::vector<std::string_view>(toks.begin() + 1, toks.end());
  };
  auto single = [&](std::string_view key) {
    auto v = keyed(key);
    if (v.size() != 1) throw ParseError(source, line_no, "expected one value for '" + std::string(key) + "'");
    return v[0];
  };
  auto doubles = [&](std::string_view key, std::size_t n) {
    auto v = keyed(key);
    if (v.size() != n) throw ParseError(source, line_no, "expected " + std::to_string(n) + " values for '" + std::string(key) + "'");
    std::vector<double> out;
    for (auto t : v) out.push_back(parse_double(t, source, line_no));
    return out;
  };

  if (trim(next()) != "l2rs-rank-model v1") throw ParseError(source, line_no, "not a rank model file");
  RankModel model;
  model.seed = static_cast<std::uint64_t>(parse_int(single("seed"), source, line_no));
  model.diagnostics.C = parse_double(single("C"), source, line_no);
  const std::string schema_id(single("schema_id"));
  const auto num_blocks = parse_int(single("blocks"), source, line_no);
  std::string schema_text;
  for (long long b = 0; b < num_blocks; ++b) schema_text += next() + "\n";
  model.schema = parse_schema(schema_text, source);
  if (hex64(model.schema.id()) != schema_id) throw ParseError(source, line_no, "schema_id does not match the block list");
  const auto dim = static_cast<std::size_t>(parse_int(single("dim"), source, line_no));
  if (dim != model.schema.total_dim()) throw ParseError(source, line_no, "dim does not match the schema");
  auto mean = doubles("mean", dim);
  auto stddev = doubles("stddev", dim);
  model.normalizer = Normalizer(std::move(mean), std::move(stddev), model.schema.id());
  model.weights = doubles("weights", dim);
  auto& d = model.diagnostics;
  d.objective = parse_double(single("objective"), source, line_no);
  d.slack_sum = parse_double(single("slack_sum"), source, line_no);
  d.violations = static_cast<std::size_t>(parse_int(single("violations"), source, line_no));
  d.num_pairs = static_cast<std::size_t>(parse_int(single("pairs"), source, line_no));
  d.epochs = static_cast<int>(parse_int(single("epochs"), source, line_no));
  d.converged = parse_int(single("converged"), source, line_no) != 0;
  return model;
}

void write_rank_model(const RankModel& model, const std::string& path) {
  write_file_atomic(path, format_rank_model(model));
}

RankModel read_rank_model(const std::string& path) { return parse_rank_model(read_file(path), path); }

}  // namespace l2rs
