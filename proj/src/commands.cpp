#include "l2rs/commands.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>

#include "l2rs/error.hpp"
#include "l2rs/io.hpp"
#include "l2rs/ngram.hpp"

namespace l2rs::cmd {

namespace fs = std::filesystem;

namespace {

void require(const std::string& path, const char* what) {
  if (path.empty()) throw InvalidArgument(std::string("missing required path: ") + what);
  if (!fs::exists(path)) throw IoError(std::string(what) + " '" + path + "' does not exist");
}

void require_out(const std::string& path) {
  if (path.empty()) throw InvalidArgument("missing required --out");
}

// Sidecar paths are relative to the N-best file; keep them valid when the
// output lands in another directory.
std::string rebase(const std::string& file, const fs::path& from, const fs::path& to) {
  if (fs::path(file).is_absolute() || from == to) return file;
  return (from / file).lexically_normal().lexically_relative(to).generic_string();
}

std::vector<LabeledList> label_all(const Dataset& dataset) {
  std::vector<LabeledList> out;
  out.reserve(dataset.size());
  for (const auto& list : dataset) out.push_back(label_list(list));
  return out;
}

}  // namespace

std::vector<Tokens> read_corpus(const std::string& path) {
  std::vector<Tokens> corpus;
  for (const auto& line : read_lines(path)) {
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    corpus.emplace_back(toks.begin(), toks.end());
  }
  return corpus;
}

Dataset load_dataset(const std::string& path, std::size_t nbest) {
  auto dataset = read_nbest(path);
  truncate_nbest(dataset, nbest);
  resolve_ext_vectors(dataset, fs::path(path).parent_path().string());
  return dataset;
}

std::vector<std::vector<FeatureVector>> align_features(const Dataset& dataset, const FeatureTable& table) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < table.utt_ids.size(); ++i) index[table.utt_ids[i]] = i;
  std::vector<std::vector<FeatureVector>> out;
  out.reserve(dataset.size());
  for (const auto& list : dataset) {
    auto it = index.find(list.utt_id);
    if (it == index.end()) throw Misalignment(list.utt_id);
    // Rows are stored by ASR rank, so reordered or truncated lists still line up.
    const auto& vecs = table.lists[it->second];
    std::vector<FeatureVector> kept;
    kept.reserve(list.hypotheses.size());
    for (const auto& h : list.hypotheses) {
      const auto r = static_cast<std::size_t>(h.asr_rank);
      if (r >= vecs.size()) throw Misalignment(list.utt_id);
      kept.push_back(vecs[r]);
    }
    out.push_back(std::move(kept));
  }
  return out;
}

void train_lm(const TrainLmOptions& opt, std::ostream& log) {
  require(opt.corpus, "corpus");
  require_out(opt.out);
  const auto model = train_ngram(read_corpus(opt.corpus), opt.order);
  write_arpa(model, opt.out);
  log << "train-lm: order " << model.order() << ", vocab " << model.vocab_size() << " -> " << opt.out << "\n";
}

void train_lda(const TrainLdaOptions& opt, std::ostream& log) {
  require(opt.corpus, "corpus");
  require_out(opt.out);
  const auto model = l2rs::train_lda(read_corpus(opt.corpus), opt.lda);
  write_topic_model(model, opt.out, opt.lda.seed);
  log << "train-lda: K " << model.num_topics() << ", vocab " << model.vocab_size() << ", seed " << opt.lda.seed
      << " -> " << opt.out << "\n";
}

void extract_features(const ExtractOptions& opt, std::ostream& log) {
  require(opt.data, "dataset");
  require(opt.schema, "schema");
  require_out(opt.out);
  const auto schema = read_schema(opt.schema);
  const auto dataset = load_dataset(opt.data, opt.nbest);

  std::optional<NgramModel> lm;
  std::optional<TopicModel> tm;
  if (!opt.lm.empty()) {
    require(opt.lm, "n-gram model");
    lm = read_arpa(opt.lm);
  }
  if (!opt.lda.empty()) {
    require(opt.lda, "topic model");
    tm = read_topic_model(opt.lda);
  }
  FeatureModels models;
  models.ngram = lm ? &*lm : nullptr;
  models.topics = tm ? &*tm : nullptr;
  models.infer_iterations = opt.infer_iterations;
  models.seed = opt.seed;

  FeatureTable table;
  table.schema = schema;
  table.seed = opt.seed;
  for (const auto& list : dataset) {
    auto vectors = assemble(list, schema, models);
    std::vector<FeatureVector> by_rank(vectors.size());
    for (std::size_t h = 0; h < vectors.size(); ++h) {
      by_rank[static_cast<std::size_t>(list.hypotheses[h].asr_rank)] = std::move(vectors[h]);
    }
    table.utt_ids.push_back(list.utt_id);
    table.lists.push_back(std::move(by_rank));
  }
  write_feature_table(table, opt.out);
  log << "extract-features: " << dataset.size() << " lists, dim " << schema.total_dim() << ", schema " << hex64(schema.id())
      << " -> " << opt.out << "\n";
}

void train_ranker(const TrainRankerOptions& opt, std::ostream& log) {
  require(opt.data, "dataset");
  require(opt.features, "features");
  require_out(opt.out);
  const auto dataset = load_dataset(opt.data, opt.nbest);
  const auto table = read_feature_table(opt.features);
  const auto vectors = align_features(dataset, table);
  const auto model = train_rank_model(label_all(dataset), vectors, table.schema, opt.ranker);
  write_rank_model(model, opt.out);
  const auto& d = model.diagnostics;
  log << "train-ranker: " << d.num_pairs << " pairs, C " << d.C << ", epochs " << d.epochs
      << (d.converged ? " (converged)" : " (epoch limit)") << ", objective " << d.objective << ", violations "
      << d.violations << " -> " << opt.out << "\n";
}

void rescore(const RescoreOptions& opt, std::ostream& log) {
  require(opt.model, "model");
  require(opt.data, "dataset");
  require(opt.features, "features");
  require_out(opt.out);
  const auto model = read_rank_model(opt.model);
  auto dataset = read_nbest(opt.data);
  truncate_nbest(dataset, opt.nbest);
  const auto table = read_feature_table(opt.features);
  if (table.schema.id() != model.schema.id()) {
    throw SchemaMismatch("features " + hex64(table.schema.id()) + " were not extracted with the model schema " +
                         hex64(model.schema.id()));
  }
  const auto vectors = align_features(dataset, table);
  const auto in_dir = fs::absolute(opt.data).parent_path();
  const auto out_dir = fs::absolute(opt.out).parent_path();

  Dataset out;
  out.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& list = dataset[i];
    auto scores = score_all(model, vectors[i]);
    if (opt.mode == DecodeMode::kAdditive) {
      for (std::size_t h = 0; h < scores.size(); ++h) {
        scores[h] += list.hypotheses[h].am_score + list.hypotheses[h].lm_score;
      }
    }
    const auto perm = rank_by_scores(list, scores);
    NBestList reordered;
    reordered.utt_id = list.utt_id;
    reordered.reference = list.reference;
    for (auto h : perm) {
      Hypothesis hyp = list.hypotheses[h];
      hyp.ext_scalars["l2rs-score"] = scores[h];
      for (auto& ref : hyp.ext_vec_refs) ref.file = rebase(ref.file, in_dir, out_dir);
      reordered.hypotheses.push_back(std::move(hyp));
    }
    out.push_back(std::move(reordered));
  }
  write_nbest(out, opt.out);
  log << "rescore: " << out.size() << " lists, mode " << decode_mode_name(opt.mode) << " -> " << opt.out << "\n";
}

void evaluate(const EvaluateOptions& opt, std::ostream& log) {
  require(opt.data, "dataset");
  if (opt.k < 1) throw InvalidK(opt.k);
  auto dataset = read_nbest(opt.data);
  truncate_nbest(dataset, opt.nbest);
  const auto labeled = label_all(dataset);
  std::vector<std::vector<std::size_t>> perms;
  std::vector<std::size_t> selected;
  for (const auto& list : dataset) {
    if (list.hypotheses.empty()) throw InvalidArgument("N-best list '" + list.utt_id + "' is empty");
    std::vector<std::size_t> identity(list.hypotheses.size());
    for (std::size_t h = 0; h < identity.size(); ++h) identity[h] = h;
    perms.push_back(std::move(identity));
    selected.push_back(0);
  }
  const auto ranking = ranking_report(labeled, perms, opt.k);
  const auto wer = wer_report(dataset, selected);
  log << format_ranking_table(ranking) << "\n" << format_wer_table(wer);
  if (!opt.out.empty()) write_file_atomic(opt.out, format_report_records(ranking, wer));
}

void ablate(const AblateOptions& opt, std::ostream& log) {
  require(opt.train, "training dataset");
  require(opt.train_features, "training features");
  require(opt.eval, "evaluation dataset");
  require(opt.eval_features, "evaluation features");
  const auto train = load_dataset(opt.train, opt.nbest);
  const auto eval = load_dataset(opt.eval, opt.nbest);
  const auto train_table = read_feature_table(opt.train_features);
  const auto eval_table = read_feature_table(opt.eval_features);
  if (train_table.schema.id() != eval_table.schema.id()) {
    throw SchemaMismatch("training and evaluation features use different schemas");
  }
  const FeatureSchema& schema = train_table.schema;
  auto train_vectors = align_features(train, train_table);
  auto eval_vectors = align_features(eval, eval_table);
  // An explicit schema selects a subset of the extracted blocks.
  FeatureSchema active = schema;
  if (!opt.schema.empty()) {
    require(opt.schema, "schema");
    active = read_schema(opt.schema);
    for (auto* vs : {&train_vectors, &eval_vectors}) {
      for (auto& list : *vs) {
        for (auto& v : list) v = project(v, schema, active);
      }
    }
  }
  const auto rows = ablate_features(label_all(train), train_vectors, label_all(eval), eval_vectors, active, opt.ablation);
  log << format_ablation_table(rows, opt.ablation.k);
  if (!opt.out.empty()) write_file_atomic(opt.out, format_ablation_records(rows, opt.ablation.k));
}

void synth(const SynthOptions& opt, std::ostream& log) {
  require_out(opt.out);
  const auto corpus = generate_synthetic(opt.synth);
  write_synthetic(corpus, opt.out);
  log << "synth: seed " << opt.synth.seed << ", " << corpus.train.data.size() << "/" << corpus.dev.data.size() << "/"
      << corpus.test.data.size() << " lists, " << corpus.transcripts.size() << " transcripts -> " << opt.out << "\n";
}

}  // namespace l2rs::cmd
