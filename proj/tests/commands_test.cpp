#include <doctest.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "l2rs/commands.hpp"
#include "l2rs/error.hpp"
#include "l2rs/eval.hpp"
#include "l2rs/io.hpp"
#include "l2rs/wer.hpp"
#include "support.hpp"

using namespace l2rs;
using l2rs::testing::TempDir;

namespace {

SynthConfig small_config() {
  SynthConfig c;
  c.train_lists = 80;
  c.dev_lists = 10;
  c.test_lists = 60;
  c.corpus_sentences = 200;
  c.nbest = 10;
  c.schema_topics = 4;
  return c;
}

double summary_ndcg(const std::string& records_path) {
  const auto lines = read_lines(records_path);
  return nlohmann::json::parse(lines.back()).at("mean_ndcg").get<double>();
}

double summary_wer(const std::string& records_path, const char* which) {
  const auto lines = read_lines(records_path);
  return nlohmann::json::parse(lines.back()).at(which).get<double>();
}

// synth -> train-lm -> train-lda -> extract (train, test) -> train-ranker.
struct Pipeline {
  TempDir dir{"l2rs_cmd_pipeline"};
  std::ostringstream log;

  Pipeline() {
    cmd::SynthOptions s;
    s.synth = small_config();
    s.out = dir.path.string();
    cmd::synth(s, log);
    cmd::train_lm({dir.file("corpus.txt"), 3, dir.file("lm.arpa")}, log);
    cmd::TrainLdaOptions lda;
    lda.corpus = dir.file("corpus.txt");
    lda.lda.num_topics = 4;
    lda.lda.iterations = 30;
    lda.out = dir.file("topics.lda");
    cmd::train_lda(lda, log);
    for (const char* split : {"train", "test"}) {
      cmd::ExtractOptions e;
      e.data = dir.file(std::string(split) + ".nbest.jsonl");
      e.schema = dir.file("schema.txt");
      e.lm = dir.file("lm.arpa");
      e.lda = dir.file("topics.lda");
      e.infer_iterations = 10;
      e.out = dir.file(std::string(split) + ".feats.jsonl");
      cmd::extract_features(e, log);
    }
    cmd::TrainRankerOptions t;
    t.data = dir.file("train.nbest.jsonl");
    t.features = dir.file("train.feats.jsonl");
    t.out = dir.file("model.txt");
    cmd::train_ranker(t, log);
  }

  void rescore(const std::string& data, const std::string& out, DecodeMode mode = DecodeMode::kFOnly) {
    cmd::RescoreOptions r;
    r.model = dir.file("model.txt");
    r.data = data;
    r.features = dir.file("test.feats.jsonl");
    r.mode = mode;
    r.out = out;
    cmd::rescore(r, log);
  }

  void evaluate(const std::string& data, const std::string& out) {
    cmd::EvaluateOptions e;
    e.data = data;
    e.out = out;
    cmd::evaluate(e, log);
  }
};

}  // namespace

TEST_CASE("evaluating a WER-sorted file gives perfect NDCG") {
  TempDir dir("l2rs_cmd_eval");
  cmd::SynthOptions s;
  s.synth = small_config();
  s.synth.test_lists = 15;
  s.out = dir.path.string();
  std::ostringstream log;
  cmd::synth(s, log);
  auto ds = read_nbest(dir.file("test.nbest.jsonl"));
  for (auto& l : ds) {
    std::stable_sort(l.hypotheses.begin(), l.hypotheses.end(), [&](const Hypothesis& a, const Hypothesis& b) {
      return align(*l.reference, a.tokens).errors() < align(*l.reference, b.tokens).errors();
    });
  }
  write_nbest(ds, dir.file("sorted.jsonl"));
  cmd::EvaluateOptions e;
  e.data = dir.file("sorted.jsonl");
  e.out = dir.file("report.jsonl");
  cmd::evaluate(e, log);
  CHECK(summary_ndcg(dir.file("report.jsonl")) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(summary_wer(dir.file("report.jsonl"), "selected_wer") == summary_wer(dir.file("report.jsonl"), "oracle_wer"));
  CHECK(log.str().find("NDCG@10") != std::string::npos);
}

TEST_CASE("end-to-end pipeline beats the decoder order") {
  Pipeline p;
  p.rescore(p.dir.file("test.nbest.jsonl"), p.dir.file("out/rescored.jsonl"));
  p.evaluate(p.dir.file("out/rescored.jsonl"), p.dir.file("rescored.report"));
  p.evaluate(p.dir.file("test.nbest.jsonl"), p.dir.file("baseline.report"));
  const double l2rs = summary_wer(p.dir.file("rescored.report"), "selected_wer");
  const double baseline = summary_wer(p.dir.file("rescored.report"), "baseline_wer");
  const double oracle = summary_wer(p.dir.file("rescored.report"), "oracle_wer");
  CHECK(oracle <= l2rs);
  CHECK(l2rs < baseline);
  CHECK(summary_wer(p.dir.file("baseline.report"), "selected_wer") == baseline);
  CHECK(summary_ndcg(p.dir.file("rescored.report")) > summary_ndcg(p.dir.file("baseline.report")));

  // Sidecar references were rebased into the output directory.
  auto rescored = read_nbest(p.dir.file("out/rescored.jsonl"));
  CHECK(rescored[0].hypotheses[0].ext_vec_refs[0].file == "../test.bert-emb.vec");
  resolve_ext_vectors(rescored, p.dir.file("out"));

  // Rescoring an already rescored file changes nothing but the order it
  // started from.
  p.rescore(p.dir.file("out/rescored.jsonl"), p.dir.file("out/again.jsonl"));
  CHECK(read_file(p.dir.file("out/again.jsonl")) == read_file(p.dir.file("out/rescored.jsonl")));

  // Features extracted from the reordered file are the same table.
  cmd::ExtractOptions e;
  e.data = p.dir.file("out/rescored.jsonl");
  e.schema = p.dir.file("schema.txt");
  e.lm = p.dir.file("lm.arpa");
  e.lda = p.dir.file("topics.lda");
  e.infer_iterations = 10;
  e.out = p.dir.file("out/feats.jsonl");
  cmd::extract_features(e, p.log);
  CHECK(read_file(p.dir.file("out/feats.jsonl")) == read_file(p.dir.file("test.feats.jsonl")));
}

TEST_CASE("a zero-weight model keeps the decoder order") {
  Pipeline p;
  auto model = read_rank_model(p.dir.file("model.txt"));
  for (auto& w : model.weights) w = 0.0;
  write_rank_model(model, p.dir.file("model.txt"));
  for (auto mode : {DecodeMode::kFOnly, DecodeMode::kAdditive}) {
    p.rescore(p.dir.file("test.nbest.jsonl"), p.dir.file("zero.jsonl"), mode);
    const auto out = read_nbest(p.dir.file("zero.jsonl"));
    for (const auto& l : out)
      for (std::size_t h = 0; h < l.hypotheses.size(); ++h) CHECK(l.hypotheses[h].asr_rank == static_cast<int>(h));
  }
}

TEST_CASE("ablation command writes one row per block plus the full model") {
  Pipeline p;
  cmd::AblateOptions a;
  a.train = p.dir.file("train.nbest.jsonl");
  a.train_features = p.dir.file("train.feats.jsonl");
  a.eval = p.dir.file("test.nbest.jsonl");
  a.eval_features = p.dir.file("test.feats.jsonl");
  a.out = p.dir.file("ablation.jsonl");
  cmd::ablate(a, p.log);
  const auto schema = read_schema(p.dir.file("schema.txt"));
  CHECK(read_lines(a.out).size() == schema.blocks().size() + 1);

  write_file_atomic(p.dir.file("subset.txt"), "am hypothesis-field 1 key=am_score\nrnnlm-ppl ext-scalar 1 transform=log\n");
  a.schema = p.dir.file("subset.txt");
  cmd::ablate(a, p.log);
  CHECK(read_lines(a.out).size() == 3);

  write_file_atomic(p.dir.file("bad.txt"), "nope ext-scalar 1\n");
  a.schema = p.dir.file("bad.txt");
  CHECK_THROWS_AS(cmd::ablate(a, p.log), Error);
}

TEST_CASE("command errors") {
  TempDir dir("l2rs_cmd_errors");
  std::ostringstream log;
  try {
    cmd::train_lm({dir.file("missing.txt"), 3, dir.file("lm.arpa")}, log);
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.kind() == "IoError");
  }
  CHECK_THROWS_AS(cmd::train_lm({dir.file("missing.txt"), 3, ""}, log), Error);
  write_file_atomic(dir.file("empty.txt"), "\n");
  CHECK_THROWS_AS(cmd::train_lm({dir.file("empty.txt"), 3, dir.file("lm.arpa")}, log), Error);

  NBestList l;
  l.utt_id = "u";
  Hypothesis h;
  h.tokens = {"a"};
  l.hypotheses.push_back(h);
  write_nbest({l}, dir.file("noref.jsonl"));
  cmd::EvaluateOptions e;
  e.data = dir.file("noref.jsonl");
  try {
    cmd::evaluate(e, log);
    FAIL("expected MissingReference");
  } catch (const Error& err) {
    CHECK(err.kind() == "MissingReference");
  }
  e.k = 0;
  CHECK_THROWS_AS(cmd::evaluate(e, log), Error);
}

TEST_CASE("features from another schema are refused") {
  Pipeline p;
  write_file_atomic(p.dir.file("s2.txt"), "am hypothesis-field 1 key=am_score\n");
  cmd::ExtractOptions e;
  e.data = p.dir.file("test.nbest.jsonl");
  e.schema = p.dir.file("s2.txt");
  e.out = p.dir.file("s2.feats.jsonl");
  cmd::extract_features(e, p.log);
  cmd::RescoreOptions r;
  r.model = p.dir.file("model.txt");
  r.data = p.dir.file("test.nbest.jsonl");
  r.features = p.dir.file("s2.feats.jsonl");
  r.out = p.dir.file("x.jsonl");
  try {
    cmd::rescore(r, p.log);
    FAIL("expected SchemaMismatch");
  } catch (const Error& err) {
    CHECK(err.kind() == "SchemaMismatch");
  }
}
