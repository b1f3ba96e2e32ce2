#include <doctest.h>

#include <set>

#include "l2rs/eval.hpp"
#include "l2rs/features.hpp"
#include "l2rs/io.hpp"
#include "l2rs/ranker.hpp"
#include "l2rs/synth.hpp"
#include "l2rs/wer.hpp"
#include "support.hpp"

using namespace l2rs;
using l2rs::testing::TempDir;

namespace {

SynthConfig small_config() {
  SynthConfig c;
  c.train_lists = 40;
  c.dev_lists = 10;
  c.test_lists = 20;
  c.corpus_sentences = 100;
  c.nbest = 8;
  return c;
}

}  // namespace

TEST_CASE("generated lists satisfy the data model") {
  const auto cfg = small_config();
  const auto c = generate_synthetic(cfg);
  CHECK(c.train.data.size() == 40);
  CHECK(c.dev.data.size() == 10);
  CHECK(c.test.data.size() == 20);
  CHECK(c.transcripts.size() == 40 + 100);
  CHECK(c.topic_words.size() == cfg.num_topics);
  std::set<std::string> ids;
  for (const auto* split : {&c.train, &c.dev, &c.test}) {
    CHECK(split->embeddings.dim == cfg.embedding_dim);
    for (const auto& l : split->data) {
      CHECK(ids.insert(l.utt_id).second);
      REQUIRE(l.reference.has_value());
      CHECK(l.reference->size() >= cfg.min_length);
      CHECK(l.reference->size() <= cfg.max_length);
      CHECK(l.hypotheses.size() == cfg.nbest);
      for (std::size_t h = 0; h < l.hypotheses.size(); ++h) {
        const auto& hyp = l.hypotheses[h];
        CHECK(hyp.asr_rank == static_cast<int>(h));
        CHECK(hyp.ext_scalars.at(std::string(kTruthScalar)) == doctest::Approx(-align(*l.reference, hyp.tokens).wer));
        CHECK(hyp.ext_scalars.at("rnnlm-ppl") > 0);
        CHECK(hyp.ext_scalars.at("bertlm-ppl") > 0);
        if (h > 0) {
          const auto& prev = l.hypotheses[h - 1];
          CHECK(prev.am_score + prev.lm_score >= hyp.am_score + hyp.lm_score);
        }
      }
    }
  }
}

TEST_CASE("zero noise puts the reference on top") {
  auto cfg = small_config();
  cfg.noise_rate = 0.0;
  cfg.nbest = 3;
  const auto c = generate_synthetic(cfg);
  CHECK(oracle_wer(c.test.data) == 0.0);
  for (const auto& l : c.test.data) CHECK(l.hypotheses[0].tokens == *l.reference);
}

TEST_CASE("same seed gives byte-identical files") {
  TempDir a("l2rs_synth_a"), b("l2rs_synth_b"), d("l2rs_synth_d");
  auto cfg = small_config();
  write_synthetic(generate_synthetic(cfg), a.path.string());
  write_synthetic(generate_synthetic(cfg), b.path.string());
  cfg.seed = 2;
  write_synthetic(generate_synthetic(cfg), d.path.string());
  for (const char* f : {"corpus.txt", "train.nbest.jsonl", "dev.nbest.jsonl", "test.nbest.jsonl", "train.bert-emb.vec",
                        "test.bert-emb.vec", "schema.txt", "manifest.json"}) {
    CAPTURE(f);
    CHECK(read_file(a.file(f)) == read_file(b.file(f)));
  }
  CHECK(read_file(a.file("test.nbest.jsonl")) != read_file(d.file("test.nbest.jsonl")));

  // Written files load back with their embeddings.
  auto ds = read_nbest(a.file("train.nbest.jsonl"));
  resolve_ext_vectors(ds, a.path.string());
  CHECK(ds[0].hypotheses[0].ext_vectors.at("bert-emb").size() == cfg.embedding_dim);
  const auto schema = read_schema(a.file("schema.txt"));
  CHECK(schema == default_synth_schema(cfg));
}

namespace {

// Pooled WER of a ranker trained on the rnnlm-ppl scalar alone.
double rnnlm_only_wer(const SynthConfig& cfg) {
  const auto c = generate_synthetic(cfg);
  FeatureBlock b;
  b.name = b.key = "rnnlm-ppl";
  b.log_transform = true;
  const FeatureSchema schema({b});
  std::vector<LabeledList> tr;
  std::vector<std::vector<FeatureVector>> trv;
  for (const auto& l : c.train.data) {
    tr.push_back(label_list(l));
    trv.push_back(assemble(l, schema, {}));
  }
  const auto model = train_rank_model(tr, trv, schema);
  std::vector<std::size_t> picked;
  for (const auto& l : c.test.data) picked.push_back(decode(model, l, assemble(l, schema, {})));
  return wer_report(c.test.data, picked).selected.wer;
}

// Expected pooled WER of picking a hypothesis uniformly at random.
double random_pick_wer(const SynthConfig& cfg) {
  const auto c = generate_synthetic(cfg);
  double errors = 0, words = 0;
  for (const auto& l : c.test.data) {
    double e = 0;
    for (const auto& h : l.hypotheses) e += static_cast<double>(align(*l.reference, h.tokens).errors());
    errors += e / static_cast<double>(l.hypotheses.size());
    words += static_cast<double>(l.reference->size());
  }
  return errors / words;
}

}  // namespace

TEST_CASE("a feature with no information does no better than chance") {
  auto cfg = small_config();
  cfg.train_lists = 150;
  cfg.test_lists = 300;
  cfg.rnnlm_info = 0.0;
  const double chance = random_pick_wer(cfg);
  const double null_wer = rnnlm_only_wer(cfg);
  CHECK(std::abs(null_wer - chance) < 0.02);
  cfg.rnnlm_info = 1.0;
  CHECK(rnnlm_only_wer(cfg) < chance - 0.05);
}
