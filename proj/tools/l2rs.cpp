// Command-line driver for the learning-to-rescore pipeline.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "l2rs/commands.hpp"
#include "l2rs/error.hpp"

namespace {

void add_solver_flags(CLI::App* app, l2rs::RankerConfig& cfg) {
  app->add_option("--C", cfg.C, "RankSVM slack penalty")->capture_default_str();
  app->add_option("--tolerance", cfg.solver.tolerance, "projected-gradient stopping threshold")->capture_default_str();
  app->add_option("--max-epochs", cfg.solver.max_epochs, "dual coordinate descent epoch limit")->capture_default_str();
  app->add_option("--seed", cfg.solver.seed, "coordinate shuffling seed")->capture_default_str();
  app->add_option("--max-pairs", cfg.pairs.max_pairs_per_list, "per-list pair cap (0 = unlimited)")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"l2rs: learning-to-rescore for ASR N-best lists"};
  app.set_config("--config", "", "TOML/INI configuration file; command-line flags take precedence");
  app.require_subcommand(1);

  l2rs::cmd::TrainLmOptions lm;
  auto* train_lm = app.add_subcommand("train-lm", "train a Witten-Bell backoff n-gram LM, written as ARPA");
  train_lm->add_option("--corpus", lm.corpus, "training text, one sentence per line")->required();
  train_lm->add_option("--order", lm.order, "n-gram order")->capture_default_str();
  train_lm->add_option("--out", lm.out, "output ARPA file")->required();

  l2rs::cmd::TrainLdaOptions lda;
  auto* train_lda = app.add_subcommand("train-lda", "train an LDA topic model by collapsed Gibbs sampling");
  train_lda->add_option("--corpus", lda.corpus, "training text, one document per line")->required();
  train_lda->add_option("--topics,-K", lda.lda.num_topics, "number of topics")->capture_default_str();
  train_lda->add_option("--iters", lda.lda.iterations, "Gibbs sweeps")->capture_default_str();
  train_lda->add_option("--alpha", lda.lda.alpha, "document prior (default 50/K)");
  train_lda->add_option("--beta", lda.lda.beta, "word prior")->capture_default_str();
  train_lda->add_option("--seed", lda.lda.seed, "sampler seed")->capture_default_str();
  train_lda->add_option("--out", lda.out, "output model file")->required();

  l2rs::cmd::ExtractOptions ex;
  auto* extract = app.add_subcommand("extract-features", "assemble feature vectors for every hypothesis");
  extract->add_option("--data", ex.data, "N-best dataset")->required();
  extract->add_option("--schema", ex.schema, "feature schema")->required();
  extract->add_option("--lm", ex.lm, "ARPA n-gram model for builtin-ngram blocks");
  extract->add_option("--lda", ex.lda, "topic model for builtin-tmlm / builtin-topicvec blocks");
  extract->add_option("--infer-iters", ex.infer_iterations, "topic inference sweeps")->capture_default_str();
  extract->add_option("--seed", ex.seed, "topic inference seed")->capture_default_str();
  extract->add_option("--nbest", ex.nbest, "hypotheses kept per list")->capture_default_str();
  extract->add_option("--out", ex.out, "output feature file")->required();

  l2rs::cmd::TrainRankerOptions tr;
  auto* train_ranker = app.add_subcommand("train-ranker", "train a linear RankSVM rescoring model");
  train_ranker->add_option("--data", tr.data, "labeled N-best dataset")->required();
  train_ranker->add_option("--features", tr.features, "features extracted for the dataset")->required();
  add_solver_flags(train_ranker, tr.ranker);
  train_ranker->add_option("--nbest", tr.nbest, "hypotheses kept per list")->capture_default_str();
  train_ranker->add_option("--out", tr.out, "output model file")->required();

  l2rs::cmd::RescoreOptions rs;
  std::string rescore_mode = "f-only";
  auto* rescore = app.add_subcommand("rescore", "reorder N-best lists with a trained model");
  rescore->add_option("--model", rs.model, "trained rank model")->required();
  rescore->add_option("--data", rs.data, "N-best dataset")->required();
  rescore->add_option("--features", rs.features, "features extracted for the dataset")->required();
  rescore->add_option("--mode", rescore_mode, "f-only or additive")
      ->check(CLI::IsMember({"f-only", "additive"}))
      ->capture_default_str();
  rescore->add_option("--nbest", rs.nbest, "hypotheses kept per list")->capture_default_str();
  rescore->add_option("--out", rs.out, "output dataset, best hypothesis first")->required();

  l2rs::cmd::EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "NDCG@k of the file order plus selected/baseline/oracle WER");
  evaluate->add_option("--data", ev.data, "N-best dataset with references")->required();
  evaluate->add_option("--k", ev.k, "NDCG cutoff")->capture_default_str();
  evaluate->add_option("--nbest", ev.nbest, "hypotheses kept per list")->capture_default_str();
  evaluate->add_option("--out", ev.out, "line-delimited report records");

  l2rs::cmd::AblateOptions ab;
  auto* ablate = app.add_subcommand("ablate", "per-block feature quality by NDCG@k");
  ablate->add_option("--train", ab.train, "training dataset")->required();
  ablate->add_option("--train-features", ab.train_features, "training features")->required();
  ablate->add_option("--eval", ab.eval, "evaluation dataset")->required();
  ablate->add_option("--eval-features", ab.eval_features, "evaluation features")->required();
  ablate->add_option("--schema", ab.schema, "subset of blocks to ablate");
  add_solver_flags(ablate, ab.ablation.ranker);
  ablate->add_option("--k", ab.ablation.k, "NDCG cutoff")->capture_default_str();
  ablate->add_flag("--per-dimension", ab.ablation.per_dimension, "also train on every single dimension");
  ablate->add_option("--nbest", ab.nbest, "hypotheses kept per list")->capture_default_str();
  ablate->add_option("--out", ab.out, "line-delimited ablation records");

  l2rs::cmd::SynthOptions sy;
  auto& sc = sy.synth;
  auto* synth = app.add_subcommand("synth", "generate a seeded synthetic N-best benchmark");
  synth->add_option("--seed", sc.seed, "generator seed")->capture_default_str();
  synth->add_option("--topics", sc.num_topics, "generating topics")->capture_default_str();
  synth->add_option("--words-per-topic", sc.words_per_topic)->capture_default_str();
  synth->add_option("--function-words", sc.function_words)->capture_default_str();
  synth->add_option("--train-lists", sc.train_lists)->capture_default_str();
  synth->add_option("--dev-lists", sc.dev_lists)->capture_default_str();
  synth->add_option("--test-lists", sc.test_lists)->capture_default_str();
  synth->add_option("--corpus-sentences", sc.corpus_sentences)->capture_default_str();
  synth->add_option("--nbest", sc.nbest, "hypotheses per list")->capture_default_str();
  synth->add_option("--noise", sc.noise_rate, "maximum per-token corruption rate")->capture_default_str();
  synth->add_option("--am-info", sc.am_info)->capture_default_str();
  synth->add_option("--lm-info", sc.lm_info)->capture_default_str();
  synth->add_option("--rnnlm-info", sc.rnnlm_info)->capture_default_str();
  synth->add_option("--bertlm-info", sc.bertlm_info)->capture_default_str();
  synth->add_option("--embedding-info", sc.embedding_info)->capture_default_str();
  synth->add_option("--embedding-dim", sc.embedding_dim)->capture_default_str();
  synth->add_option("--schema-topics", sc.schema_topics, "topic-vector dim in the emitted schema")->capture_default_str();
  synth->add_option("--out", sy.out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_lm) l2rs::cmd::train_lm(lm, std::cout);
    if (*train_lda) l2rs::cmd::train_lda(lda, std::cout);
    if (*extract) l2rs::cmd::extract_features(ex, std::cout);
    if (*train_ranker) l2rs::cmd::train_ranker(tr, std::cout);
    if (*rescore) {
      rs.mode = l2rs::parse_decode_mode(rescore_mode);
      l2rs::cmd::rescore(rs, std::cout);
    }
    if (*evaluate) l2rs::cmd::evaluate(ev, std::cout);
    if (*ablate) l2rs::cmd::ablate(ab, std::cout);
    if (*synth) l2rs::cmd::synth(sy, std::cout);
  } catch (const l2rs::Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
