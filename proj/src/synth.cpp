#include "l2rs/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "l2rs/error.hpp"
#include "l2rs/io.hpp"
#include "l2rs/random.hpp"
#include "l2rs/wer.hpp"

namespace l2rs {

namespace {

struct Generator {
  const SynthConfig& config;
  const SynthCorpus& corpus;
  std::vector<std::string> all_words;

  Tokens sentence(Rng& rng) const {
    const auto theta = rng.dirichlet(config.num_topics, config.doc_topic_concentration);
    const auto span = config.max_length - config.min_length + 1;
    const auto length = config.min_length + static_cast<std::size_t>(rng.below(span));
    Tokens out;
    out.reserve(length);
    for (std::size_t i = 0; i < length; ++i) {
      if (!corpus.function_words.empty() && rng.uniform() < config.function_word_rate) {
        out.push_back(corpus.function_words[rng.below(corpus.function_words.size())]);
      } else {
        const auto k = rng.categorical(theta);
        out.push_back(corpus.topic_words[k][rng.categorical(corpus.topic_word_probs[k])]);
      }
    }
    return out;
  }

  const std::string& random_word(Rng& rng) const { return all_words[rng.below(all_words.size())]; }

  // Each reference token is corrupted with probability `rate`: substituted
  // (60%), deleted (20%) or followed by an inserted word (20%).
  Tokens corrupt(const Tokens& ref, double rate, Rng& rng) const {
    Tokens out;
    for (const auto& w : ref) {
      if (rng.uniform() >= rate) {
        out.push_back(w);
        continue;
      }
      const double op = rng.uniform();
      if (op < 0.6) {
        std::string sub = random_word(rng);
        while (sub == w && all_words.size() > 1) sub = random_word(rng);
        out.push_back(std::move(sub));
      } else if (op < 0.8) {
        // deletion
      } else {
        out.push_back(w);
        out.push_back(random_word(rng));
      }
    }
    return out;
  }
};

double mix(double info, double signal, Rng& rng) { return info * signal + (1.0 - info) * rng.normal(); }

SynthSplit make_split(const Generator& gen, const std::string& name, std::size_t count, const std::vector<double>& direction,
                      Rng& rng) {
  const auto& cfg = gen.config;
  SynthSplit split;
  split.embeddings.name = "bert-emb";
  split.embeddings.dim = cfg.embedding_dim;
  const double spread = std::max(cfg.noise_rate * 0.25, 1e-3);
  const std::string sidecar_file = name + ".bert-emb.vec";

  for (std::size_t u = 0; u < count; ++u) {
    NBestList list;
    list.utt_id = name + "-" + std::to_string(u);
    const Tokens ref = gen.sentence(rng);
    list.reference = ref;

    std::vector<Tokens> hyps;
    std::set<Tokens> seen;
    for (std::size_t j = 0; j < cfg.nbest; ++j) {
      Tokens hyp;
      for (int attempt = 0; attempt < 10; ++attempt) {
        hyp = gen.corrupt(ref, cfg.noise_rate * (0.2 + 0.8 * rng.uniform()), rng);
        if (cfg.noise_rate <= 0.0 || !seen.count(hyp)) break;
      }
      seen.insert(hyp);
      hyps.push_back(std::move(hyp));
    }

    const double am_offset = -60.0 * static_cast<double>(ref.size()) + 5.0 * rng.normal();
    const double lm_offset = -2.3 * static_cast<double>(ref.size()) + rng.normal();
    std::vector<double> utt_center(cfg.embedding_dim);
    for (auto& c : utt_center) c = rng.normal();

    std::vector<Hypothesis> out(hyps.size());
    std::vector<std::vector<float>> emb(hyps.size());
    for (std::size_t j = 0; j < hyps.size(); ++j) {
      auto& h = out[j];
      h.tokens = hyps[j];
      const double wer = align(ref, h.tokens).wer;
      const double signal = -wer / spread;
      h.am_score = am_offset + 4.0 * mix(cfg.am_info, signal, rng);
      h.lm_score = lm_offset + 4.0 * mix(cfg.lm_info, signal, rng);
      h.ext_scalars["rnnlm-ppl"] = std::exp(4.5 - 0.4 * mix(cfg.rnnlm_info, signal, rng));
      h.ext_scalars["bertlm-ppl"] = std::exp(3.0 - 0.4 * mix(cfg.bertlm_info, signal, rng));
      h.ext_scalars[std::string(kTruthScalar)] = -wer;
      const double along = mix(cfg.embedding_info, signal, rng);
      emb[j].resize(cfg.embedding_dim);
      for (std::size_t d = 0; d < cfg.embedding_dim; ++d) {
        emb[j][d] = static_cast<float>(along * direction[d] + 0.3 * rng.normal() + utt_center[d]);
      }
    }

    // Decoder order: AM + LM, generation order on ties.
    std::vector<std::size_t> order(out.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return out[a].am_score + out[a].lm_score > out[b].am_score + out[b].lm_score;
    });
    for (std::size_t r = 0; r < order.size(); ++r) {
      Hypothesis h = std::move(out[order[r]]);
      h.asr_rank = static_cast<int>(r);
      const auto row = split.embeddings.rows.size();
      h.ext_vec_refs.push_back({sidecar_file, static_cast<long long>(row)});
      h.ext_vectors["bert-emb"].assign(emb[order[r]].begin(), emb[order[r]].end());
      split.embeddings.rows.push_back({list.utt_id, r, emb[order[r]]});
      list.hypotheses.push_back(std::move(h));
    }
    split.data.push_back(std::move(list));
  }
  return split;
}

}  // namespace

SynthCorpus generate_synthetic(const SynthConfig& config) {
  if (config.num_topics < 1 || config.words_per_topic < 1) throw InvalidArgument("synthetic corpus needs topics and words");
  if (config.min_length > config.max_length) throw InvalidArgument("min_length exceeds max_length");
  if (config.nbest < 1) throw InvalidArgument("nbest must be >= 1");
  SynthCorpus corpus;
  corpus.config = config;

  Rng rng(config.seed);
  for (std::size_t k = 0; k < config.num_topics; ++k) {
    std::vector<std::string> words;
    std::vector<double> probs;
    double total = 0.0;
    for (std::size_t i = 0; i < config.words_per_topic; ++i) {
      words.push_back("t" + std::to_string(k) + "w" + std::to_string(i));
      probs.push_back(1.0 / std::pow(static_cast<double>(i) + 1.0, 0.8));
      total += probs.back();
    }
    for (auto& p : probs) p /= total;
    corpus.topic_words.push_back(std::move(words));
    corpus.topic_word_probs.push_back(std::move(probs));
  }
  for (std::size_t i = 0; i < config.function_words; ++i) corpus.function_words.push_back("f" + std::to_string(i));

  Generator gen{config, corpus, {}};
  for (const auto& ws : corpus.topic_words) gen.all_words.insert(gen.all_words.end(), ws.begin(), ws.end());
  gen.all_words.insert(gen.all_words.end(), corpus.function_words.begin(), corpus.function_words.end());

  std::vector<double> direction(config.embedding_dim);
  double norm = 0.0;
  for (auto& d : direction) {
    d = rng.normal();
    norm += d * d;
  }
  norm = std::sqrt(norm);
  for (auto& d : direction) d = norm > 0 ? d / norm : 0.0;

  Rng train_rng(fnv1a("train", config.seed));
  Rng dev_rng(fnv1a("dev", config.seed));
  Rng test_rng(fnv1a("test", config.seed));
  Rng text_rng(fnv1a("transcripts", config.seed));
  corpus.train = make_split(gen, "train", config.train_lists, direction, train_rng);
  corpus.dev = make_split(gen, "dev", config.dev_lists, direction, dev_rng);
  corpus.test = make_split(gen, "test", config.test_lists, direction, test_rng);

  for (const auto& list : corpus.train.data) corpus.transcripts.push_back(*list.reference);
  for (std::size_t i = 0; i < config.corpus_sentences; ++i) corpus.transcripts.push_back(gen.sentence(text_rng));
  return corpus;
}

FeatureSchema default_synth_schema(const SynthConfig& config) {
  std::vector<FeatureBlock> blocks;
  blocks.push_back({"am", 1, BlockSource::kHypothesisField, "am_score", false});
  blocks.push_back({"lm", 1, BlockSource::kHypothesisField, "lm_score", false});
  blocks.push_back({"ngram", 2, BlockSource::kNgram, "ngram", false});
  blocks.push_back({"tmlm", 2, BlockSource::kTopicLm, "tmlm", false});
  blocks.push_back({"topicvec", static_cast<std::size_t>(config.schema_topics), BlockSource::kTopicVector, "topicvec", false});
  blocks.push_back({"rnnlm-ppl", 1, BlockSource::kExtScalar, "rnnlm-ppl", true});
  blocks.push_back({"bertlm-ppl", 1, BlockSource::kExtScalar, "bertlm-ppl", true});
  blocks.push_back({"bert-emb", config.embedding_dim, BlockSource::kExtVector, "bert-emb", false});
  return FeatureSchema(std::move(blocks));
}

void write_synthetic(const SynthCorpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base(dir);

  std::string text;
  for (const auto& s : corpus.transcripts) {
    for (std::size_t i = 0; i < s.size(); ++i) text += (i ? " " : "") + s[i];
    text += "\n";
  }
  write_file_atomic((base / "corpus.txt").string(), text);

  const std::pair<const char*, const SynthSplit*> splits[] = {
      {"train", &corpus.train}, {"dev", &corpus.dev}, {"test", &corpus.test}};
  for (const auto& [name, split] : splits) {
    write_nbest(split->data, (base / (std::string(name) + ".nbest.jsonl")).string());
    write_sidecar(split->embeddings, (base / (std::string(name) + ".bert-emb.vec")).string());
  }
  write_schema(default_synth_schema(corpus.config), (base / "schema.txt").string());

  const auto& c = corpus.config;
  nlohmann::ordered_json m;
  m["format"] = "l2rs-synth-v1";
  m["seed"] = c.seed;
  m["config"] = {{"num_topics", c.num_topics},
                 {"words_per_topic", c.words_per_topic},
                 {"function_words", c.function_words},
                 {"function_word_rate", c.function_word_rate},
                 {"doc_topic_concentration", c.doc_topic_concentration},
                 {"min_length", c.min_length},
                 {"max_length", c.max_length},
                 {"train_lists", c.train_lists},
                 {"dev_lists", c.dev_lists},
                 {"test_lists", c.test_lists},
                 {"corpus_sentences", c.corpus_sentences},
                 {"nbest", c.nbest},
                 {"noise_rate", c.noise_rate},
                 {"am_info", c.am_info},
                 {"lm_info", c.lm_info},
                 {"rnnlm_info", c.rnnlm_info},
                 {"bertlm_info", c.bertlm_info},
                 {"embedding_info", c.embedding_info},
                 {"embedding_dim", c.embedding_dim},
                 {"schema_topics", c.schema_topics}};
  m["truth_scalar"] = std::string(kTruthScalar);
  m["topics"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < corpus.topic_words.size(); ++k) {
    m["topics"].push_back({{"words", corpus.topic_words[k]}, {"probs", corpus.topic_word_probs[k]}});
  }
  m["function_words"] = corpus.function_words;
  write_file_atomic((base / "manifest.json").string(), m.dump(1) + "\n");
}

}  // namespace l2rs
