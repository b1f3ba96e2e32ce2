#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "l2rs/random.hpp"
#include "l2rs/topic_model.hpp"

namespace l2rs::testing {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

// Three topics over disjoint vocabularies with known word distributions.
struct TopicCorpus {
  std::vector<std::vector<std::string>> words;  // words[k]
  std::vector<std::vector<double>> phi;         // phi[k][i] for words[k][i]
  std::vector<Tokens> docs;
};

inline TopicCorpus make_topic_corpus(std::uint64_t seed, std::size_t docs = 300, std::size_t words_per_topic = 20,
                                     std::size_t doc_len = 50) {
  Rng rng(seed);
  TopicCorpus c;
  for (int k = 0; k < 3; ++k) {
    std::vector<std::string> w;
    std::vector<double> p;
    double z = 0;
    for (std::size_t i = 0; i < words_per_topic; ++i) {
      w.push_back("k" + std::to_string(k) + "w" + std::to_string(i));
      p.push_back(1.0 / std::pow(static_cast<double>(i + 1), 0.7));
      z += p.back();
    }
    for (auto& x : p) x /= z;
    c.words.push_back(w);
    c.phi.push_back(p);
  }
  for (std::size_t d = 0; d < docs; ++d) {
    const auto theta = rng.dirichlet(3, 0.3);
    Tokens doc;
    for (std::size_t i = 0; i < doc_len; ++i) {
      const auto k = rng.categorical(theta);
      doc.push_back(c.words[k][rng.categorical(c.phi[k])]);
    }
    c.docs.push_back(doc);
  }
  return c;
}

// Total-variation distance from each true topic to its greedily matched
// learned topic; match[k] is the learned index for true topic k.
struct TopicMatch {
  std::vector<int> match;
  std::vector<double> tv;
};

inline TopicMatch match_topics(const TopicModel& model, const TopicCorpus& truth) {
  const int K = model.num_topics();
  const int T = static_cast<int>(truth.phi.size());
  std::vector<std::vector<double>> tv(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(K)));
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < K; ++k) {
      // True phi is zero outside its own words.
      std::vector<double> truth_row(model.vocab_size(), 0.0);
      for (std::size_t i = 0; i < truth.words[static_cast<std::size_t>(t)].size(); ++i) {
        const int id = model.id(truth.words[static_cast<std::size_t>(t)][i]);
        if (id >= 0) truth_row[static_cast<std::size_t>(id)] = truth.phi[static_cast<std::size_t>(t)][i];
      }
      double d = 0;
      for (std::size_t w = 0; w < model.vocab_size(); ++w) d += std::abs(model.phi(k, static_cast<int>(w)) - truth_row[w]);
      tv[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] = 0.5 * d;
    }
  }
  TopicMatch m{std::vector<int>(static_cast<std::size_t>(T), -1), std::vector<double>(static_cast<std::size_t>(T), 1.0)};
  std::vector<bool> used(static_cast<std::size_t>(K), false);
  for (int round = 0; round < std::min(T, K); ++round) {
    double best = std::numeric_limits<double>::infinity();
    int bt = -1, bk = -1;
    for (int t = 0; t < T; ++t) {
      if (m.match[static_cast<std::size_t>(t)] >= 0) continue;
      for (int k = 0; k < K; ++k) {
        if (!used[static_cast<std::size_t>(k)] && tv[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] < best) {
          best = tv[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
          bt = t;
          bk = k;
        }
      }
    }
    m.match[static_cast<std::size_t>(bt)] = bk;
    m.tv[static_cast<std::size_t>(bt)] = best;
    used[static_cast<std::size_t>(bk)] = true;
  }
  return m;
}

}  // namespace l2rs::testing

#include "l2rs/ranker.hpp"

namespace l2rs::testing {

// Six hand-picked, non-separable 2-d difference vectors.
inline PairSet toy_pairs() {
  const double d[6][2] = {{1.0, 0.5}, {0.3, 1.0}, {-0.2, 0.4}, {0.8, -0.6}, {0.1, 0.1}, {-0.5, -0.3}};
  PairSet pairs(2, 0);
  const std::vector<double> zero = {0.0, 0.0};
  for (std::size_t i = 0; i < 6; ++i) pairs.add({0, i, i + 1}, std::vector<double>{d[i][0], d[i][1]}, zero);
  return pairs;
}

// Brute-force minimum of the primal over a grid on [-5, 5]^2.
inline double grid_search_objective(const PairSet& pairs, double C, double step = 0.01) {
  const int n = static_cast<int>(std::lround(10.0 / step));
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double w[2] = {-5.0 + i * step, -5.0 + j * step};
      double obj = 0.5 * (w[0] * w[0] + w[1] * w[1]);
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto x = pairs.diff(p);
        obj += C * std::max(0.0, 1.0 - (w[0] * x[0] + w[1] * x[1]));
      }
      best = std::min(best, obj);
    }
  }
  return best;
}

}  // namespace l2rs::testing
