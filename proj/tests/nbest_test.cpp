#include <doctest.h>

#include <filesystem>

#include "l2rs/error.hpp"
#include "l2rs/io.hpp"
#include "l2rs/nbest.hpp"
#include "l2rs/random.hpp"
#include "l2rs/sidecar.hpp"

using namespace l2rs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

Dataset random_dataset(Rng& rng, std::size_t lists) {
  Dataset ds;
  for (std::size_t u = 0; u < lists; ++u) {
    NBestList list;
    list.utt_id = "utt \"" + std::to_string(u) + "\"";
    if (rng.uniform() < 0.8) {
      list.reference = Tokens{};
      for (std::size_t i = rng.below(6); i > 0; --i) list.reference->push_back("w" + std::to_string(rng.below(9)));
    }
    const auto n = rng.below(5);
    for (std::size_t h = 0; h < n; ++h) {
      Hypothesis hyp;
      for (std::size_t i = rng.below(6); i > 0; --i) hyp.tokens.push_back("w\\" + std::to_string(rng.below(9)));
      hyp.am_score = -rng.uniform() * 1e4 + rng.normal() * 1e-9;
      hyp.lm_score = rng.normal() * 1e-300;
      hyp.asr_rank = static_cast<int>(n - 1 - h);
      if (rng.uniform() < 0.5) hyp.ext_scalars["rnnlm-ppl"] = std::exp(rng.normal() * 5);
      if (rng.uniform() < 0.3) hyp.ext_vec_refs.push_back({"emb.vec", static_cast<long long>(h)});
      if (rng.uniform() < 0.1) hyp.ext_vec_refs.push_back({"other.vec", 3});
      list.hypotheses.push_back(hyp);
    }
    ds.push_back(list);
  }
  return ds;
}

}  // namespace

TEST_CASE("empty file reads as an empty dataset") {
  TempDir dir("l2rs_nbest_empty");
  write_file_atomic(dir.file("e.jsonl"), "");
  CHECK(read_nbest(dir.file("e.jsonl")).empty());
  write_file_atomic(dir.file("blank.jsonl"), "\n  \n");
  CHECK(read_nbest(dir.file("blank.jsonl")).empty());
}

TEST_CASE("one list with two hypotheses round-trips") {
  TempDir dir("l2rs_nbest_one");
  NBestList list;
  list.utt_id = "talk1-0001";
  list.reference = Tokens{"hello", "world"};
  Hypothesis a;
  a.tokens = {"hello", "world"};
  a.am_score = -1234.5678901234567;
  a.lm_score = -12.1;
  a.asr_rank = 1;
  a.ext_scalars["bertlm-ppl"] = 31.25;
  Hypothesis b;
  b.tokens = {"hello", "word"};
  b.am_score = -1200.0;
  b.lm_score = -15.0 / 7.0;
  b.asr_rank = 0;
  b.ext_vec_refs.push_back({"emb.vec", 7});
  list.hypotheses = {a, b};
  write_nbest({list}, dir.file("d.jsonl"));
  const auto back = read_nbest(dir.file("d.jsonl"));
  REQUIRE(back.size() == 1);
  CHECK(back[0] == list);
}

TEST_CASE("serialization round-trip is the identity on random datasets") {
  TempDir dir("l2rs_nbest_prop");
  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    const auto ds = random_dataset(rng, rng.below(6));
    write_nbest(ds, dir.file("r.jsonl"));
    CHECK(read_nbest(dir.file("r.jsonl")) == ds);
  }
}

TEST_CASE("malformed records report the line") {
  TempDir dir("l2rs_nbest_bad");
  const std::string good = R"({"utt_id":"a","hyps":[{"tokens":["x"],"am_score":-1,"lm_score":-2,"asr_rank":0,"ext_scalars":{}}]})";
  const std::string missing_am = R"({"utt_id":"b","hyps":[{"tokens":["x"],"lm_score":-2,"asr_rank":0,"ext_scalars":{}}]})";
  write_file_atomic(dir.file("m.jsonl"), good + "\n" + missing_am + "\n");
  try {
    read_nbest(dir.file("m.jsonl"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.kind() == "ParseError");
  }

  write_file_atomic(dir.file("j.jsonl"), "{not json\n");
  CHECK_THROWS_AS(read_nbest(dir.file("j.jsonl")), ParseError);

  const std::string string_score =
      R"({"utt_id":"c","hyps":[{"tokens":["x"],"am_score":"-1","lm_score":-2,"asr_rank":0}]})";
  write_file_atomic(dir.file("s.jsonl"), string_score + "\n");
  CHECK_THROWS_AS(read_nbest(dir.file("s.jsonl")), ParseError);

  const std::string bad_ranks =
      R"({"utt_id":"d","hyps":[{"tokens":[],"am_score":-1,"lm_score":-2,"asr_rank":0},{"tokens":[],"am_score":-1,"lm_score":-2,"asr_rank":0}]})";
  write_file_atomic(dir.file("r.jsonl"), bad_ranks + "\n");
  CHECK_THROWS_AS(read_nbest(dir.file("r.jsonl")), ParseError);
}

TEST_CASE("duplicate utterance ids are rejected") {
  TempDir dir("l2rs_nbest_dup");
  const std::string rec = R"({"utt_id":"same","hyps":[]})";
  write_file_atomic(dir.file("d.jsonl"), rec + "\n" + rec + "\n");
  try {
    read_nbest(dir.file("d.jsonl"));
    FAIL("expected DuplicateUtterance");
  } catch (const Error& e) {
    CHECK(e.kind() == "DuplicateUtterance");
  }
  NBestList l;
  l.utt_id = "x";
  CHECK_THROWS_AS(write_nbest({l, l}, dir.file("w.jsonl")), Error);
}

TEST_CASE("non-finite scores are not serialized") {
  NBestList l;
  l.utt_id = "x";
  Hypothesis h;
  h.am_score = std::numeric_limits<double>::infinity();
  l.hypotheses.push_back(h);
  CHECK_THROWS_AS(format_nbest_record(l), Error);
}

TEST_CASE("sidecar round-trip in both encodings") {
  TempDir dir("l2rs_sidecar");
  Rng rng(4);
  Sidecar sc;
  sc.name = "bert-emb";
  sc.dim = 5;
  for (std::size_t r = 0; r < 7; ++r) {
    SidecarRow row{"u" + std::to_string(r / 3), r % 3, {}};
    for (std::size_t d = 0; d < sc.dim; ++d) row.values.push_back(static_cast<float>(rng.normal() * 100));
    sc.rows.push_back(row);
  }
  write_sidecar(sc, dir.file("t.vec"), SidecarEncoding::kText);
  CHECK(read_sidecar(dir.file("t.vec")) == sc);
  write_sidecar(sc, dir.file("b.vec"), SidecarEncoding::kF32LE);
  CHECK(read_sidecar(dir.file("b.vec")) == sc);

  sc.rows[0].values.pop_back();
  CHECK_THROWS_AS(write_sidecar(sc, dir.file("x.vec")), Error);

  write_file_atomic(dir.file("c.vec"), "l2rs-sidecar v1 name=e dim=2 count=3 encoding=text\nu 0 1 2\n");
  CHECK_THROWS_AS(read_sidecar(dir.file("c.vec")), ParseError);
  write_file_atomic(dir.file("w.vec"), "l2rs-sidecar v1 name=e dim=2 count=1 encoding=text\nu 0 1\n");
  CHECK_THROWS_AS(read_sidecar(dir.file("w.vec")), ParseError);
}

TEST_CASE("ext_vec_ref rows are resolved from sidecars") {
  TempDir dir("l2rs_resolve");
  Sidecar sc{"emb", 2, {{"u", 0, {1.5f, -2.0f}}, {"u", 1, {0.25f, 4.0f}}}};
  write_sidecar(sc, dir.file("emb.vec"));
  NBestList list;
  list.utt_id = "u";
  for (int h = 0; h < 2; ++h) {
    Hypothesis hyp;
    hyp.asr_rank = h;
    hyp.ext_vec_refs.push_back({"emb.vec", 1 - h});
    list.hypotheses.push_back(hyp);
  }
  Dataset ds{list};
  resolve_ext_vectors(ds, dir.path.string());
  CHECK(ds[0].hypotheses[0].ext_vectors.at("emb") == std::vector<double>{0.25, 4.0});
  CHECK(ds[0].hypotheses[1].ext_vectors.at("emb") == std::vector<double>{1.5, -2.0});

  Dataset wrong{list};
  wrong[0].utt_id = "v";
  CHECK_THROWS_AS(resolve_ext_vectors(wrong, dir.path.string()), Error);
  Dataset out_of_range{list};
  out_of_range[0].hypotheses[0].ext_vec_refs[0].row = 5;
  CHECK_THROWS_AS(resolve_ext_vectors(out_of_range, dir.path.string()), Error);
}

TEST_CASE("truncate_nbest keeps the best ASR ranks") {
  NBestList list;
  list.utt_id = "u";
  for (int r : {3, 0, 2, 1}) {
    Hypothesis h;
    h.asr_rank = r;
    list.hypotheses.push_back(h);
  }
  Dataset ds{list};
  truncate_nbest(ds, 2);
  REQUIRE(ds[0].hypotheses.size() == 2);
  CHECK(ds[0].hypotheses[0].asr_rank == 0);
  CHECK(ds[0].hypotheses[1].asr_rank == 1);
}
