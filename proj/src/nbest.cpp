#include "l2rs/nbest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "l2rs/error.hpp"
#include "l2rs/io.hpp"
#include "l2rs/sidecar.hpp"

namespace l2rs {
namespace {

using nlohmann::json;

std::string quote(const std::string& s) { return json(s).dump(); }

std::string number(double v, const std::string& what) {
  if (!std::isfinite(v)) throw InvalidArgument("non-finite " + what + " cannot be serialized");
  return format_double(v, 17);
}

void append_tokens(std::string& out, const Tokens& tokens) {
  out.push_back('[');
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(',');
    out += quote(tokens[i]);
  }
  out.push_back(']');
}

std::string append_ref(const ExtVecRef& ref) {
  return "{\"file\":" + quote(ref.file) + ",\"row\":" + std::to_string(ref.row) + "}";
}

ExtVecRef parse_ref(const json& j) {
  ExtVecRef ref;
  ref.file = j.at("file").get<std::string>();
  ref.row = j.at("row").get<long long>();
  return ref;
}

Tokens parse_tokens(const json& j) {
  Tokens out;
  for (const auto& t : j) out.push_back(t.get<std::string>());
  return out;
}

double parse_number(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw json::type_error::create(302, std::string(key) + " must be a number", &v);
  return v.get<double>();
}

}  // namespace

void check_asr_ranks(const NBestList& list, const std::string& source, std::size_t line) {
  std::vector<char> seen(list.hypotheses.size(), 0);
  for (const auto& h : list.hypotheses) {
    if (h.asr_rank < 0 || static_cast<std::size_t>(h.asr_rank) >= seen.size() || seen[h.asr_rank]) {
      throw ParseError(source, line, "asr_rank values of '" + list.utt_id + "' are not a permutation of 0..n-1");
    }
    seen[h.asr_rank] = 1;
  }
}

std::string format_nbest_record(const NBestList& list) {
  std::string out = "{\"utt_id\":" + quote(list.utt_id);
  if (list.reference) {
    out += ",\"reference\":";
    append_tokens(out, *list.reference);
  }
  out += ",\"hyps\":[";
  for (std::size_t h = 0; h < list.hypotheses.size(); ++h) {
    const auto& hyp = list.hypotheses[h];
    if (h) out.push_back(',');
    out += "{\"tokens\":";
    append_tokens(out, hyp.tokens);
    out += ",\"am_score\":" + number(hyp.am_score, "am_score");
    out += ",\"lm_score\":" + number(hyp.lm_score, "lm_score");
    out += ",\"asr_rank\":" + std::to_string(hyp.asr_rank);
    out += ",\"ext_scalars\":{";
    bool first = true;
    for (const auto& [name, value] : hyp.ext_scalars) {
      if (!first) out.push_back(',');
      first = false;
      out += quote(name) + ":" + number(value, name);
    }
    out += "}";
    if (hyp.ext_vec_refs.size() == 1) {
      out += ",\"ext_vec_ref\":" + append_ref(hyp.ext_vec_refs.front());
    } else if (hyp.ext_vec_refs.size() > 1) {
      out += ",\"ext_vec_ref\":[";
      for (std::size_t r = 0; r < hyp.ext_vec_refs.size(); ++r) {
        if (r) out.push_back(',');
        out += append_ref(hyp.ext_vec_refs[r]);
      }
      out += "]";
    }
    out += "}";
  }
  out += "]}";
  return out;
}

NBestList parse_nbest_record(const std::string& line, const std::string& source, std::size_t line_no) {
  NBestList list;
  try {
    const json j = json::parse(line);
    list.utt_id = j.at("utt_id").get<std::string>();
    if (auto it = j.find("reference"); it != j.end() && !it->is_null()) list.reference = parse_tokens(*it);
    for (const auto& jh : j.at("hyps")) {
      Hypothesis hyp;
      hyp.tokens = parse_tokens(jh.at("tokens"));
      hyp.am_score = parse_number(jh, "am_score");
      hyp.lm_score = parse_number(jh, "lm_score");
      const auto& rank = jh.at("asr_rank");
      if (!rank.is_number_integer()) throw json::type_error::create(302, "asr_rank must be an integer", &rank);
      hyp.asr_rank = rank.get<int>();
      if (auto it = jh.find("ext_scalars"); it != jh.end()) {
        for (const auto& [name, value] : it->items()) {
          if (!value.is_number()) throw json::type_error::create(302, "ext_scalars values must be numbers", &value);
          hyp.ext_scalars[name] = value.get<double>();
        }
      }
      if (auto it = jh.find("ext_vec_ref"); it != jh.end() && !it->is_null()) {
        if (it->is_array()) {
          for (const auto& r : *it) hyp.ext_vec_refs.push_back(parse_ref(r));
        } else {
          hyp.ext_vec_refs.push_back(parse_ref(*it));
        }
      }
      list.hypotheses.push_back(std::move(hyp));
    }
  } catch (const json::exception& e) {
    throw ParseError(source, line_no, e.what());
  }
  check_asr_ranks(list, source, line_no);
  return list;
}

Dataset read_nbest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  Dataset dataset;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto list = parse_nbest_record(line, path, line_no);
    if (!ids.insert(list.utt_id).second) throw DuplicateUtterance(list.utt_id);
    dataset.push_back(std::move(list));
  }
  return dataset;
}

void write_nbest(const Dataset& dataset, const std::string& path) {
  std::set<std::string> ids;
  std::string out;
  for (const auto& list : dataset) {
    if (!ids.insert(list.utt_id).second) throw DuplicateUtterance(list.utt_id);
    out += format_nbest_record(list);
    out.push_back('\n');
  }
  write_file_atomic(path, out);
}

void resolve_ext_vectors(Dataset& dataset, const std::string& base_dir) {
  namespace fs = std::filesystem;
  std::unordered_map<std::string, Sidecar> cache;
  for (auto& list : dataset) {
    for (auto& hyp : list.hypotheses) {
      for (const auto& ref : hyp.ext_vec_refs) {
        fs::path p(ref.file);
        if (p.is_relative()) p = fs::path(base_dir) / p;
        const std::string key = p.string();
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, read_sidecar(key)).first;
        const Sidecar& sc = it->second;
        if (ref.row < 0 || static_cast<std::size_t>(ref.row) >= sc.rows.size()) {
          throw Error("MissingFeature", "row " + std::to_string(ref.row) + " is outside sidecar '" + key + "'");
        }
        const auto& row = sc.rows[static_cast<std::size_t>(ref.row)];
        if (row.utt_id != list.utt_id) {
          throw Misalignment(list.utt_id);
        }
        hyp.ext_vectors[sc.name].assign(row.values.begin(), row.values.end());
      }
    }
  }
}

void truncate_nbest(Dataset& dataset, std::size_t max_hyps) {
  for (auto& list : dataset) {
    if (list.hypotheses.size() <= max_hyps) continue;
    std::vector<Hypothesis> kept;
    for (auto& h : list.hypotheses) {
      if (static_cast<std::size_t>(h.asr_rank) < max_hyps) kept.push_back(std::move(h));
    }
    list.hypotheses = std::move(kept);
  }
}

}  // namespace l2rs
