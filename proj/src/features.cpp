#include "l2rs/features.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "l2rs/error.hpp"
#include "l2rs/io.hpp"

namespace l2rs {

namespace {

struct SourceName {
  BlockSource source;
  std::string_view name;
};

constexpr SourceName kSources[] = {
    {BlockSource::kNgram, "builtin-ngram"},
    {BlockSource::kTopicLm, "builtin-tmlm"},
    {BlockSource::kTopicVector, "builtin-topicvec"},
    {BlockSource::kHypothesisField, "hypothesis-field"},
    {BlockSource::kExtScalar, "ext-scalar"},
    {BlockSource::kExtVector, "ext-vector"},
};

std::string canonical_line(const FeatureBlock& b) {
  std::string line = b.name + " " + std::string(source_name(b.source)) + " " + std::to_string(b.dim);
  if (b.key != b.name) line += " key=" + b.key;
  if (b.log_transform) line += " transform=log";
  return line;
}

}  // namespace

std::string_view source_name(BlockSource source) {
  for (const auto& s : kSources) {
    if (s.source == source) return s.name;
  }
  return "unknown";
}

BlockSource parse_source(std::string_view name) {
  for (const auto& s : kSources) {
    if (s.name == name) return s.source;
  }
  throw InvalidArgument("unknown feature source '" + std::string(name) + "'");
}

FeatureSchema::FeatureSchema(std::vector<FeatureBlock> blocks) : blocks_(std::move(blocks)) {
  std::set<std::string> names;
  std::string canonical;
  for (auto& b : blocks_) {
    if (b.key.empty()) b.key = b.name;
    if (b.name.empty()) throw InvalidArgument("feature block without a name");
    if (!names.insert(b.name).second) throw InvalidArgument("duplicate feature block '" + b.name + "'");
    if (b.dim < 1) throw InvalidArgument("feature block '" + b.name + "' has dim 0");
    switch (b.source) {
      case BlockSource::kNgram:
      case BlockSource::kTopicLm:
        if (b.dim != 2) throw DimMismatch("block '" + b.name + "' emits log-probability and log-perplexity, dim must be 2");
        break;
      case BlockSource::kHypothesisField:
        if (b.key != "am_score" && b.key != "lm_score") {
          throw InvalidArgument("hypothesis-field block '" + b.name + "' must use key am_score or lm_score");
        }
        [[fallthrough]];
      case BlockSource::kExtScalar:
        if (b.dim != 1) throw DimMismatch("scalar block '" + b.name + "' must have dim 1");
        break;
      default:
        break;
    }
    offsets_.push_back(total_dim_);
    total_dim_ += b.dim;
    canonical += canonical_line(b) + "\n";
  }
  id_ = fnv1a(canonical);
}

std::size_t FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].name == name) return i;
  }
  throw InvalidArgument("schema has no block named '" + std::string(name) + "'");
}

FeatureSchema FeatureSchema::select(const std::vector<std::size_t>& block_indices) const {
  std::vector<FeatureBlock> kept;
  for (auto i : block_indices) kept.push_back(blocks_.at(i));
  return FeatureSchema(std::move(kept));
}

std::string format_schema(const FeatureSchema& schema) {
  std::string out = "# name source dim [key=..] [transform=log]\n";
  for (const auto& b : schema.blocks()) out += canonical_line(b) + "\n";
  return out;
}

FeatureSchema parse_schema(const std::string& text, const std::string& source) {
  std::vector<FeatureBlock> blocks;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line = std::string_view(text).substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() < 3) throw ParseError(source, line_no, "expected '<name> <source> <dim>'");
    FeatureBlock b;
    b.name = std::string(toks[0]);
    try {
      b.source = parse_source(toks[1]);
    } catch (const Error& e) {
      throw ParseError(source, line_no, e.what());
    }
    const auto dim = parse_int(toks[2], source, line_no);
    if (dim < 1) throw ParseError(source, line_no, "dim must be >= 1");
    b.dim = static_cast<std::size_t>(dim);
    for (std::size_t i = 3; i < toks.size(); ++i) {
      if (toks[i].starts_with("key=")) {
        b.key = std::string(toks[i].substr(4));
      } else if (toks[i] == "transform=log") {
        b.log_transform = true;
      } else if (toks[i] == "transform=identity") {
        b.log_transform = false;
      } else {
        throw ParseError(source, line_no, "unknown block option '" + std::string(toks[i]) + "'");
      }
    }
    blocks.push_back(std::move(b));
  }
  try {
    return FeatureSchema(std::move(blocks));
  } catch (const Error& e) {
    throw ParseError(source, line_no, e.what());
  }
}

FeatureSchema read_schema(const std::string& path) { return parse_schema(read_file(path), path); }

void write_schema(const FeatureSchema& schema, const std::string& path) {
  write_file_atomic(path, format_schema(schema));
}

std::vector<FeatureVector> assemble(const NBestList& list, const FeatureSchema& schema, const FeatureModels& models) {
  bool needs_theta = false;
  for (const auto& b : schema.blocks()) {
    if (b.source == BlockSource::kNgram && !models.ngram) {
      throw InvalidArgument("block '" + b.name + "' needs a trained n-gram model");
    }
    if (b.source == BlockSource::kTopicLm || b.source == BlockSource::kTopicVector) {
      if (!models.topics) throw InvalidArgument("block '" + b.name + "' needs a trained topic model");
      if (b.source == BlockSource::kTopicVector && b.dim != static_cast<std::size_t>(models.topics->num_topics())) {
        throw DimMismatch("block '" + b.name + "' declares dim " + std::to_string(b.dim) + " but the topic model has " +
                          std::to_string(models.topics->num_topics()) + " topics");
      }
      needs_theta = true;
    }
  }

  std::vector<FeatureVector> out;
  out.reserve(list.hypotheses.size());
  for (std::size_t h = 0; h < list.hypotheses.size(); ++h) {
    const auto& hyp = list.hypotheses[h];
    FeatureVector fv;
    fv.schema_id = schema.id();
    fv.values.reserve(schema.total_dim());

    std::vector<double> theta;
    if (needs_theta) {
      const auto seed = fnv1a(list.utt_id + "#" + std::to_string(hyp.asr_rank), models.seed);
      theta = infer_theta(*models.topics, hyp.tokens, models.infer_iterations, seed);
    }

    for (const auto& b : schema.blocks()) {
      switch (b.source) {
        case BlockSource::kNgram: {
          const double lp = models.ngram->sentence_logprob(hyp.tokens);
          fv.values.push_back(lp);
          fv.values.push_back(-lp / static_cast<double>(hyp.tokens.size() + 1));
          break;
        }
        case BlockSource::kTopicLm: {
          const auto s = tm_lm_logprob(*models.topics, theta, hyp.tokens);
          fv.values.push_back(s.logprob);
          fv.values.push_back(std::log(s.perplexity()));
          break;
        }
        case BlockSource::kTopicVector:
          fv.values.insert(fv.values.end(), theta.begin(), theta.end());
          break;
        case BlockSource::kHypothesisField:
          fv.values.push_back(b.key == "am_score" ? hyp.am_score : hyp.lm_score);
          break;
        case BlockSource::kExtScalar: {
          auto it = hyp.ext_scalars.find(b.key);
          if (it == hyp.ext_scalars.end()) throw MissingFeature(list.utt_id, h, b.name);
          fv.values.push_back(b.log_transform ? std::log(it->second) : it->second);
          break;
        }
        case BlockSource::kExtVector: {
          auto it = hyp.ext_vectors.find(b.key);
          if (it == hyp.ext_vectors.end()) throw MissingFeature(list.utt_id, h, b.name);
          if (it->second.size() != b.dim) {
            throw DimMismatch("utterance '" + list.utt_id + "' hypothesis " + std::to_string(h) + " feature '" +
                              b.name + "' has " + std::to_string(it->second.size()) + " values, schema declares " +
                              std::to_string(b.dim));
          }
          for (double v : it->second) fv.values.push_back(b.log_transform ? std::log(v) : v);
          break;
        }
      }
    }
    for (double v : fv.values) {
      if (!std::isfinite(v)) {
        throw NonFiniteFeature("utterance '" + list.utt_id + "' hypothesis " + std::to_string(h) +
                               " produced a non-finite feature value");
      }
    }
    out.push_back(std::move(fv));
  }
  return out;
}

FeatureVector project(const FeatureVector& vector, const FeatureSchema& from, const FeatureSchema& to) {
  if (vector.schema_id != from.id() || vector.values.size() != from.total_dim()) {
    throw SchemaMismatch("vector does not belong to the source schema");
  }
  FeatureVector out;
  out.schema_id = to.id();
  out.values.reserve(to.total_dim());
  for (const auto& b : to.blocks()) {
    const auto src = from.index_of(b.name);
    if (from.blocks()[src] != b) throw SchemaMismatch("block '" + b.name + "' differs between schemas");
    const auto off = from.offset(src);
    out.values.insert(out.values.end(), vector.values.begin() + static_cast<std::ptrdiff_t>(off),
                      vector.values.begin() + static_cast<std::ptrdiff_t>(off + b.dim));
  }
  return out;
}

Normalizer::Normalizer(std::vector<double> mean, std::vector<double> stddev, std::uint64_t schema_id)
    : mean_(std::move(mean)), stddev_(std::move(stddev)), schema_id_(schema_id) {
  if (mean_.size() != stddev_.size()) throw DimMismatch("normalizer mean and stddev lengths differ");
  for (auto& s : stddev_) s = std::max(s, kMinStddev);
}

Normalizer Normalizer::identity(std::size_t dim, std::uint64_t schema_id) {
  return Normalizer(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0), schema_id);
}

void Normalizer::check(const FeatureVector& vector) const {
  if (vector.schema_id != schema_id_ || vector.values.size() != mean_.size()) {
    throw SchemaMismatch("feature vector schema " + hex64(vector.schema_id) + " does not match normalizer schema " +
                         hex64(schema_id_));
  }
}

FeatureVector Normalizer::apply(const FeatureVector& vector) const {
  check(vector);
  FeatureVector out{std::vector<double>(vector.values.size()), vector.schema_id};
  for (std::size_t d = 0; d < mean_.size(); ++d) {
    out.values[d] = clamped(d) ? 0.0 : (vector.values[d] - mean_[d]) / stddev_[d];
  }
  return out;
}

std::vector<FeatureVector> Normalizer::apply(const std::vector<FeatureVector>& vectors) const {
  std::vector<FeatureVector> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) out.push_back(apply(v));
  return out;
}

FeatureVector Normalizer::inverse(const FeatureVector& vector) const {
  check(vector);
  FeatureVector out{std::vector<double>(vector.values.size()), vector.schema_id};
  for (std::size_t d = 0; d < mean_.size(); ++d) {
    out.values[d] = clamped(d) ? mean_[d] : vector.values[d] * stddev_[d] + mean_[d];
  }
  return out;
}

Normalizer fit_normalizer(const std::vector<FeatureVector>& train) {
  if (train.size() < 2) throw InvalidArgument("fitting a normalizer needs at least 2 vectors");
  const auto schema_id = train.front().schema_id;
  const auto dim = train.front().values.size();
  for (const auto& v : train) {
    if (v.schema_id != schema_id || v.values.size() != dim) {
      throw SchemaMismatch("training vectors come from different schemas");
    }
  }
  const double n = static_cast<double>(train.size());
  std::vector<double> mean(dim, 0.0), var(dim, 0.0);
  for (const auto& v : train) {
    for (std::size_t d = 0; d < dim; ++d) mean[d] += v.values[d];
  }
  for (auto& m : mean) m /= n;
  for (const auto& v : train) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = v.values[d] - mean[d];
      var[d] += diff * diff;
    }
  }
  for (auto& s : var) s = std::sqrt(s / n);
  return Normalizer(std::move(mean), std::move(var), schema_id);
}

void write_feature_table(const FeatureTable& table, const std::string& path) {
  if (table.utt_ids.size() != table.lists.size()) throw InvalidArgument("feature table ids and lists differ in length");
  const auto& schema = table.schema;
  nlohmann::ordered_json header;
  header["format"] = "l2rs-features-v1";
  header["schema_id"] = hex64(schema.id());
  header["dim"] = schema.total_dim();
  header["seed"] = table.seed;
  header["blocks"] = nlohmann::ordered_json::array();
  for (const auto& b : schema.blocks()) header["blocks"].push_back(canonical_line(b));
  std::string out = header.dump() + "\n";
  for (std::size_t i = 0; i < table.lists.size(); ++i) {
    out += "{\"utt_id\":" + nlohmann::json(table.utt_ids[i]).dump() + ",\"vectors\":[";
    for (std::size_t h = 0; h < table.lists[i].size(); ++h) {
      const auto& v = table.lists[i][h];
      if (v.schema_id != schema.id() || v.values.size() != schema.total_dim()) {
        throw SchemaMismatch("vector for '" + table.utt_ids[i] + "' does not match the table schema");
      }
      if (h) out.push_back(',');
      out += "[" + join_doubles(v.values, ',') + "]";
    }
    out += "]}\n";
  }
  write_file_atomic(path, out);
}

FeatureTable read_feature_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  FeatureTable table;
  std::string line;
  std::size_t line_no = 0;
  try {
    if (!std::getline(in, line)) throw ParseError(path, 1, "missing header");
    ++line_no;
    const auto header = nlohmann::json::parse(line);
    if (header.at("format").get<std::string>() != "l2rs-features-v1") throw ParseError(path, 1, "unknown format");
    std::string schema_text;
    for (const auto& b : header.at("blocks")) schema_text += b.get<std::string>() + "\n";
    table.schema = parse_schema(schema_text, path);
    if (hex64(table.schema.id()) != header.at("schema_id").get<std::string>() ||
        table.schema.total_dim() != header.at("dim").get<std::size_t>()) {
      throw ParseError(path, 1, "schema_id or dim does not match the declared blocks");
    }
    table.seed = header.at("seed").get<std::uint64_t>();
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto rec = nlohmann::json::parse(line);
      table.utt_ids.push_back(rec.at("utt_id").get<std::string>());
      std::vector<FeatureVector> vecs;
      for (const auto& jv : rec.at("vectors")) {
        FeatureVector v{jv.get<std::vector<double>>(), table.schema.id()};
        if (v.values.size() != table.schema.total_dim()) throw ParseError(path, line_no, "vector length differs from header dim");
        vecs.push_back(std::move(v));
      }
      table.lists.push_back(std::move(vecs));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, line_no, e.what());
  }
  return table;
}

}  // namespace l2rs
