#pragma once

#include <stdexcept>
#include <string>

namespace l2rs {

// Every error raised by the library carries a stable kind name so that the
// command line can report it as a single machine-parseable line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message);

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline Error MissingReference(const std::string& utt_id) {
  return Error("MissingReference", "utterance '" + utt_id + "' has no reference");
}

inline Error DuplicateUtterance(const std::string& utt_id) {
  return Error("DuplicateUtterance", "utterance '" + utt_id + "' appears more than once");
}

inline Error EmptyCorpus() { return Error("EmptyCorpus", "training corpus is empty"); }

Error MissingFeature(const std::string& utt_id, std::size_t hyp_index, const std::string& block);

inline Error DimMismatch(const std::string& what) { return Error("DimMismatch", what); }
inline Error SchemaMismatch(const std::string& what) { return Error("SchemaMismatch", what); }
inline Error Misalignment(const std::string& utt_id) {
  return Error("Misalignment", "labels and feature vectors disagree for utterance '" + utt_id + "'");
}
inline Error NoPairs() { return Error("NoPairs", "no ordered hypothesis pairs to train on"); }
inline Error NonFiniteFeature(const std::string& what) { return Error("NonFiniteFeature", what); }
inline Error InvalidK(int k) { return Error("InvalidK", "NDCG cutoff must be >= 1, got " + std::to_string(k)); }
inline Error InvalidArgument(const std::string& what) { return Error("InvalidArgument", what); }
inline Error IoError(const std::string& what) { return Error("IoError", what); }

}  // namespace l2rs
