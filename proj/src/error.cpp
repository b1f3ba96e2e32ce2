#include "l2rs/error.hpp"

namespace l2rs {

Error::Error(std::string kind, const std::string& message)
    : std::runtime_error(message), kind_(std::move(kind)) {}

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : Error("ParseError", source + ":" + std::to_string(line) + ": " + what), line_(line) {}

Error MissingFeature(const std::string& utt_id, std::size_t hyp_index, const std::string& block) {
  return Error("MissingFeature", "utterance '" + utt_id + "' hypothesis " + std::to_string(hyp_index) +
                                     " lacks feature '" + block + "'");
}

}  // namespace l2rs
