#pragma once

#include <string>
#include <vector>

namespace l2rs {

// Dense external features (sentence embeddings and the like), one row per
// hypothesis. The text encoding writes floats with 9 significant digits; the
// f32le encoding stores each row as
//   u32 id_length, id bytes, u32 hyp_index, dim x f32
// all little-endian.
enum class SidecarEncoding { kText, kF32LE };

struct SidecarRow {
  std::string utt_id;
  std::size_t hyp_index = 0;
  std::vector<float> values;

  friend bool operator==(const SidecarRow&, const SidecarRow&) = default;
};

struct Sidecar {
  std::string name;
  std::size_t dim = 0;
  std::vector<SidecarRow> rows;

  friend bool operator==(const Sidecar&, const Sidecar&) = default;
};

Sidecar read_sidecar(const std::string& path);
void write_sidecar(const Sidecar& sidecar, const std::string& path,
                   SidecarEncoding encoding = SidecarEncoding::kText);

}  // namespace l2rs
