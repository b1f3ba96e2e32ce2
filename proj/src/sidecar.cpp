#include "l2rs/sidecar.hpp"

#include <bit>
#include <cstring>

#include "l2rs/error.hpp"
#include "l2rs/io.hpp"

namespace l2rs {
namespace {

constexpr std::string_view kMagic = "l2rs-sidecar";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos, const std::string& path) {
  if (pos + 4 > in.size()) throw ParseError(path, 2, "truncated binary row");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

}  // namespace

void write_sidecar(const Sidecar& sidecar, const std::string& path, SidecarEncoding encoding) {
  std::string out;
  out += std::string(kMagic) + " v1 name=" + sidecar.name + " dim=" + std::to_string(sidecar.dim) +
         " count=" + std::to_string(sidecar.rows.size()) +
         " encoding=" + (encoding == SidecarEncoding::kText ? "text" : "f32le") + "\n";
  for (const auto& row : sidecar.rows) {
    if (row.values.size() != sidecar.dim) {
      throw DimMismatch("sidecar '" + sidecar.name + "' row for " + row.utt_id + " has " +
                        std::to_string(row.values.size()) + " values, expected " + std::to_string(sidecar.dim));
    }
    if (encoding == SidecarEncoding::kText) {
      out += row.utt_id + " " + std::to_string(row.hyp_index);
      for (float v : row.values) out += " " + format_double(v, 9);
      out += "\n";
    } else {
      put_u32(out, static_cast<std::uint32_t>(row.utt_id.size()));
      out += row.utt_id;
      put_u32(out, static_cast<std::uint32_t>(row.hyp_index));
      for (float v : row.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
  }
  write_file_atomic(path, out);
}

Sidecar read_sidecar(const std::string& path) {
  const std::string data = read_file(path);
  const auto eol = data.find('\n');
  if (eol == std::string::npos) throw ParseError(path, 1, "missing sidecar header");
  const auto header = split_ws(std::string_view(data).substr(0, eol));
  if (header.size() != 6 || header[0] != kMagic || header[1] != "v1") {
    throw ParseError(path, 1, "bad sidecar header");
  }
  auto field = [&](std::size_t i, std::string_view key) {
    if (header[i].substr(0, key.size() + 1) != std::string(key) + "=") {
      throw ParseError(path, 1, "expected '" + std::string(key) + "=' in header");
    }
    return header[i].substr(key.size() + 1);
  };
  Sidecar sc;
  sc.name = std::string(field(2, "name"));
  sc.dim = static_cast<std::size_t>(parse_int(field(3, "dim"), path, 1));
  const auto count = static_cast<std::size_t>(parse_int(field(4, "count"), path, 1));
  const auto encoding = field(5, "encoding");
  sc.rows.reserve(count);

  if (encoding == "text") {
    std::size_t pos = eol + 1;
    std::size_t line_no = 1;
    while (pos < data.size()) {
      auto next = data.find('\n', pos);
      if (next == std::string::npos) next = data.size();
      ++line_no;
      auto toks = split_ws(std::string_view(data).substr(pos, next - pos));
      pos = next + 1;
      if (toks.empty()) continue;
      if (toks.size() != sc.dim + 2) {
        throw ParseError(path, line_no, "expected " + std::to_string(sc.dim + 2) + " fields, got " +
                                            std::to_string(toks.size()));
      }
      SidecarRow row;
      row.utt_id = std::string(toks[0]);
      row.hyp_index = static_cast<std::size_t>(parse_int(toks[1], path, line_no));
      row.values.reserve(sc.dim);
      for (std::size_t d = 0; d < sc.dim; ++d) {
        row.values.push_back(static_cast<float>(parse_double(toks[d + 2], path, line_no)));
      }
      sc.rows.push_back(std::move(row));
    }
  } else if (encoding == "f32le") {
    std::size_t pos = eol + 1;
    while (pos < data.size()) {
      SidecarRow row;
      const auto len = get_u32(data, pos, path);
      if (pos + len > data.size()) throw ParseError(path, 2, "truncated binary row");
      row.utt_id = data.substr(pos, len);
      pos += len;
      row.hyp_index = get_u32(data, pos, path);
      row.values.reserve(sc.dim);
      for (std::size_t d = 0; d < sc.dim; ++d) row.values.push_back(std::bit_cast<float>(get_u32(data, pos, path)));
      sc.rows.push_back(std::move(row));
    }
  } else {
    throw ParseError(path, 1, "unknown sidecar encoding '" + std::string(encoding) + "'");
  }
  if (sc.rows.size() != count) {
    throw ParseError(path, 1, "header declares " + std::to_string(count) + " rows, file has " +
                                  std::to_string(sc.rows.size()));
  }
  return sc;
}

}  // namespace l2rs
