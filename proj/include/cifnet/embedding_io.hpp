#pragma once

// Embedding file formats.
//
// Binary (little-endian):
//   offset 0   char[4]  magic "CEMB"
//   offset 4   u32      version (1)
//   offset 8   u32      dim
//   offset 12  u64      count
//   offset 20  u32      label width in bytes (4)
//   offset 24  count x { u32 label, dim x f32 }
//
// CSV: header-less rows "label,v0,v1,...,v{D-1}".

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cifnet/dataset.hpp"
#include "cifnet/error.hpp"

namespace cifnet {

enum class EmbeddingFormat { binary, csv };

inline constexpr std::array<char, 4> kEmbeddingMagic{'C', 'E', 'M', 'B'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::uint32_t kLabelWidth = 4;
inline constexpr std::size_t kEmbeddingHeaderBytes = 24;

struct EmbeddingHeader {
  std::uint32_t version = kEmbeddingVersion;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
  std::uint32_t label_width = kLabelWidth;

  std::uint64_t record_bytes() const { return label_width + std::uint64_t{dim} * 4; }
  std::uint64_t expected_file_bytes() const { return kEmbeddingHeaderBytes + count * record_bytes(); }
};

namespace detail {

template <typename T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::array<char, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    std::reverse(b.begin(), b.end());
    std::memcpy(&v, b.data(), sizeof(T));
  }
  return v;
}

template <typename T>
void put_le(std::string& out, T v) {
  v = byteswap_if_big(v);
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return byteswap_if_big(v);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

}  // namespace detail

inline EmbeddingHeader parse_embedding_header(std::string_view bytes) {
  if (bytes.size() < kEmbeddingHeaderBytes)
    throw FormatError("embedding header truncated: expected " +
                      std::to_string(kEmbeddingHeaderBytes) + " bytes, got " +
                      std::to_string(bytes.size()) + " (byte offset " +
                      std::to_string(bytes.size()) + ")");
  if (std::memcmp(bytes.data(), kEmbeddingMagic.data(), 4) != 0)
    throw FormatError("bad magic at byte offset 0: expected \"CEMB\"");
  EmbeddingHeader h;
  h.version = detail::get_le<std::uint32_t>(bytes.data() + 4);
  if (h.version != kEmbeddingVersion)
    throw FormatError("unsupported version " + std::to_string(h.version) + " at byte offset 4");
  h.dim = detail::get_le<std::uint32_t>(bytes.data() + 8);
  if (h.dim == 0) throw FormatError("dim must be positive (byte offset 8)");
  h.count = detail::get_le<std::uint64_t>(bytes.data() + 12);
  h.label_width = detail::get_le<std::uint32_t>(bytes.data() + 20);
  if (h.label_width != kLabelWidth)
    throw FormatError("unsupported label width " + std::to_string(h.label_width) +
                      " at byte offset 20");
  return h;
}

inline EmbeddingHeader read_embedding_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string buf(kEmbeddingHeaderBytes, '\0');
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  buf.resize(static_cast<std::size_t>(in.gcount()));
  return parse_embedding_header(buf);
}

inline std::string encode_binary(const EmbeddingDataset& data) {
  std::string out;
  EmbeddingHeader h;
  h.dim = static_cast<std::uint32_t>(data.dim());
  h.count = data.size();
  out.reserve(static_cast<std::size_t>(h.expected_file_bytes()));
  out.append(kEmbeddingMagic.data(), 4);
  detail::put_le(out, h.version);
  detail::put_le(out, h.dim);
  detail::put_le(out, h.count);
  detail::put_le(out, h.label_width);
  for (std::size_t i = 0; i < data.size(); ++i) {
    detail::put_le(out, data.label(i));
    for (float v : data.embedding(i)) detail::put_le(out, v);
  }
  return out;
}

inline EmbeddingDataset decode_binary(std::string_view bytes) {
  const EmbeddingHeader h = parse_embedding_header(bytes);
  const std::uint64_t expected = h.expected_file_bytes();
  if (bytes.size() < expected)
    throw FormatError("truncated payload: expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(bytes.size()) + " (data ends at byte offset " +
                      std::to_string(bytes.size()) + ")");
  if (bytes.size() > expected)
    throw FormatError("trailing data: expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(bytes.size()) + " (first extra byte at offset " +
                      std::to_string(expected) + ")");

  EmbeddingDataset data(h.dim);
  data.reserve(static_cast<std::size_t>(h.count));
  std::vector<float> row(h.dim);
  const char* p = bytes.data() + kEmbeddingHeaderBytes;
  for (std::uint64_t i = 0; i < h.count; ++i) {
    const auto label = detail::get_le<std::uint32_t>(p);
    p += 4;
    for (std::uint32_t d = 0; d < h.dim; ++d, p += 4) row[d] = detail::get_le<float>(p);
    data.add(row, label);
  }
  return data;
}

inline std::string encode_csv(const EmbeddingDataset& data) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += std::to_string(data.label(i));
    for (float v : data.embedding(i)) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      out += ',';
      out.append(buf, end);
    }
    out += '\n';
  }
  return out;
}

inline EmbeddingDataset decode_csv(std::string_view text) {
  EmbeddingDataset data;
  bool have_dim = false;
  std::vector<float> row;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    row.clear();
    ClassId label = 0;
    std::size_t field = 0;
    while (true) {
      const std::size_t comma = line.find(',');
      std::string_view tok = line.substr(0, comma);
      while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
      while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
      const char* first = tok.data();
      const char* last = tok.data() + tok.size();
      std::from_chars_result r{};
      if (field == 0) {
        r = std::from_chars(first, last, label);
      } else {
        float v = 0.0f;
        r = std::from_chars(first, last, v);
        row.push_back(v);
      }
      if (r.ec != std::errc{} || r.ptr != last || tok.empty())
        throw FormatError("line " + std::to_string(line_no) + ": cannot parse field " +
                          std::to_string(field) + " \"" + std::string(tok) + "\"");
      ++field;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (!have_dim) {
      if (row.empty()) throw FormatError("line " + std::to_string(line_no) + ": no embedding values");
      data = EmbeddingDataset(row.size());
      have_dim = true;
    } else if (row.size() != data.dim()) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(data.dim()) + " values, got " + std::to_string(row.size()));
    }
    data.add(row, label);
  }
  if (!have_dim) throw FormatError("CSV contains no records");
  return data;
}

inline EmbeddingDataset load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
  const std::string bytes = detail::read_file(path);
  return format == EmbeddingFormat::binary ? decode_binary(bytes) : decode_csv(bytes);
}

inline void save_embeddings(const EmbeddingDataset& data, const std::filesystem::path& path,
                            EmbeddingFormat format) {
  detail::write_file(path, format == EmbeddingFormat::binary ? encode_binary(data) : encode_csv(data));
}

/// Picks the format from the extension: ".csv" is CSV, anything else binary.
inline EmbeddingFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? EmbeddingFormat::csv : EmbeddingFormat::binary;
}

}  // namespace cifnet
