#pragma once

// Classifier dump, little-endian like the embedding format:
//   char[4] "CROL", u32 version (1), u32 input_dim, u32 num_classes,
//   f64 lambda, u32 activation kind, f64 clamp_epsilon,
//   then per class in output order:
//     u32 class id, u64 sample_count, u32 rank,
//     f64[D+1] moment, f64[(D+1) x rank] basis (column-major),
//     f64[rank] singular values, f64[D+1] weights.

#include <filesystem>
#include <string>
#include <string_view>

#include "cifnet/embedding_io.hpp"
#include "cifnet/rolann.hpp"

namespace cifnet {

inline constexpr std::array<char, 4> kClassifierMagic{'C', 'R', 'O', 'L'};
inline constexpr std::uint32_t kClassifierVersion = 1;

inline std::string encode_classifier(const RolannClassifier& c) {
  std::string out;
  out.append(kClassifierMagic.data(), 4);
  detail::put_le(out, kClassifierVersion);
  detail::put_le(out, static_cast<std::uint32_t>(c.input_dim()));
  detail::put_le(out, static_cast<std::uint32_t>(c.num_classes()));
  detail::put_le(out, c.lambda());
  detail::put_le(out, static_cast<std::uint32_t>(c.activation().kind));
  detail::put_le(out, c.activation().clamp_epsilon);
  auto put_all = [&out](const auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) detail::put_le(out, m.data()[i]);
  };
  for (const auto& n : c.neurons()) {
    detail::put_le(out, n.id);
    detail::put_le(out, n.knowledge.sample_count);
    detail::put_le(out, static_cast<std::uint32_t>(n.knowledge.rank()));
    put_all(n.knowledge.moment);
    put_all(n.knowledge.basis);
    put_all(n.knowledge.singular_values);
    put_all(n.weights);
  }
  return out;
}

inline RolannClassifier decode_classifier(std::string_view bytes) {
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (bytes.size() - pos < n)
      throw FormatError("classifier dump truncated at byte offset " + std::to_string(pos) +
                        ": need " + std::to_string(n) + " more bytes, have " +
                        std::to_string(bytes.size() - pos));
  };
  auto get = [&]<typename T>(T) {
    need(sizeof(T));
    T v = detail::get_le<T>(bytes.data() + pos);
    pos += sizeof(T);
    return v;
  };
  need(4);
  if (std::memcmp(bytes.data(), kClassifierMagic.data(), 4) != 0)
    throw FormatError("bad magic at byte offset 0: expected \"CROL\"");
  pos = 4;
  if (get(std::uint32_t{}) != kClassifierVersion)
    throw FormatError("unsupported classifier version at byte offset 4");
  const auto dim = get(std::uint32_t{});
  const auto count = get(std::uint32_t{});
  const double lambda = get(double{});
  const auto kind = get(std::uint32_t{});
  if (kind != static_cast<std::uint32_t>(ActivationKind::logistic))
    throw FormatError("unknown activation kind " + std::to_string(kind));
  const double eps = get(double{});

  RolannClassifier c(dim, lambda, ActivationSpec{ActivationKind::logistic, eps});
  const Eigen::Index aug = Eigen::Index{dim} + 1;
  auto get_into = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = get(double{});
  };
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto id = get(std::uint32_t{});
    NeuronKnowledge nk;
    nk.sample_count = get(std::uint64_t{});
    const auto rank = get(std::uint32_t{});
    if (rank > aug) throw FormatError("rank exceeds augmented dimension at byte offset " + std::to_string(pos));
    nk.moment.resize(aug);
    nk.basis.resize(aug, rank);
    nk.singular_values.resize(rank);
    get_into(nk.moment);
    get_into(nk.basis);
    get_into(nk.singular_values);
    Vector stored_weights(aug);
    get_into(stored_weights);
    c.set_knowledge(id, std::move(nk));
  }
  if (pos != bytes.size())
    throw FormatError("trailing bytes after classifier dump at offset " + std::to_string(pos));
  return c;
}

inline void save_classifier(const RolannClassifier& c, const std::filesystem::path& path) {
  detail::write_file(path, encode_classifier(c));
}

inline RolannClassifier load_classifier(const std::filesystem::path& path) {
  return decode_classifier(detail::read_file(path));
}

}  // namespace cifnet
