#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "treerl/autodiff.hpp"
#include "treerl/errors.hpp"
#include "treerl/tensor.hpp"

namespace treerl {

// Binary checkpoint: magic + version, a metadata section of (key, value)
// string pairs, then (name, shape, values) parameter records. Doubles are
// stored verbatim, so the round trip is lossless and byte-stable.
inline constexpr char kCheckpointMagic[8] = {'T', 'R', 'L', 'C',
                                             'K', 'P', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::pair<std::string, Tensor>> params;

  const std::string* find_meta(const std::string& key) const {
    for (const auto& kv : metadata)
      if (kv.first == key) return &kv.second;
    return nullptr;
  }
};

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t x) {
  os.write(reinterpret_cast<const char*>(&x), sizeof(x));
}
inline void write_u64(std::ostream& os, std::uint64_t x) {
  os.write(reinterpret_cast<const char*>(&x), sizeof(x));
}
inline void write_str(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline std::uint32_t read_u32(std::istream& is, const std::string& path) {
  std::uint32_t x = 0;
  if (!is.read(reinterpret_cast<char*>(&x), sizeof(x)))
    throw DataError("checkpoint truncated: " + path);
  return x;
}
inline std::uint64_t read_u64(std::istream& is, const std::string& path) {
  std::uint64_t x = 0;
  if (!is.read(reinterpret_cast<char*>(&x), sizeof(x)))
    throw DataError("checkpoint truncated: " + path);
  return x;
}
inline std::string read_str(std::istream& is, const std::string& path) {
  std::uint32_t n = read_u32(is, path);
  std::string s(n, '\0');
  if (n && !is.read(s.data(), n))
    throw DataError("checkpoint truncated: " + path);
  return s;
}

}  // namespace detail

inline void save_checkpoint(
    const std::string& path, const ParameterStore& params,
    const std::vector<std::pair<std::string, std::string>>& metadata) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write checkpoint: " + path);
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_u32(os, kCheckpointVersion);
  detail::write_u32(os, static_cast<std::uint32_t>(metadata.size()));
  for (const auto& kv : metadata) {
    detail::write_str(os, kv.first);
    detail::write_str(os, kv.second);
  }
  detail::write_u64(os, params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = params.at(static_cast<int>(i));
    detail::write_str(os, e.name);
    detail::write_u32(os, static_cast<std::uint32_t>(e.value.shape.size()));
    for (std::size_t d : e.value.shape) detail::write_u64(os, d);
    os.write(reinterpret_cast<const char*>(e.value.v.data()),
             static_cast<std::streamsize>(e.value.v.size() * sizeof(double)));
  }
  if (!os) throw DataError("write failed: " + path);
}

inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot read checkpoint: " + path);
  char magic[8];
  if (!is.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw DataError("not a checkpoint file: " + path);
  std::uint32_t version = detail::read_u32(is, path);
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " +
                    std::to_string(version) + ": " + path);
  Checkpoint ck;
  std::uint32_t nmeta = detail::read_u32(is, path);
  for (std::uint32_t i = 0; i < nmeta; ++i) {
    std::string k = detail::read_str(is, path);
    std::string v = detail::read_str(is, path);
    ck.metadata.emplace_back(std::move(k), std::move(v));
  }
  std::uint64_t nparams = detail::read_u64(is, path);
  for (std::uint64_t i = 0; i < nparams; ++i) {
    std::string name = detail::read_str(is, path);
    std::uint32_t ndim = detail::read_u32(is, path);
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape)
      d = static_cast<std::size_t>(detail::read_u64(is, path));
    Tensor t = Tensor::zeros(shape);
    if (!is.read(reinterpret_cast<char*>(t.v.data()),
                 static_cast<std::streamsize>(t.v.size() * sizeof(double))))
      throw DataError("checkpoint truncated: " + path);
    if (!t.finite())
      throw DataError("checkpoint holds non-finite values in '" + name +
                      "': " + path);
    ck.params.emplace_back(std::move(name), std::move(t));
  }
  return ck;
}

// Copies checkpoint values into an already-built store. The name sets and
// every shape must match exactly; mismatches are reported by name.
inline void apply_checkpoint(const Checkpoint& ck, ParameterStore& params) {
  if (ck.params.size() != params.size())
    throw DataError("checkpoint/config mismatch: checkpoint has " +
                    std::to_string(ck.params.size()) + " parameters, model has " +
                    std::to_string(params.size()));
  for (const auto& rec : ck.params) {
    if (!params.has(rec.first))
      throw DataError("checkpoint parameter '" + rec.first +
                      "' does not exist in the configured model");
    auto& e = params.at(rec.first);
    if (e.value.shape != rec.second.shape)
      throw DataError("dimension mismatch for '" + rec.first +
                      "': checkpoint " + rec.second.shape_str() + ", config " +
                      e.value.shape_str());
    e.value = rec.second;
  }
}

}  // namespace treerl
