#pragma once

// Framework-neutral weight archive. Layout (little-endian):
//
//   char[8]  magic "SEAICEW1"
//   u32      entry count
//   entries: u32 name length, name bytes, u32 rank, i64 dims[rank],
//            f32 values[product(dims)]
//
// Entries are written in name order.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "seaice/errors.hpp"

namespace seaice {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes little-endian");

struct ArchiveTensor {
  std::vector<std::int64_t> shape;
  std::vector<float> values;

  std::int64_t numel() const {
    return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
  }
  friend bool operator==(const ArchiveTensor&, const ArchiveTensor&) = default;
};

using TensorArchive = std::map<std::string, ArchiveTensor>;

inline constexpr char kArchiveMagic[8] = {'S', 'E', 'A', 'I', 'C', 'E', 'W', '1'};

inline void write_archive(const std::string& path, const TensorArchive& archive) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path + ": cannot write");
  auto put = [&out](const auto& v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  out.write(kArchiveMagic, sizeof kArchiveMagic);
  put(static_cast<std::uint32_t>(archive.size()));
  for (const auto& [name, t] : archive) {
    if (t.numel() != static_cast<std::int64_t>(t.values.size())) {
      throw Error("archive entry " + name + ": shape does not match value count");
    }
    put(static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put(d);
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(float)));
  }
  if (!out) throw Error(path + ": write failed");
}

inline TensorArchive read_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IncompatibleCheckpoint(path + ": cannot open weight archive");
  auto get = [&in, &path](auto& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw IncompatibleCheckpoint(path + ": truncated weight archive");
  };
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kArchiveMagic, sizeof magic) != 0) {
    throw IncompatibleCheckpoint(path + ": not a weight archive");
  }
  std::uint32_t count = 0;
  get(count);
  TensorArchive archive;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t len = 0;
    get(len);
    std::string name(len, '\0');
    in.read(name.data(), len);
    std::uint32_t rank = 0;
    get(rank);
    if (rank > 8) throw IncompatibleCheckpoint(path + ": implausible tensor rank in " + name);
    ArchiveTensor t;
    t.shape.resize(rank);
    for (auto& d : t.shape) get(d);
    const auto n = t.numel();
    if (n < 0 || n > (std::int64_t{1} << 32)) throw IncompatibleCheckpoint(path + ": bad shape for " + name);
    t.values.resize(static_cast<std::size_t>(n));
    in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (!in) throw IncompatibleCheckpoint(path + ": truncated weight archive");
    archive.emplace(std::move(name), std::move(t));
  }
  return archive;
}

}  // namespace seaice
