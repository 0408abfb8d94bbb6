#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "gaitforge/ad/array.hpp"

namespace gf::ad {

// Versioned binary tensor container:
//   magic "GFCKPT1", u32 tensor count, then per tensor
//   (u32 name length, UTF-8 name, u32 rank, u32 dims[rank], f32 data LE).
// Round-trips bit-exactly.
inline constexpr char kCkptMagic[] = "GFCKPT1";

inline void save_checkpoint(const std::string& path,
                            const std::map<std::string, Array<float>>& tensors) {
  std::ofstream f(path, std::ios::binary);
  check(f.good(), "checkpoint: cannot open " + path + " for writing");
  f.write(kCkptMagic, 7);
  const uint32_t count = static_cast<uint32_t>(tensors.size());
  f.write(reinterpret_cast<const char*>(&count), 4);
  for (const auto& [name, arr] : tensors) {
    const uint32_t nl = static_cast<uint32_t>(name.size());
    f.write(reinterpret_cast<const char*>(&nl), 4);
    f.write(name.data(), nl);
    const uint32_t rank = static_cast<uint32_t>(arr.shape.size());
    f.write(reinterpret_cast<const char*>(&rank), 4);
    for (int d : arr.shape) {
      const uint32_t u = static_cast<uint32_t>(d);
      f.write(reinterpret_cast<const char*>(&u), 4);
    }
    f.write(reinterpret_cast<const char*>(arr.data.data()),
            static_cast<std::streamsize>(arr.data.size() * sizeof(float)));
  }
  check(f.good(), "checkpoint: write failed for " + path);
}

inline std::map<std::string, Array<float>> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  check(f.good(), "checkpoint: cannot open " + path);
  char magic[7];
  f.read(magic, 7);
  check(f.good() && std::memcmp(magic, kCkptMagic, 7) == 0,
        "checkpoint: bad magic in " + path);
  uint32_t count = 0;
  f.read(reinterpret_cast<char*>(&count), 4);
  std::map<std::string, Array<float>> out;
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t nl = 0;
    f.read(reinterpret_cast<char*>(&nl), 4);
    std::string name(nl, '\0');
    f.read(name.data(), nl);
    uint32_t rank = 0;
    f.read(reinterpret_cast<char*>(&rank), 4);
    std::vector<int> shape(rank);
    for (uint32_t r = 0; r < rank; ++r) {
      uint32_t u = 0;
      f.read(reinterpret_cast<char*>(&u), 4);
      shape[r] = static_cast<int>(u);
    }
    Array<float> arr(shape);
    f.read(reinterpret_cast<char*>(arr.data.data()),
           static_cast<std::streamsize>(arr.data.size() * sizeof(float)));
    check(f.good(), "checkpoint: truncated tensor '" + name + "' in " + path);
    out.emplace(std::move(name), std::move(arr));
  }
  return out;
}

}  // namespace gf::ad
