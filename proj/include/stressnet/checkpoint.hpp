#pragma once

// Binary checkpoint container, all integers and floats little-endian:
//
//   magic            8 ASCII bytes ("SNCKPT01" StressNet, "SNCKPTL1" LSTM, "SNCKPTB1" Bi-LSTM)
//   u32              number of config entries
//   per entry        u32 key length, key bytes, u8 type (0 = i64, 1 = f64), 8 value bytes
//   u32              number of parameters
//   per parameter    u32 name length, name bytes, u32 rank, u64 extent x rank, f64 x product(extents)

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "stressnet/params.hpp"
#include "stressnet/tensor.hpp"

namespace stressnet {

struct ConfigEntry {
  std::string key;
  std::variant<std::int64_t, double> value;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct CheckpointData {
  std::string magic;
  std::vector<ConfigEntry> config;
  std::vector<NamedTensor> params;

  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool has(const std::string& key) const;
};

std::vector<std::uint8_t> encode_checkpoint(const std::string& magic, const std::vector<ConfigEntry>& config,
                                            const ParamStore& params);
CheckpointData decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint(const std::filesystem::path& path, const std::string& magic,
                      const std::vector<ConfigEntry>& config, const ParamStore& params);
CheckpointData read_checkpoint(const std::filesystem::path& path);

/// Copies stored arrays into `params` by position, checking names and shapes.
void assign_params(const CheckpointData& data, ParamStore& params);

}  // namespace stressnet
