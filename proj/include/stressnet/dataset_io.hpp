#pragma once

// On-disk dataset layout, one directory per simulation:
//
//   sim_0000/meta.json              seed, failure_step (null if none), steps, rows, cols, simulator config
//   sim_0000/stress.csv             t,sigma_xx,sigma_yy   raw Pa, %.17g
//   sim_0000/damage/frame_0000.pgm  binary P5, 128 wide x 192 tall, maxval 255, damaged = 255

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stressnet/fracture_sim.hpp"

namespace stressnet {

std::string sim_dir_name(std::size_t index);

void write_pgm(const std::filesystem::path& path, const BinaryFrame& frame);
/// Any non-zero pixel reads back as damaged. Throws DataError on a malformed file.
BinaryFrame read_pgm(const std::filesystem::path& path);

void write_simulation(const std::filesystem::path& dir, const SimulationRecord& record, const SimConfig& config);
SimulationRecord read_simulation(const std::filesystem::path& dir);

/// Writes sim_0000 .. sim_{n-1} under root.
void write_dataset(const std::filesystem::path& root, const std::vector<SimulationRecord>& records,
                   const SimConfig& config);

/// Sorted sim_#### directories under root; DataError if none.
std::vector<std::filesystem::path> list_simulations(const std::filesystem::path& root);

struct StressTable {
  std::vector<double> xx;
  std::vector<double> yy;
};
StressTable read_stress_csv(const std::filesystem::path& path);

struct SimMeta {
  std::uint64_t seed = 0;
  std::optional<int> failure_step;
  int steps = 0;
  int rows = 0;
  int cols = 0;
};
SimMeta read_meta(const std::filesystem::path& path);

std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace stressnet
