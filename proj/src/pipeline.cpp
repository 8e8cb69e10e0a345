#include "stressnet/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "stressnet/dataset_io.hpp"
#include "stressnet/errors.hpp"

namespace stressnet {

namespace fs = std::filesystem;

BinaryFrame downsample_frame(const BinaryFrame& frame) {
  if (frame.rows != kRawRows || frame.cols != kRawCols || frame.pixels.size() != std::size_t{kRawRows} * kRawCols)
    throw ShapeError("downsample expects a 192x128 frame, got " + std::to_string(frame.rows) + "x" +
                     std::to_string(frame.cols));
  BinaryFrame out(kFrameRows, kFrameCols);
  for (int r = 0; r < kRawRows; ++r)
    for (int c = 0; c < kRawCols; ++c)
      if (frame.at(r, c)) out.at(r / kDownsample, c / kDownsample) = 1;
  return out;
}

PreparedSim prepare(const SimulationRecord& record, std::string name) {
  PreparedSim s;
  s.name = std::move(name);
  s.seed = record.seed;
  s.failure_step = record.failure_step;
  s.stress_xx = record.stress_xx;
  s.stress_yy = record.stress_yy;
  s.frames.reserve(record.stress_yy.size());
  for (int t = 0; t < record.steps(); ++t) s.frames.push_back(downsample_frame(record.frame(t)));
  return s;
}

Tensor damage_window(std::span<const BinaryFrame> frames, std::size_t start, std::size_t dt) {
  if (dt == 0 || start + dt > frames.size())
    throw DataError("damage window " + std::to_string(start) + "+" + std::to_string(dt) + " exceeds " +
                    std::to_string(frames.size()) + " frames");
  const auto rows = static_cast<std::size_t>(frames[start].rows);
  const auto cols = static_cast<std::size_t>(frames[start].cols);
  Tensor w({rows, cols, dt});
  for (std::size_t k = 0; k < dt; ++k) {
    const BinaryFrame& f = frames[start + k];
    if (static_cast<std::size_t>(f.rows) != rows || static_cast<std::size_t>(f.cols) != cols)
      throw ShapeError("damage frames differ in shape");
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) w(r, c, k) = f.at(static_cast<int>(r), static_cast<int>(c));
  }
  return w;
}

std::size_t window_count(std::size_t steps, std::size_t dt) {
  if (dt == 0 || steps < dt + 1)
    throw DataError("series of " + std::to_string(steps) + " steps is too short for window " + std::to_string(dt));
  return steps - dt;
}

std::vector<WindowSample> make_training_windows(std::span<const double> normalized, std::span<const BinaryFrame> frames,
                                                std::size_t dt) {
  const std::size_t n = window_count(normalized.size(), dt);
  if (frames.size() != normalized.size())
    throw DataError("stress series and damage frames differ in length");
  std::vector<WindowSample> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    WindowSample s;
    s.stress.assign(normalized.begin() + static_cast<std::ptrdiff_t>(k),
                    normalized.begin() + static_cast<std::ptrdiff_t>(k + dt));
    s.damage = damage_window(frames, k, dt);
    s.target = normalized[k + dt];
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<WindowSample> make_training_windows(const PreparedSim& sim, Channel channel,
                                                const NormalizationStats& stats, std::size_t dt) {
  const auto norm = normalize(sim.stress(channel), stats);
  return make_training_windows(norm, sim.frames, dt);
}

DatasetSplit split_dataset(std::size_t n_records, std::size_t n_train, Rng& rng) {
  if (n_train == 0 || n_train > n_records)
    throw DataError("cannot take " + std::to_string(n_train) + " training sims from " + std::to_string(n_records));
  std::vector<std::size_t> idx(n_records);
  for (std::size_t i = 0; i < n_records; ++i) idx[i] = i;
  rng.shuffle(std::span<std::size_t>(idx));
  DatasetSplit s;
  s.train_pool.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(s.train_pool.begin(), s.train_pool.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

EpochSplit sample_validation(std::span<const std::size_t> pool, std::size_t n_val, Rng& rng) {
  if (pool.empty() || (n_val > 0 && n_val >= pool.size()))
    throw DataError("cannot hold out " + std::to_string(n_val) + " of " + std::to_string(pool.size()) + " sims");
  std::vector<std::size_t> pos(pool.size());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
  // partial Fisher-Yates: the last n_val slots become the validation picks
  for (std::size_t i = pos.size(); i > pos.size() - n_val; --i) std::swap(pos[i - 1], pos[rng.below(i)]);
  std::vector<char> held(pool.size(), 0);
  EpochSplit s;
  for (std::size_t i = pos.size() - n_val; i < pos.size(); ++i) {
    held[pos[i]] = 1;
    s.validation.push_back(pool[pos[i]]);
  }
  std::sort(s.validation.begin(), s.validation.end());
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (!held[i]) s.train.push_back(pool[i]);
  return s;
}

NormalizationStats fit_stats(std::span<const PreparedSim> sims, std::span<const std::size_t> indices, Channel channel) {
  std::vector<double> all;
  for (std::size_t i : indices) {
    const auto& v = sims[i].stress(channel);
    all.insert(all.end(), v.begin(), v.end());
  }
  if (all.empty()) throw DataError("no stress values to fit normalization");
  return NormalizationStats::from_values(all);
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xCBF29CE484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001B3ULL;

void fnv1a(std::uint64_t& h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
}

}  // namespace

std::uint64_t dataset_hash(std::span<const fs::path> sim_dirs) {
  std::uint64_t h = kFnvOffset;
  for (const auto& d : sim_dirs) {
    fnv1a(h, d.filename().string());
    fnv1a(h, read_file_bytes(d / "meta.json"));
    fnv1a(h, read_file_bytes(d / "stress.csv"));
  }
  return h;
}

void write_frame_cache(const fs::path& path, std::span<const BinaryFrame> frames) {
  std::string bytes(kFrameCacheMagic, 8);
  for (const auto& f : frames) {
    if (f.rows != kFrameRows || f.cols != kFrameCols) throw ShapeError("cache frames must be 24x16");
    bytes.append(reinterpret_cast<const char*>(f.pixels.data()), f.pixels.size());
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::vector<BinaryFrame> read_frame_cache(const fs::path& path) {
  const std::string bytes = read_file_bytes(path);
  constexpr std::size_t per = std::size_t{kFrameRows} * kFrameCols;
  if (bytes.size() < 8 || bytes.compare(0, 8, kFrameCacheMagic) != 0)
    throw DataError(path.string() + ": not a frame cache");
  if ((bytes.size() - 8) % per != 0) throw DataError(path.string() + ": truncated frame cache");
  std::vector<BinaryFrame> frames((bytes.size() - 8) / per, BinaryFrame(kFrameRows, kFrameCols));
  for (std::size_t t = 0; t < frames.size(); ++t)
    for (std::size_t i = 0; i < per; ++i) {
      const auto v = static_cast<unsigned char>(bytes[8 + t * per + i]);
      if (v > 1) throw DataError(path.string() + ": frame cache holds non-binary values");
      frames[t].pixels[i] = v;
    }
  return frames;
}

std::vector<PreparedSim> load_prepared(const fs::path& root, bool use_cache) {
  const auto dirs = list_simulations(root);
  fs::path cache_dir;
  if (use_cache) {
    char hex[20];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(dataset_hash(dirs)));
    cache_dir = root / ".cache" / hex;
  }
  std::vector<PreparedSim> out;
  out.reserve(dirs.size());
  for (const auto& d : dirs) {
    const SimMeta meta = read_meta(d / "meta.json");
    StressTable st = read_stress_csv(d / "stress.csv");
    if (static_cast<int>(st.yy.size()) != meta.steps) throw DataError(d.string() + ": stress rows disagree with meta");
    PreparedSim s;
    s.name = d.filename().string();
    s.seed = meta.seed;
    s.failure_step = meta.failure_step;
    s.stress_xx = std::move(st.xx);
    s.stress_yy = std::move(st.yy);
    const fs::path cached = cache_dir / (s.name + ".snds");
    if (use_cache && fs::exists(cached)) {
      s.frames = read_frame_cache(cached);
      if (s.frames.size() != s.steps()) throw DataError(cached.string() + ": frame count disagrees with meta");
    } else {
      const SimulationRecord rec = read_simulation(d);
      for (int t = 0; t < rec.steps(); ++t) s.frames.push_back(downsample_frame(rec.frame(t)));
      if (use_cache) {
        fs::create_directories(cache_dir);
        write_frame_cache(cached, s.frames);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace stressnet
