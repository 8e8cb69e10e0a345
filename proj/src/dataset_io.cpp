#include "stressnet/dataset_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "stressnet/errors.hpp"

namespace stressnet {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sim_dir_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sim_%04zu", index);
  return buf;
}

namespace {

std::string frame_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04d.pgm", t);
  return buf;
}

json config_json(const SimConfig& c) {
  return {{"width_m", c.width_m},
          {"length_m", c.length_m},
          {"rows", c.rows},
          {"cols", c.cols},
          {"cell_px", c.cell_px},
          {"n_initial_cracks", c.n_initial_cracks},
          {"crack_length_m", c.crack_length_m},
          {"steps", c.steps},
          {"toughness", c.toughness},
          {"toughness_noise", c.toughness_noise},
          {"toughness_spread", c.toughness_spread},
          {"load_rate", c.load_rate},
          {"tip_radius_px", c.tip_radius_px},
          {"kink_probability", c.kink_probability},
          {"turn_rate", c.turn_rate},
          {"drop_min", c.drop_min},
          {"drop_max", c.drop_max},
          {"drop_recovery", c.drop_recovery},
          {"post_failure_decay", c.post_failure_decay},
          {"xx_ratio", c.xx_ratio},
          {"xx_concentration_exponent", c.xx_concentration_exponent},
          {"fluctuation", c.fluctuation},
          {"fluctuation_memory", c.fluctuation_memory}};
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

std::string read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_pgm(const fs::path& path, const BinaryFrame& frame) {
  auto out = open_out(path);
  out << "P5\n" << frame.cols << ' ' << frame.rows << "\n255\n";
  std::string body(frame.pixels.size(), '\0');
  for (std::size_t i = 0; i < body.size(); ++i) body[i] = frame.pixels[i] ? static_cast<char>(0xFF) : '\0';
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

BinaryFrame read_pgm(const fs::path& path) {
  const std::string bytes = read_file_bytes(path);
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (token() != "P5") throw DataError(path.string() + ": not a binary PGM");
  const int w = std::atoi(token().c_str());
  const int h = std::atoi(token().c_str());
  const int maxval = std::atoi(token().c_str());
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) throw DataError(path.string() + ": bad PGM header");
  ++pos;  // single whitespace before the raster
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() != pos + n) throw DataError(path.string() + ": PGM raster size mismatch");
  BinaryFrame f(h, w);
  for (std::size_t i = 0; i < n; ++i) f.pixels[i] = bytes[pos + i] != '\0' ? 1 : 0;
  return f;
}

void write_simulation(const fs::path& dir, const SimulationRecord& rec, const SimConfig& config) {
  fs::create_directories(dir / "damage");
  json meta{{"seed", rec.seed},
            {"failure_step", rec.failure_step ? json(*rec.failure_step) : json(nullptr)},
            {"steps", rec.steps()},
            {"rows", rec.rows},
            {"cols", rec.cols},
            {"config", config_json(config)}};
  open_out(dir / "meta.json") << meta.dump(2) << '\n';

  auto csv = open_out(dir / "stress.csv");
  csv << "t,sigma_xx,sigma_yy\n";
  char buf[96];
  for (int t = 0; t < rec.steps(); ++t) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", t, rec.stress_xx[static_cast<std::size_t>(t)],
                  rec.stress_yy[static_cast<std::size_t>(t)]);
    csv << buf;
  }
  for (int t = 0; t < rec.steps(); ++t) write_pgm(dir / "damage" / frame_name(t), rec.frame(t));
}

StressTable read_stress_csv(const fs::path& path) {
  std::istringstream in(read_file_bytes(path));
  std::string line;
  if (!std::getline(in, line) || line != "t,sigma_xx,sigma_yy") throw DataError(path.string() + ": bad header");
  StressTable s;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const char* p = line.c_str();
    char* end = nullptr;
    const long t = std::strtol(p, &end, 10);
    if (*end != ',' || t != static_cast<long>(s.xx.size())) throw DataError(path.string() + ": bad row '" + line + "'");
    const double xx = std::strtod(end + 1, &end);
    if (*end != ',') throw DataError(path.string() + ": bad row '" + line + "'");
    const double yy = std::strtod(end + 1, &end);
    if (*end != '\0') throw DataError(path.string() + ": bad row '" + line + "'");
    s.xx.push_back(xx);
    s.yy.push_back(yy);
  }
  if (s.xx.empty()) throw DataError(path.string() + ": no rows");
  return s;
}

SimMeta read_meta(const fs::path& path) {
  try {
    const json j = json::parse(read_file_bytes(path));
    SimMeta m;
    m.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("failure_step").is_null()) m.failure_step = j.at("failure_step").get<int>();
    m.steps = j.at("steps").get<int>();
    m.rows = j.at("rows").get<int>();
    m.cols = j.at("cols").get<int>();
    return m;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

SimulationRecord read_simulation(const fs::path& dir) {
  const SimMeta meta = read_meta(dir / "meta.json");
  StressTable s = read_stress_csv(dir / "stress.csv");
  if (static_cast<int>(s.yy.size()) != meta.steps) throw DataError(dir.string() + ": stress rows disagree with meta");
  SimulationRecord rec;
  rec.seed = meta.seed;
  rec.rows = meta.rows;
  rec.cols = meta.cols;
  rec.failure_step = meta.failure_step;
  rec.stress_xx = std::move(s.xx);
  rec.stress_yy = std::move(s.yy);
  rec.onset.assign(static_cast<std::size_t>(meta.rows) * meta.cols, SimulationRecord::kNever);
  for (int t = 0; t < meta.steps; ++t) {
    const BinaryFrame f = read_pgm(dir / "damage" / frame_name(t));
    if (f.rows != meta.rows || f.cols != meta.cols) throw DataError(dir.string() + ": frame shape disagrees with meta");
    for (std::size_t i = 0; i < f.pixels.size(); ++i) {
      if (f.pixels[i] && rec.onset[i] == SimulationRecord::kNever) rec.onset[i] = static_cast<std::uint16_t>(t);
      if (!f.pixels[i] && rec.onset[i] != SimulationRecord::kNever)
        throw DataError(dir.string() + ": damage heals at step " + std::to_string(t));
    }
  }
  return rec;
}

void write_dataset(const fs::path& root, const std::vector<SimulationRecord>& records, const SimConfig& config) {
  for (std::size_t i = 0; i < records.size(); ++i) write_simulation(root / sim_dir_name(i), records[i], config);
}

std::vector<fs::path> list_simulations(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("data directory " + root.string() + " does not exist");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(root)) {
    const auto name = e.path().filename().string();
    if (e.is_directory() && name.rfind("sim_", 0) == 0) out.push_back(e.path());
  }
  if (out.empty()) throw DataError("no sim_#### directories under " + root.string());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace stressnet
