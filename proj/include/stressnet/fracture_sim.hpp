#pragma once

// Toy brittle-fracture generator. A 2 m x 3 m plate (128 x 192 px, square
// pixels of 15.625 mm) under uniaxial tension along the long axis is seeded
// with 20 cracks of 0.2 m, one per randomly chosen 32x32 px cell, oriented at
// 0, 60 or 120 degrees. Each step the applied load ramps linearly; every crack
// tip whose stress intensity (plus noise) exceeds the toughness advances one
// pixel, turning gradually toward the direction perpendicular to the load.
// Tips that touch another crack coalesce with it and shed load. The run fails
// when an 8-connected crack joins the left and right edges; after that the
// damage is frozen and the stresses decay geometrically.

#include <cstdint>
#include <optional>
#include <vector>

#include "stressnet/rng.hpp"

namespace stressnet {

struct SimConfig {
  double width_m = 2.0;
  double length_m = 3.0;
  int rows = 192;
  int cols = 128;
  int cell_px = 32;
  int n_initial_cracks = 20;
  double crack_length_m = 0.20;
  int steps = 228;

  double toughness = 7.0e6;        // K_c, Pa sqrt(m); +inf disables growth
  double toughness_noise = 0.10;   // std of the additive K noise, as a fraction of K_c
  double toughness_spread = 0.2;   // log-std of the per-sample K_c multiplier
  double load_rate = 1.0e5;        // Pa per step
  double tip_radius_px = 2.0;      // rho in the concentration factor 1 + 2 sqrt(a / rho)
  double kink_probability = 0.2;   // chance of a +-1 px sideways kink per advance
  double turn_rate = 0.15;         // fraction of the angle to horizontal removed per advance
  double drop_min = 0.7;           // load-shedding factor range on coalescence
  double drop_max = 0.9;
  double drop_recovery = 0.1;      // per-step relaxation of the shedding factor back to 1
  double post_failure_decay = 0.95;
  double xx_ratio = 0.35;          // transverse channel scale relative to the load axis
  double xx_concentration_exponent = 0.75;
  double fluctuation = 0.02;       // std of the AR(1) multiplicative stress noise
  double fluctuation_memory = 0.5;

  /// Throws DomainError on inconsistent geometry or ranges.
  void validate() const;

  double pixel_pitch_m() const { return width_m / cols; }
  int crack_length_px() const;
  int cell_rows() const { return rows / cell_px; }
  int cell_cols() const { return cols / cell_px; }
};

struct Pixel {
  int row = 0;
  int col = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

struct BinaryFrame {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 0 intact, 1 damaged

  BinaryFrame() = default;
  BinaryFrame(int r, int c) : rows(r), cols(c), pixels(static_cast<std::size_t>(r) * c, 0) {}

  std::uint8_t at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * cols + c]; }
  std::uint8_t& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t damaged_count() const;

  friend bool operator==(const BinaryFrame&, const BinaryFrame&) = default;
};

/// True when one 8-connected damaged component touches column 0 and the last column.
bool spans_horizontally(const BinaryFrame& frame);

struct SeededCrack {
  int cell = 0;             // index into the 6 x 4 cell grid, row-major
  int orientation_deg = 0;  // 0, 60 or 120
  Pixel center;
  std::vector<Pixel> pixels;
};

struct InitialDamage {
  BinaryFrame frame;
  std::vector<SeededCrack> cracks;
};

/// Draws 20 distinct cells and rasterizes one straight crack in each, kept
/// at least one pixel inside its cell so that no two cracks touch.
InitialDamage seed_cracks(Rng& rng, const SimConfig& config);

struct SimulationRecord {
  std::uint64_t seed = 0;
  int rows = 0;
  int cols = 0;
  /// Step at which each pixel became damaged; kNever if it never did.
  std::vector<std::uint16_t> onset;
  std::vector<double> stress_xx;
  std::vector<double> stress_yy;
  std::optional<int> failure_step;

  static constexpr std::uint16_t kNever = 0xFFFF;

  int steps() const { return static_cast<int>(stress_yy.size()); }
  BinaryFrame frame(int t) const;
  const std::vector<double>& stress(bool transverse) const { return transverse ? stress_xx : stress_yy; }
};

struct StepOutput {
  const BinaryFrame* frame = nullptr;
  double stress_xx = 0.0;
  double stress_yy = 0.0;
};

class FractureSimulator {
 public:
  FractureSimulator(const SimConfig& config, std::uint64_t seed);

  /// Advances to step t, which must equal next_step().
  StepOutput step(int t);

  int next_step() const { return next_; }
  const BinaryFrame& frame() const { return frame_; }
  const InitialDamage& initial() const { return initial_; }
  std::optional<int> failure_step() const { return failure_step_; }
  int coalescences() const { return coalescences_; }

 private:
  struct Tip {
    double x = 0.0;  // column
    double y = 0.0;  // row
    double angle = 0.0;
    bool active = true;
  };
  struct Crack {
    Tip tips[2];
  };

  int find(int c);
  void unite(int a, int b);
  double cluster_length_px(int crack);
  bool advance_tip(int crack, Tip& tip, int t);
  bool draw_pixel(int crack, int r, int c);

  SimConfig cfg_;
  Rng rng_;
  InitialDamage initial_;
  BinaryFrame frame_;
  std::vector<int> owner_;  // crack id per pixel, -1 intact
  std::vector<Crack> cracks_;
  std::vector<int> parent_;
  std::vector<int> length_px_;  // pixel count per crack id
  int next_ = 0;
  std::optional<int> failure_step_;
  int coalescences_ = 0;
  double toughness_ = 0.0;  // this sample's K_c
  double shedding_ = 1.0;
  double noise_xx_ = 0.0;
  double noise_yy_ = 0.0;
  double base_xx_ = 0.0;
  double base_yy_ = 0.0;

  friend SimulationRecord simulate(const SimConfig& config, std::uint64_t seed);
};

SimulationRecord simulate(const SimConfig& config, std::uint64_t seed);

/// Records with seeds base_seed + i, i = 0 .. n_sims - 1.
std::vector<SimulationRecord> generate_dataset(int n_sims, std::uint64_t base_seed, const SimConfig& config = {});

}  // namespace stressnet
