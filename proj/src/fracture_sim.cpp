#include "stressnet/fracture_sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

#include "stressnet/errors.hpp"

namespace stressnet {

namespace {

constexpr int kOrientations[3] = {0, 60, 120};

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

/// Integer line from a to b inclusive, 8-connected.
std::vector<Pixel> bresenham(Pixel a, Pixel b) {
  std::vector<Pixel> out;
  int x0 = a.col, y0 = a.row;
  const int x1 = b.col, y1 = b.row;
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    out.push_back({y0, x0});
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
  return out;
}

int round_px(double v) { return static_cast<int>(std::lround(v)); }

}  // namespace

void SimConfig::validate() const {
  if (rows <= 0 || cols <= 0 || cell_px <= 0 || rows % cell_px != 0 || cols % cell_px != 0)
    throw DomainError("grid must divide evenly into cells");
  if (std::abs(width_m / cols - length_m / rows) > 1e-12) throw DomainError("pixels must be square");
  if (n_initial_cracks < 1 || n_initial_cracks > cell_rows() * cell_cols())
    throw DomainError("more initial cracks than cells");
  if (crack_length_px() + 2 > cell_px) throw DomainError("initial crack does not fit in a cell");
  if (steps < 1 || steps >= SimulationRecord::kNever) throw DomainError("step count out of range");
  if (!(toughness_spread >= 0.0)) throw DomainError("toughness spread must be non-negative");
  if (!(toughness >= 0.0) || load_rate <= 0.0 || tip_radius_px <= 0.0) throw DomainError("bad physical constants");
  if (!(0.0 < drop_min && drop_min <= drop_max && drop_max <= 1.0)) throw DomainError("bad load-shedding range");
  if (!(0.0 < post_failure_decay && post_failure_decay <= 1.0)) throw DomainError("bad post-failure decay");
  if (fluctuation < 0.0 || fluctuation >= 0.25) throw DomainError("fluctuation must lie in [0, 0.25)");
}

int SimConfig::crack_length_px() const { return round_px(crack_length_m / pixel_pitch_m()); }

std::size_t BinaryFrame::damaged_count() const {
  return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), std::uint8_t{1}));
}

bool spans_horizontally(const BinaryFrame& f) {
  if (f.cols == 0) return false;
  std::vector<std::uint8_t> seen(f.pixels.size(), 0);
  std::deque<Pixel> queue;
  for (int r = 0; r < f.rows; ++r)
    if (f.at(r, 0)) {
      seen[static_cast<std::size_t>(r) * f.cols] = 1;
      queue.push_back({r, 0});
    }
  while (!queue.empty()) {
    const Pixel p = queue.front();
    queue.pop_front();
    if (p.col == f.cols - 1) return true;
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        const int r = p.row + dr, c = p.col + dc;
        if (r < 0 || r >= f.rows || c < 0 || c >= f.cols || !f.at(r, c)) continue;
        auto& s = seen[static_cast<std::size_t>(r) * f.cols + c];
        if (!s) {
          s = 1;
          queue.push_back({r, c});
        }
      }
  }
  return false;
}

InitialDamage seed_cracks(Rng& rng, const SimConfig& cfg) {
  cfg.validate();
  const int n_cells = cfg.cell_rows() * cfg.cell_cols();
  std::vector<int> cells(static_cast<std::size_t>(n_cells));
  for (int i = 0; i < n_cells; ++i) cells[static_cast<std::size_t>(i)] = i;
  // Partial Fisher-Yates: the first n entries are a uniform draw without replacement.
  for (int i = 0; i < cfg.n_initial_cracks; ++i) {
    const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_cells - i)));
    std::swap(cells[static_cast<std::size_t>(i)], cells[static_cast<std::size_t>(j)]);
  }
  cells.resize(static_cast<std::size_t>(cfg.n_initial_cracks));
  std::sort(cells.begin(), cells.end());

  const double half = cfg.crack_length_m / cfg.pixel_pitch_m() / 2.0;
  InitialDamage out{BinaryFrame(cfg.rows, cfg.cols), {}};
  for (int cell : cells) {
    SeededCrack crack;
    crack.cell = cell;
    crack.orientation_deg = kOrientations[rng.below(3)];
    const double th = deg2rad(crack.orientation_deg);
    const int hx = round_px(half * std::cos(th));
    const int hy = round_px(half * std::sin(th));

    const int r0 = (cell / cfg.cell_cols()) * cfg.cell_px;
    const int c0 = (cell % cfg.cell_cols()) * cfg.cell_px;
    // Keep every pixel within [start + 1, start + cell - 2] so neighbouring
    // cells' cracks are never 8-adjacent.
    const int lo_c = c0 + 1 + std::abs(hx), hi_c = c0 + cfg.cell_px - 2 - std::abs(hx);
    const int lo_r = r0 + 1 + std::abs(hy), hi_r = r0 + cfg.cell_px - 2 - std::abs(hy);
    crack.center = {lo_r + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi_r - lo_r + 1))),
                    lo_c + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi_c - lo_c + 1)))};

    const Pixel a{crack.center.row + hy, crack.center.col - hx};
    const Pixel b{crack.center.row - hy, crack.center.col + hx};
    for (const Pixel& p : bresenham(a, b)) {
      if (p.row <= r0 || p.row >= r0 + cfg.cell_px - 1 || p.col <= c0 || p.col >= c0 + cfg.cell_px - 1) continue;
      crack.pixels.push_back(p);
      out.frame.at(p.row, p.col) = 1;
    }
    out.cracks.push_back(std::move(crack));
  }
  return out;
}

BinaryFrame SimulationRecord::frame(int t) const {
  if (t < 0 || t >= steps()) throw DataError("frame index " + std::to_string(t) + " out of range");
  BinaryFrame f(rows, cols);
  const auto tt = static_cast<std::uint16_t>(t);
  for (std::size_t i = 0; i < onset.size(); ++i) f.pixels[i] = onset[i] <= tt ? 1 : 0;
  return f;
}

// ---------------------------------------------------------------------------

FractureSimulator::FractureSimulator(const SimConfig& config, std::uint64_t seed) : cfg_(config), rng_(seed) {
  cfg_.validate();
  initial_ = seed_cracks(rng_, cfg_);
  toughness_ = cfg_.toughness;
  if (cfg_.toughness_spread > 0.0 && std::isfinite(toughness_))
    toughness_ *= std::exp(cfg_.toughness_spread * rng_.normal());
  frame_ = initial_.frame;
  owner_.assign(frame_.pixels.size(), -1);
  const auto n = initial_.cracks.size();
  cracks_.resize(n);
  parent_.resize(n);
  length_px_.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& sc = initial_.cracks[i];
    parent_[i] = static_cast<int>(i);
    for (const Pixel& p : sc.pixels) owner_[static_cast<std::size_t>(p.row) * cfg_.cols + p.col] = static_cast<int>(i);
    length_px_[i] = static_cast<int>(sc.pixels.size());
    const double th = deg2rad(sc.orientation_deg);
    // Tips sit on the segment end points; angle is measured with rows pointing up.
    const Pixel& first = sc.pixels.front();
    const Pixel& last = sc.pixels.back();
    const double ux = std::cos(th), uy = -std::sin(th);
    const bool last_is_forward = (last.col - first.col) * ux + (last.row - first.row) * uy >= 0.0;
    const Pixel& fwd = last_is_forward ? last : first;
    const Pixel& bwd = last_is_forward ? first : last;
    cracks_[i].tips[0] = {static_cast<double>(fwd.col), static_cast<double>(fwd.row), th, true};
    cracks_[i].tips[1] = {static_cast<double>(bwd.col), static_cast<double>(bwd.row),
                          th > 0.0 ? th - std::numbers::pi : th + std::numbers::pi, true};
  }
}

int FractureSimulator::find(int c) {
  while (parent_[static_cast<std::size_t>(c)] != c) {
    parent_[static_cast<std::size_t>(c)] = parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(c)])];
    c = parent_[static_cast<std::size_t>(c)];
  }
  return c;
}

void FractureSimulator::unite(int a, int b) {
  a = find(a);
  b = find(b);
  if (a != b) parent_[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
}

double FractureSimulator::cluster_length_px(int crack) {
  const int root = find(crack);
  int total = 0;
  for (std::size_t i = 0; i < length_px_.size(); ++i)
    if (find(static_cast<int>(i)) == root) total += length_px_[i];
  return total;
}

// Returns false when the tip stops (edge reached or coalescence).
bool FractureSimulator::draw_pixel(int crack, int r, int c) {
  if (r < 0 || r >= cfg_.rows || c < 0 || c >= cfg_.cols) return false;
  const std::size_t idx = static_cast<std::size_t>(r) * cfg_.cols + c;
  const int own = find(crack);
  const int o = owner_[idx];
  if (o >= 0) {
    if (find(o) == own) return true;
    unite(crack, o);
    shedding_ *= rng_.uniform(cfg_.drop_min, cfg_.drop_max);
    ++coalescences_;
    return false;
  }
  owner_[idx] = crack;
  frame_.pixels[idx] = 1;
  ++length_px_[static_cast<std::size_t>(crack)];
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc) {
      const int rr = r + dr, cc = c + dc;
      if (rr < 0 || rr >= cfg_.rows || cc < 0 || cc >= cfg_.cols) continue;
      const int n = owner_[static_cast<std::size_t>(rr) * cfg_.cols + cc];
      if (n >= 0 && find(n) != own) {
        unite(crack, n);
        shedding_ *= rng_.uniform(cfg_.drop_min, cfg_.drop_max);
        ++coalescences_;
        return false;
      }
    }
  return true;
}

bool FractureSimulator::advance_tip(int crack, Tip& tip, int t) {
  if (!tip.active || !std::isfinite(toughness_)) return false;
  const double sigma_app = cfg_.load_rate * (t + 1);
  const double a_m = cluster_length_px(crack) / 2.0 * cfg_.pixel_pitch_m();
  const double k = sigma_app * std::sqrt(std::numbers::pi * a_m);
  const double noise = cfg_.toughness_noise * toughness_ * rng_.normal();
  if (!(k + noise > toughness_)) return false;

  const double target = std::cos(tip.angle) >= 0.0 ? 0.0 : (tip.angle > 0.0 ? std::numbers::pi : -std::numbers::pi);
  tip.angle += cfg_.turn_rate * (target - tip.angle);
  double dx = std::cos(tip.angle), dy = -std::sin(tip.angle);
  const double m = std::max(std::abs(dx), std::abs(dy));
  dx /= m;
  dy /= m;
  double nx = tip.x + dx, ny = tip.y + dy;
  if (rng_.bernoulli(cfg_.kink_probability)) {
    const double side = rng_.bernoulli(0.5) ? 1.0 : -1.0;
    if (std::abs(dx) >= std::abs(dy))
      ny += side;
    else
      nx += side;
  }

  const Pixel from{round_px(tip.y), round_px(tip.x)};
  const Pixel to{round_px(ny), round_px(nx)};
  tip.x = nx;
  tip.y = ny;
  const auto line = bresenham(from, to);
  for (std::size_t i = 1; i < line.size(); ++i) {
    if (!draw_pixel(crack, line[i].row, line[i].col)) {
      tip.active = false;
      break;
    }
  }
  return true;
}

StepOutput FractureSimulator::step(int t) {
  if (t != next_) throw DomainError("simulator expected step " + std::to_string(next_) + ", got " + std::to_string(t));
  if (t >= cfg_.steps) throw DomainError("step beyond configured horizon");

  // The reported stress reflects the damage left by the previous step; growth
  // during this step shows up in the frame now and in the stress next step.
  shedding_ += cfg_.drop_recovery * (1.0 - shedding_);
  const double phi = cfg_.fluctuation_memory;
  const double innov = cfg_.fluctuation * std::sqrt(1.0 - phi * phi);
  noise_xx_ = std::clamp(phi * noise_xx_ + innov * rng_.normal(), -0.5, 0.5);
  noise_yy_ = std::clamp(phi * noise_yy_ + innov * rng_.normal(), -0.5, 0.5);

  if (!failure_step_) {
    double a_max = 0.0;
    for (std::size_t i = 0; i < cracks_.size(); ++i)
      if (find(static_cast<int>(i)) == static_cast<int>(i))
        a_max = std::max(a_max, cluster_length_px(static_cast<int>(i)) / 2.0);
    const double sigma_app = cfg_.load_rate * (t + 1);
    const double conc = 1.0 + 2.0 * std::sqrt(a_max / cfg_.tip_radius_px);
    base_yy_ = sigma_app * conc * shedding_;
    base_xx_ = cfg_.xx_ratio * sigma_app * std::pow(conc, cfg_.xx_concentration_exponent) * shedding_;

    bool grew = false;
    for (std::size_t i = 0; i < cracks_.size(); ++i)
      for (Tip& tip : cracks_[i].tips) grew |= advance_tip(static_cast<int>(i), tip, t);
    if (grew && spans_horizontally(frame_)) failure_step_ = t;
  } else {
    base_yy_ *= cfg_.post_failure_decay;
    base_xx_ *= cfg_.post_failure_decay;
  }
  ++next_;
  return {&frame_, base_xx_ * (1.0 + noise_xx_), base_yy_ * (1.0 + noise_yy_)};
}

SimulationRecord simulate(const SimConfig& config, std::uint64_t seed) {
  FractureSimulator sim(config, seed);
  SimulationRecord rec;
  rec.seed = seed;
  rec.rows = config.rows;
  rec.cols = config.cols;
  rec.onset.assign(sim.frame_.pixels.size(), SimulationRecord::kNever);
  for (std::size_t i = 0; i < rec.onset.size(); ++i)
    if (sim.frame_.pixels[i]) rec.onset[i] = 0;
  rec.stress_xx.reserve(static_cast<std::size_t>(config.steps));
  rec.stress_yy.reserve(static_cast<std::size_t>(config.steps));
  for (int t = 0; t < config.steps; ++t) {
    const auto out = sim.step(t);
    for (std::size_t i = 0; i < rec.onset.size(); ++i)
      if (out.frame->pixels[i] && rec.onset[i] == SimulationRecord::kNever) rec.onset[i] = static_cast<std::uint16_t>(t);
    rec.stress_xx.push_back(out.stress_xx);
    rec.stress_yy.push_back(out.stress_yy);
  }
  rec.failure_step = sim.failure_step();
  return rec;
}

std::vector<SimulationRecord> generate_dataset(int n_sims, std::uint64_t base_seed, const SimConfig& config) {
  if (n_sims < 1) throw DomainError("n_sims must be at least 1");
  std::vector<SimulationRecord> out;
  out.reserve(static_cast<std::size_t>(n_sims));
  for (int i = 0; i < n_sims; ++i) out.push_back(simulate(config, base_seed + static_cast<std::uint64_t>(i)));
  return out;
}

}  // namespace stressnet
