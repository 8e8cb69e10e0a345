#include "stressnet/model.hpp"

#include "stressnet/checkpoint.hpp"
#include "stressnet/errors.hpp"

namespace stressnet {

void StressNetConfig::validate() const {
  if (delta_t == 0 || feature_dim == 0 || hidden_dim == 0) throw ShapeError("StressNet extents must be positive");
  (void)feature_map_extent();
}

std::pair<std::size_t, std::size_t> StressNetConfig::feature_map_extent() const {
  std::size_t h = frame_rows, w = frame_cols;
  for (const auto& b : conv_blocks) {
    if (b.kernel == 0 || b.kernel > h || b.kernel > w)
      throw ShapeError("conv kernel " + std::to_string(b.kernel) + " exceeds feature map " + std::to_string(h) + "x" +
                       std::to_string(w));
    h = h - b.kernel + 1;
    w = w - b.kernel + 1;
    if (b.pool == 0 || h % b.pool != 0 || w % b.pool != 0)
      throw ShapeError("pool " + std::to_string(b.pool) + " does not divide feature map " + std::to_string(h) + "x" +
                       std::to_string(w));
    h /= b.pool;
    w /= b.pool;
  }
  if (h == 0 || w == 0) throw ShapeError("conv blocks leave no spatial extent");
  return {h, w};
}

StressNetConfig StressNetConfig::desk() {
  StressNetConfig c;
  c.feature_dim = 16;
  c.hidden_dim = 16;
  return c;
}

StressNet::StressNet(StressNetConfig config, Channel ch, std::uint64_t seed) : channel(ch), config_(std::move(config)) {
  config_.validate();
  const std::size_t D = config_.feature_dim, H = config_.hidden_dim, T = config_.delta_t;
  stress_branch = BiLstm("stress", 1, H, D, Activation::identity);
  for (std::size_t i = 0; i < config_.conv_blocks.size(); ++i) {
    convs.emplace_back("conv" + std::to_string(i), config_.conv_blocks[i].kernel, T);
    pools.emplace_back(config_.conv_blocks[i].pool, PoolKind::max);
  }
  const auto [fh, fw] = config_.feature_map_extent();
  damage_fc = FcLayer("damage_fc", D, fh * fw);
  damage_branch = BiLstm("damage", D, H, D, Activation::identity);
  fusion = BiLstm("fusion", 2 * D, H, D, Activation::identity);
  head = Dense("head", D, 1, Activation::sigmoid);

  Rng rng(seed);
  stress_branch.init(rng);
  for (auto& c : convs) c.init(rng);
  damage_fc.init(rng);
  damage_branch.init(rng);
  fusion.init(rng);
  head.init(rng);
}

ParamStore StressNet::params() {
  ParamStore s = stress_branch.params();
  for (auto& c : convs) s.append(c.kernel);
  s.append(damage_fc.weight);
  s.append(damage_branch.params());
  s.append(fusion.params());
  s.append(head.params());
  return s;
}

void StressNet::zero_parameters() {
  for (Param* p : params()) p->value.fill(0.0);
}

double StressNet::forward(std::span<const double> stress_window, const Tensor& damage_window) {
  const std::size_t T = config_.delta_t, D = config_.feature_dim;
  if (stress_window.size() != T)
    throw ShapeError("stress window has " + std::to_string(stress_window.size()) + " steps, model expects " +
                     std::to_string(T));
  if (damage_window.shape() != Shape{config_.frame_rows, config_.frame_cols, T})
    throw ShapeError("damage window shape " + shape_string(damage_window.shape()) + " does not match model");
  for (double v : damage_window.data())
    if (v != 0.0 && v != 1.0) throw DomainError("damage window values must be 0 or 1");

  acts_.stress_features =
      stress_branch.forward(Tensor({1, T}, std::vector<double>(stress_window.begin(), stress_window.end())));

  Tensor d = damage_window;
  for (std::size_t i = 0; i < convs.size(); ++i) d = pools[i].forward(convs[i].forward(d));
  acts_.damage_features = damage_fc.forward(d);
  acts_.damage_encoded = damage_branch.forward(acts_.damage_features);

  acts_.fused_input = Tensor({2 * D, T});
  for (std::size_t k = 0; k < D; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      acts_.fused_input(k, t) = acts_.stress_features(k, t);
      acts_.fused_input(D + k, t) = acts_.damage_encoded(k, t);
    }
  acts_.fusion_output = fusion.forward(acts_.fused_input);

  std::vector<double> last(D);
  for (std::size_t k = 0; k < D; ++k) last[k] = acts_.fusion_output(k, T - 1);
  valid_ = true;
  return head.forward(last)[0];
}

void StressNet::backward(double d_pred) {
  if (!valid_) throw StaleCacheError("StressNet::backward without a matching forward");
  valid_ = false;
  const std::size_t T = config_.delta_t, D = config_.feature_dim;

  const double g[1] = {d_pred};
  const auto d_last = head.backward(g);
  Tensor g_fusion({D, T});
  for (std::size_t k = 0; k < D; ++k) g_fusion(k, T - 1) = d_last[k];
  const Tensor g_fused = fusion.backward(g_fusion);

  Tensor g_stress({D, T}), g_damage({D, T});
  for (std::size_t k = 0; k < D; ++k)
    for (std::size_t t = 0; t < T; ++t) {
      g_stress(k, t) = g_fused(k, t);
      g_damage(k, t) = g_fused(D + k, t);
    }
  stress_branch.backward(g_stress);

  Tensor gd = damage_fc.backward(damage_branch.backward(g_damage));
  for (std::size_t i = convs.size(); i-- > 0;) gd = convs[i].backward(pools[i].backward(gd));
}

// ---------------------------------------------------------------------------

namespace {

std::vector<ConfigEntry> config_entries(const StressNet& m) {
  const auto& c = m.config();
  std::vector<ConfigEntry> e{
      {"delta_t", static_cast<std::int64_t>(c.delta_t)},
      {"feature_dim", static_cast<std::int64_t>(c.feature_dim)},
      {"hidden_dim", static_cast<std::int64_t>(c.hidden_dim)},
      {"frame_rows", static_cast<std::int64_t>(c.frame_rows)},
      {"frame_cols", static_cast<std::int64_t>(c.frame_cols)},
      {"conv_blocks", static_cast<std::int64_t>(c.conv_blocks.size())},
  };
  for (std::size_t i = 0; i < c.conv_blocks.size(); ++i) {
    e.push_back({"conv" + std::to_string(i) + ".kernel", static_cast<std::int64_t>(c.conv_blocks[i].kernel)});
    e.push_back({"conv" + std::to_string(i) + ".pool", static_cast<std::int64_t>(c.conv_blocks[i].pool)});
  }
  e.push_back({"channel", static_cast<std::int64_t>(m.channel == Channel::xx ? 0 : 1)});
  e.push_back({"x_min", m.stats.x_min});
  e.push_back({"x_max", m.stats.x_max});
  return e;
}

StressNetConfig config_from(const CheckpointData& d) {
  StressNetConfig c;
  c.delta_t = static_cast<std::size_t>(d.get_int("delta_t"));
  c.feature_dim = static_cast<std::size_t>(d.get_int("feature_dim"));
  c.hidden_dim = static_cast<std::size_t>(d.get_int("hidden_dim"));
  c.frame_rows = static_cast<std::size_t>(d.get_int("frame_rows"));
  c.frame_cols = static_cast<std::size_t>(d.get_int("frame_cols"));
  const auto n = d.get_int("conv_blocks");
  if (n < 0 || n > 16) throw CheckpointError("corrupt checkpoint: bad conv block count");
  c.conv_blocks.clear();
  for (std::int64_t i = 0; i < n; ++i)
    c.conv_blocks.push_back({static_cast<std::size_t>(d.get_int("conv" + std::to_string(i) + ".kernel")),
                             static_cast<std::size_t>(d.get_int("conv" + std::to_string(i) + ".pool"))});
  return c;
}

StressNet restore(const CheckpointData& d, const StressNetConfig& config) {
  StressNet m(config, d.get_int("channel") == 0 ? Channel::xx : Channel::yy);
  m.stats = {d.get_double("x_min"), d.get_double("x_max")};
  auto params = m.params();
  assign_params(d, params);
  return m;
}

CheckpointData read_stressnet(const std::filesystem::path& path) {
  auto d = read_checkpoint(path);
  if (d.magic != kStressNetMagic) throw CheckpointError(path.string() + " is not a StressNet checkpoint");
  return d;
}

}  // namespace

void save_checkpoint(StressNet& model, const std::filesystem::path& path) {
  write_checkpoint(path, kStressNetMagic, config_entries(model), model.params());
}

StressNet load_checkpoint(const std::filesystem::path& path) {
  const auto d = read_stressnet(path);
  return restore(d, config_from(d));
}

StressNet load_checkpoint(const std::filesystem::path& path, const StressNetConfig& runtime) {
  const auto d = read_stressnet(path);
  const auto stored = config_from(d);
  if (!(stored == runtime))
    throw ShapeError("checkpoint config (delta_t=" + std::to_string(stored.delta_t) + ", D=" +
                     std::to_string(stored.feature_dim) + ") does not match runtime config (delta_t=" +
                     std::to_string(runtime.delta_t) + ", D=" + std::to_string(runtime.feature_dim) + ")");
  return restore(d, runtime);
}

}  // namespace stressnet
