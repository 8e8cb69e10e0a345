#include "stressnet/baselines.hpp"

#include "stressnet/checkpoint.hpp"
#include "stressnet/errors.hpp"

namespace stressnet {

HistoricalAverage HistoricalAverage::fit(std::span<const std::vector<double>> series) {
  if (series.empty()) throw DataError("historical average needs at least one training series");
  const std::size_t T = series.front().size();
  HistoricalAverage ha;
  ha.mean.assign(T, 0.0);
  for (const auto& s : series) {
    if (s.size() != T) throw DataError("historical average needs equal-length series");
    for (std::size_t t = 0; t < T; ++t) ha.mean[t] += s[t];
  }
  for (double& m : ha.mean) m /= static_cast<double>(series.size());
  return ha;
}

double HistoricalAverage::predict(std::size_t t) const {
  if (t >= mean.size()) throw DomainError("historical average has no step " + std::to_string(t));
  return mean[t];
}

BaselineConfig BaselineConfig::desk() {
  BaselineConfig c;
  c.hidden_dim = 16;
  c.feature_dim = 16;
  return c;
}

namespace {

Tensor as_row(std::span<const double> w) { return Tensor({1, w.size()}, std::vector<double>(w.begin(), w.end())); }

void check_window(std::span<const double> w, std::size_t dt) {
  if (w.size() != dt)
    throw ShapeError("stress window has " + std::to_string(w.size()) + " steps, model expects " + std::to_string(dt));
}

}  // namespace

LstmBaseline::LstmBaseline(BaselineConfig config, Channel ch, std::uint64_t seed) : channel(ch), config_(config) {
  if (config_.delta_t == 0 || config_.hidden_dim == 0) throw ShapeError("baseline extents must be positive");
  lstm = Lstm("lstm", 1, config_.hidden_dim);
  head = Dense("head", config_.hidden_dim, 1, Activation::sigmoid);
  Rng rng(seed);
  lstm.init(rng);
  head.init(rng);
}

double LstmBaseline::forward(std::span<const double> w) {
  check_window(w, config_.delta_t);
  const Tensor h = lstm.forward(as_row(w));
  const std::size_t H = config_.hidden_dim, T = config_.delta_t;
  std::vector<double> last(H);
  for (std::size_t k = 0; k < H; ++k) last[k] = h(k, T - 1);
  valid_ = true;
  return head.forward(last)[0];
}

void LstmBaseline::backward(double d_pred) {
  if (!valid_) throw StaleCacheError("LstmBaseline::backward without a matching forward");
  valid_ = false;
  const std::size_t H = config_.hidden_dim, T = config_.delta_t;
  const double g[1] = {d_pred};
  const auto d_last = head.backward(g);
  Tensor gh({H, T});
  for (std::size_t k = 0; k < H; ++k) gh(k, T - 1) = d_last[k];
  lstm.backward(gh);
}

ParamStore LstmBaseline::params() {
  ParamStore s = lstm.params();
  s.append(head.params());
  return s;
}

BiLstmBaseline::BiLstmBaseline(BaselineConfig config, Channel ch, std::uint64_t seed) : channel(ch), config_(config) {
  if (config_.delta_t == 0 || config_.hidden_dim == 0 || config_.feature_dim == 0)
    throw ShapeError("baseline extents must be positive");
  encoder = BiLstm("bilstm", 1, config_.hidden_dim, config_.feature_dim, Activation::identity);
  head = Dense("head", config_.feature_dim, 1, Activation::sigmoid);
  Rng rng(seed);
  encoder.init(rng);
  head.init(rng);
}

double BiLstmBaseline::forward(std::span<const double> w) {
  check_window(w, config_.delta_t);
  const Tensor y = encoder.forward(as_row(w));
  const std::size_t D = config_.feature_dim, T = config_.delta_t;
  std::vector<double> last(D);
  for (std::size_t k = 0; k < D; ++k) last[k] = y(k, T - 1);
  valid_ = true;
  return head.forward(last)[0];
}

void BiLstmBaseline::backward(double d_pred) {
  if (!valid_) throw StaleCacheError("BiLstmBaseline::backward without a matching forward");
  valid_ = false;
  const std::size_t D = config_.feature_dim, T = config_.delta_t;
  const double g[1] = {d_pred};
  const auto d_last = head.backward(g);
  Tensor gy({D, T});
  for (std::size_t k = 0; k < D; ++k) gy(k, T - 1) = d_last[k];
  encoder.backward(gy);
}

ParamStore BiLstmBaseline::params() {
  ParamStore s = encoder.params();
  s.append(head.params());
  return s;
}

namespace {

template <typename M>
std::vector<ConfigEntry> baseline_entries(const M& m) {
  const auto& c = m.config();
  return {{"delta_t", static_cast<std::int64_t>(c.delta_t)},
          {"hidden_dim", static_cast<std::int64_t>(c.hidden_dim)},
          {"feature_dim", static_cast<std::int64_t>(c.feature_dim)},
          {"channel", static_cast<std::int64_t>(m.channel == Channel::xx ? 0 : 1)},
          {"x_min", m.stats.x_min},
          {"x_max", m.stats.x_max}};
}

template <typename M>
M load_baseline(const std::filesystem::path& path, const char* magic) {
  const auto d = read_checkpoint(path);
  if (d.magic != magic) throw CheckpointError(path.string() + " is not a " + M::kName + " checkpoint");
  BaselineConfig c;
  c.delta_t = static_cast<std::size_t>(d.get_int("delta_t"));
  c.hidden_dim = static_cast<std::size_t>(d.get_int("hidden_dim"));
  c.feature_dim = static_cast<std::size_t>(d.get_int("feature_dim"));
  M m(c, d.get_int("channel") == 0 ? Channel::xx : Channel::yy);
  m.stats = {d.get_double("x_min"), d.get_double("x_max")};
  auto p = m.params();
  assign_params(d, p);
  return m;
}

}  // namespace

void save_checkpoint(LstmBaseline& m, const std::filesystem::path& path) {
  write_checkpoint(path, kLstmMagic, baseline_entries(m), m.params());
}

void save_checkpoint(BiLstmBaseline& m, const std::filesystem::path& path) {
  write_checkpoint(path, kBiLstmMagic, baseline_entries(m), m.params());
}

LstmBaseline load_lstm_baseline(const std::filesystem::path& path) {
  return load_baseline<LstmBaseline>(path, kLstmMagic);
}

BiLstmBaseline load_bilstm_baseline(const std::filesystem::path& path) {
  return load_baseline<BiLstmBaseline>(path, kBiLstmMagic);
}

}  // namespace stressnet
