#include "stressnet/workflow.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "stressnet/dataset_io.hpp"
#include "stressnet/errors.hpp"

namespace stressnet {

namespace fs = std::filesystem;
using nlohmann::json;

Profile parse_profile(const std::string& name) {
  if (name == "desk") return Profile::desk;
  if (name == "paper") return Profile::paper;
  throw DomainError("unknown profile '" + name + "' (expected desk or paper)");
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "stressnet") return ModelKind::stressnet;
  if (name == "lstm") return ModelKind::lstm;
  if (name == "bilstm") return ModelKind::bilstm;
  throw DomainError("unknown model '" + name + "' (expected stressnet, lstm or bilstm)");
}

std::string model_name(ModelKind kind, LossKind loss) {
  const char* loss_label = loss == LossKind::dynamic ? "Dynamic Loss" : (loss == LossKind::mse ? "MSE" : "MAPE");
  switch (kind) {
    case ModelKind::stressnet: return std::string("StressNet(") + loss_label + ")";
    case ModelKind::lstm: return loss == LossKind::mse ? "LSTM" : std::string("LSTM(") + loss_label + ")";
    case ModelKind::bilstm: return loss == LossKind::mse ? "Bi-LSTM" : std::string("Bi-LSTM(") + loss_label + ")";
  }
  return {};
}

fs::path RunOptions::resolved_run_dir() const { return run_dir.empty() ? data_dir / "run" : run_dir; }

std::size_t RunOptions::resolved_n_train(std::size_t n) const {
  if (n_train > 0) return n_train;
  const auto n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(n * 6.0 / 61.0)));
  if (n <= n_test) throw DataError("need at least " + std::to_string(n_test + 1) + " sims to hold out a test set");
  return n - n_test;
}

std::size_t RunOptions::resolved_n_val(std::size_t pool) const {
  if (n_val >= 0) return static_cast<std::size_t>(n_val);
  if (pool < 2) return 0;
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(pool * 6.0 / 55.0)), 1, 6);
}

RunOptions RunOptions::for_profile(Profile profile) {
  RunOptions o;
  o.profile = profile;
  if (profile == Profile::paper) {
    o.n_sims = 61;
    o.stressnet = StressNetConfig{};
    o.baseline = BaselineConfig{};
    o.train = TrainConfig::paper();
  }
  return o;
}

void RunOptions::apply_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DomainError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw DomainError("config must be a JSON object");
  bool schedule_set = false;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n_sims") n_sims = v.get<int>();
      else if (key == "n_train") n_train = v.get<std::size_t>();
      else if (key == "n_val") n_val = v.get<int>();
      else if (key == "paper_faithful_norm") paper_faithful_norm = v.get<bool>();
      else if (key == "epochs") train.epochs = v.get<int>();
      else if (key == "batch_size") train.batch_size = v.get<std::size_t>();
      else if (key == "learning_rate") train.adam.learning_rate = v.get<double>();
      else if (key == "epochs_per_shuffle") train.epochs_per_shuffle = v.get<int>();
      else if (key == "loss") train.loss = parse_loss_kind(v.get<std::string>());
      else if (key == "switch_epoch") { train.schedule.switch_epoch = v.get<int>(); schedule_set = true; }
      else if (key == "lambda_high") train.schedule.lambda_high = v.get<double>();
      else if (key == "lambda_low") train.schedule.lambda_low = v.get<double>();
      else if (key == "grad_clip_norm") train.grad_clip_norm = v.get<double>();
      else if (key == "relative_floor") train.relative_floor = v.get<double>();
      else if (key == "relative_on_raw_scale") train.relative_on_raw_scale = v.get<bool>();
      else if (key == "delta_t") stressnet.delta_t = v.get<std::size_t>();
      else if (key == "feature_dim") stressnet.feature_dim = v.get<std::size_t>();
      else if (key == "hidden_dim") stressnet.hidden_dim = v.get<std::size_t>();
      else if (key == "baseline_delta_t") baseline.delta_t = v.get<std::size_t>();
      else if (key == "baseline_hidden_dim") baseline.hidden_dim = v.get<std::size_t>();
      else if (key == "baseline_feature_dim") baseline.feature_dim = v.get<std::size_t>();
      else if (key == "toughness") sim.toughness = v.get<double>();
      else if (key == "toughness_spread") sim.toughness_spread = v.get<double>();
      else throw DomainError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw DomainError(std::string("bad config value: ") + e.what());
  }
  if (j.contains("epochs")) {
    const int sw = train.schedule.switch_epoch;
    const double hi = train.schedule.lambda_high, lo = train.schedule.lambda_low;
    train.schedule = LossSchedule::scaled_to(train.epochs);
    if (schedule_set) train.schedule.switch_epoch = sw;
    train.schedule.lambda_high = hi;
    train.schedule.lambda_low = lo;
  }
  stressnet.validate();
  train.validate();
  sim.validate();
}

void generate(const RunOptions& o, std::ostream& log) {
  if (o.n_sims < 1) throw DomainError("n_sims must be at least 1");
  fs::create_directories(o.data_dir);
  for (const auto& e : fs::directory_iterator(o.data_dir)) {
    const auto name = e.path().filename().string();
    if (e.is_directory() && name.rfind("sim_", 0) == 0) fs::remove_all(e.path());
  }
  fs::remove_all(o.data_dir / ".cache");
  for (int i = 0; i < o.n_sims; ++i) {
    const auto rec = simulate(o.sim, o.seed + static_cast<std::uint64_t>(i));
    write_simulation(o.data_dir / sim_dir_name(static_cast<std::size_t>(i)), rec, o.sim);
    log << sim_dir_name(static_cast<std::size_t>(i)) << ": seed " << rec.seed << ", failure step "
        << (rec.failure_step ? std::to_string(*rec.failure_step) : std::string("none")) << '\n';
  }
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t sims_hash(const RunOptions& o) {
  const auto dirs = list_simulations(o.data_dir);
  return dataset_hash(dirs);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::uint64_t stream_salt(ModelKind kind, LossKind loss, Channel ch) {
  return 1000 + 100 * static_cast<std::uint64_t>(kind) + 10 * static_cast<std::uint64_t>(loss) +
         static_cast<std::uint64_t>(ch);
}

const PreparedSim& find_sim(const std::vector<PreparedSim>& sims, const std::string& name) {
  for (const auto& s : sims)
    if (s.name == name) return s;
  throw DataError("no simulation named " + name);
}

}  // namespace

RunSplit load_or_create_split(const RunOptions& o, const std::vector<PreparedSim>& sims) {
  const fs::path path = o.resolved_run_dir() / "split.json";
  const std::uint64_t h = sims_hash(o);
  if (fs::exists(path)) {
    try {
      const json j = json::parse(read_file_bytes(path));
      if (j.at("dataset_hash").get<std::string>() == hex64(h) && j.at("seed").get<std::uint64_t>() == o.seed) {
        RunSplit s{h, j.at("train_pool").get<std::vector<std::size_t>>(), j.at("test").get<std::vector<std::size_t>>()};
        for (auto i : s.train_pool)
          if (i >= sims.size()) throw DataError(path.string() + ": index out of range");
        for (auto i : s.test)
          if (i >= sims.size()) throw DataError(path.string() + ": index out of range");
        return s;
      }
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }
  Rng rng(Rng::derive(o.seed, 1));
  const DatasetSplit d = split_dataset(sims.size(), o.resolved_n_train(sims.size()), rng);
  RunSplit s{h, d.train_pool, d.test};
  fs::create_directories(o.resolved_run_dir());
  json j{{"dataset_hash", hex64(h)}, {"seed", o.seed}, {"train_pool", s.train_pool}, {"test", s.test}};
  write_text(path, j.dump(2) + "\n");
  return s;
}

NormalizationStats run_stats(const RunOptions& o, const std::vector<PreparedSim>& sims, const RunSplit& split,
                             Channel ch) {
  if (o.paper_faithful_norm) {
    std::vector<std::size_t> all(sims.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return fit_stats(sims, all, ch);
  }
  return fit_stats(sims, split.train_pool, ch);
}

fs::path checkpoint_path(const RunOptions& o, const std::string& model, Channel ch) {
  return o.resolved_run_dir() / (model_slug(model) + "_" + to_string(ch) + ".ckpt");
}

namespace {

template <typename Model>
TrainHistory fit_and_save(Model& model, const RunOptions& o, const std::vector<PreparedSim>& sims,
                          const RunSplit& split, TrainConfig tc, const std::string& name, Channel ch,
                          std::ostream& log, const json& model_json) {
  tc.n_val = o.resolved_n_val(split.train_pool.size());
  const int every = std::max(1, tc.epochs / 20);
  const auto history = train(model, sims, split.train_pool, tc, [&](const EpochRecord& e) {
    if (e.epoch % every == 0 || e.epoch == tc.epochs) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "  epoch %4d  lambda %.2f  train_loss %.6g  val_mape %.4f\n", e.epoch, e.lambda,
                    e.train_loss, e.val_mape);
      log << buf << std::flush;
    }
  });
  const fs::path ckpt = checkpoint_path(o, name, ch);
  const std::string stem = ckpt.stem().string();
  save_checkpoint(model, ckpt);
  write_history_csv(ckpt.parent_path() / (stem + "_history.csv"), history);
  json j = json::parse(tc.to_json());
  j["model"] = name;
  j["channel"] = to_string(ch);
  j["architecture"] = model_json;
  j["x_min"] = model.stats.x_min;
  j["x_max"] = model.stats.x_max;
  j["paper_faithful_norm"] = o.paper_faithful_norm;
  j["train_pool"] = split.train_pool.size();
  j["test"] = split.test.size();
  j["best_epoch"] = history.best_epoch;
  write_text(ckpt.parent_path() / (stem + "_train_config.json"), j.dump(2) + "\n");
  log << name << " [" << to_string(ch) << "]: kept epoch " << history.best_epoch << ", wrote " << ckpt.string()
      << '\n';
  return history;
}

}  // namespace

TrainHistory train_model(const RunOptions& o, ModelKind kind, LossKind loss, Channel ch, std::ostream& log) {
  if (o.profile == Profile::paper)
    log << "warning: the paper-scale profile runs " << o.train.epochs
        << " epochs and can take many hours on a single core\n";
  const auto sims = load_prepared(o.data_dir);
  fs::create_directories(o.resolved_run_dir());
  const RunSplit split = load_or_create_split(o, sims);
  TrainConfig tc = o.train;
  tc.loss = loss;
  tc.seed = Rng::derive(o.seed, stream_salt(kind, loss, ch));
  const auto init_seed = Rng::derive(o.seed, stream_salt(kind, loss, ch) + 7);
  const std::string name = model_name(kind, loss);
  const NormalizationStats stats = run_stats(o, sims, split, ch);
  log << "training " << name << " on channel " << to_string(ch) << ": " << split.train_pool.size()
      << " sims in the pool, " << tc.epochs << " epochs\n";
  switch (kind) {
    case ModelKind::stressnet: {
      StressNet m(o.stressnet, ch, init_seed);
      m.stats = stats;
      json arch{{"delta_t", o.stressnet.delta_t},
                {"feature_dim", o.stressnet.feature_dim},
                {"hidden_dim", o.stressnet.hidden_dim}};
      return fit_and_save(m, o, sims, split, tc, name, ch, log, arch);
    }
    case ModelKind::lstm: {
      LstmBaseline m(o.baseline, ch, init_seed);
      m.stats = stats;
      json arch{{"delta_t", o.baseline.delta_t}, {"hidden_dim", o.baseline.hidden_dim}};
      return fit_and_save(m, o, sims, split, tc, name, ch, log, arch);
    }
    case ModelKind::bilstm: {
      BiLstmBaseline m(o.baseline, ch, init_seed);
      m.stats = stats;
      json arch{{"delta_t", o.baseline.delta_t},
                {"hidden_dim", o.baseline.hidden_dim},
                {"feature_dim", o.baseline.feature_dim}};
      return fit_and_save(m, o, sims, split, tc, name, ch, log, arch);
    }
  }
  throw DomainError("unknown model kind");
}

namespace {

std::string read_magic(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  char buf[8] = {};
  if (!in.read(buf, 8)) throw CheckpointError(path.string() + ": too short for a checkpoint");
  return std::string(buf, 8);
}

RolloutResult rollout_any(const fs::path& ckpt, const PreparedSim& sim, Channel* channel_out = nullptr) {
  const std::string magic = read_magic(ckpt);
  RolloutResult r;
  if (magic == kStressNetMagic) {
    auto m = load_checkpoint(ckpt);
    r = rollout(m, sim);
    if (channel_out) *channel_out = m.channel;
  } else if (magic == kLstmMagic) {
    auto m = load_lstm_baseline(ckpt);
    r = rollout(m, sim);
    if (channel_out) *channel_out = m.channel;
  } else if (magic == kBiLstmMagic) {
    auto m = load_bilstm_baseline(ckpt);
    r = rollout(m, sim);
    if (channel_out) *channel_out = m.channel;
  } else {
    throw CheckpointError(ckpt.string() + ": unknown checkpoint magic");
  }
  return r;
}

fs::path rollout_csv_path(const RunOptions& o, const std::string& model, Channel ch, const std::string& sim) {
  return o.resolved_run_dir() / model_slug(model) / to_string(ch) / ("rollout_" + sim + ".csv");
}

std::vector<std::string> candidate_models() {
  std::vector<std::string> names;
  for (ModelKind k : {ModelKind::lstm, ModelKind::bilstm, ModelKind::stressnet})
    for (LossKind l : {LossKind::mse, LossKind::mape, LossKind::dynamic}) names.push_back(model_name(k, l));
  return names;
}

}  // namespace

ResultsTable evaluate_run(const RunOptions& o, std::ostream& log) {
  const auto sims = load_prepared(o.data_dir);
  const RunSplit split = load_or_create_split(o, sims);
  if (split.test.empty()) throw DataError("the split has no test sims to evaluate");
  ResultsTable table;
  for (Channel ch : {Channel::xx, Channel::yy}) {
    const NormalizationStats stats = run_stats(o, sims, split, ch);
    std::vector<std::vector<double>> train_norm;
    for (std::size_t i : split.train_pool) train_norm.push_back(normalize(sims[i].stress(ch), stats));
    const HistoricalAverage ha = HistoricalAverage::fit(train_norm);
    const std::string ha_name = kModelOrder.front();
    std::vector<RolloutResult> ha_results;
    for (std::size_t i : split.test) {
      ha_results.push_back(ha_rollout(ha, sims[i], ch, stats, o.stressnet.delta_t));
      const fs::path p = rollout_csv_path(o, ha_name, ch, sims[i].name);
      fs::create_directories(p.parent_path());
      write_rollout_csv(p, ha_results.back());
    }
    table.add(summarize(ha_name, ch, ha_results));

    for (const auto& name : candidate_models()) {
      const fs::path ckpt = checkpoint_path(o, name, ch);
      if (!fs::exists(ckpt)) continue;
      std::vector<RolloutResult> results;
      double seconds = 0.0;
      for (std::size_t i : split.test) {
        Channel stored = ch;
        results.push_back(rollout_any(ckpt, sims[i], &stored));
        if (stored != ch) throw DataError(ckpt.string() + " holds a " + to_string(stored) + " model");
        seconds += results.back().seconds;
        const fs::path p = rollout_csv_path(o, name, ch, sims[i].name);
        fs::create_directories(p.parent_path());
        write_rollout_csv(p, results.back());
      }
      table.add(summarize(name, ch, results));
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s [%s]: mean rollout %.3f s per sim\n", name.c_str(), to_string(ch).c_str(),
                    seconds / static_cast<double>(results.size()));
      log << buf;
    }
    for (std::size_t i : split.test) plot_sim(o, sims[i].name, ch);
  }
  table.write_csv(o.resolved_run_dir() / "results_table.csv");
  write_text(o.resolved_run_dir() / "results_table.txt", table.to_text());
  log << table.to_text();
  return table;
}

RolloutResult rollout_checkpoint(const RunOptions& o, const fs::path& ckpt, const std::string& sim_name,
                                 const fs::path& out_dir) {
  const auto sims = load_prepared(o.data_dir);
  const RolloutResult r = rollout_any(ckpt, find_sim(sims, sim_name));
  fs::create_directories(out_dir);
  write_rollout_csv(out_dir / ("rollout_" + sim_name + ".csv"), r);
  return r;
}

fs::path plot_sim(const RunOptions& o, const std::string& sim_name, Channel ch) {
  const auto dirs = list_simulations(o.data_dir);
  fs::path dir;
  for (const auto& d : dirs)
    if (d.filename().string() == sim_name) dir = d;
  if (dir.empty()) throw DataError("no simulation named " + sim_name);
  const StressTable st = read_stress_csv(dir / "stress.csv");
  const auto& raw = ch == Channel::xx ? st.xx : st.yy;

  std::vector<std::string> names{kModelOrder.front()};
  for (const auto& n : candidate_models()) names.push_back(n);
  struct Loaded {
    std::string name;
    RolloutCsv csv;
  };
  std::vector<Loaded> found;
  std::size_t first = raw.size();
  for (const auto& n : names) {
    const fs::path p = rollout_csv_path(o, n, ch, sim_name);
    if (!fs::exists(p)) continue;
    found.push_back({n, read_rollout_csv(p)});
    if (!found.back().csv.t.empty()) first = std::min(first, found.back().csv.t.front());
  }
  if (found.empty()) first = 0;
  std::vector<double> truth(raw.begin() + static_cast<std::ptrdiff_t>(first), raw.end());
  std::vector<PlotSeries> series;
  for (const auto& f : found) {
    PlotSeries s{f.name, std::vector<double>(truth.size(), std::numeric_limits<double>::quiet_NaN())};
    for (std::size_t i = 0; i < f.csv.t.size(); ++i)
      if (f.csv.t[i] >= first && f.csv.t[i] - first < truth.size()) s.values[f.csv.t[i] - first] = f.csv.pred[i];
    series.push_back(std::move(s));
  }
  const fs::path out = o.resolved_run_dir() / to_string(ch) / ("plot_" + sim_name + ".svg");
  fs::create_directories(out.parent_path());
  write_plot(out, sim_name + " channel " + to_string(ch), first, truth, series);
  return out;
}

}  // namespace stressnet
