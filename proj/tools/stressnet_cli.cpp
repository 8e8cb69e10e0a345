#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "stressnet/dataset_io.hpp"
#include "stressnet/errors.hpp"
#include "stressnet/workflow.hpp"

namespace fs = std::filesystem;
using namespace stressnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadArgs = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::vector<Channel> channels_for(const std::string& name) {
  if (name == "both") return {Channel::xx, Channel::yy};
  return {parse_channel(name)};
}

struct Variant {
  ModelKind kind;
  LossKind loss;
};

std::vector<Variant> variants_for(const std::string& model, const std::string& loss) {
  if (model == "all") {
    if (loss != "default") throw DomainError("--loss cannot be combined with --model all");
    return {{ModelKind::lstm, LossKind::mse},
            {ModelKind::bilstm, LossKind::mse},
            {ModelKind::stressnet, LossKind::mse},
            {ModelKind::stressnet, LossKind::mape},
            {ModelKind::stressnet, LossKind::dynamic}};
  }
  const ModelKind kind = parse_model_kind(model);
  if (loss == "default") return {{kind, kind == ModelKind::stressnet ? LossKind::dynamic : LossKind::mse}};
  if (loss == "all") return {{kind, LossKind::mse}, {kind, LossKind::mape}, {kind, LossKind::dynamic}};
  return {{kind, parse_loss_kind(loss)}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic fracture-stress forecasting: data generation, training, rollout and evaluation"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string data_dir = "data";
  std::string run_dir;
  std::string config_path;
  std::string profile_name = "desk";
  bool paper_faithful_norm = false;
  app.add_option("--seed", seed, "Master seed for data, splits, initialization and shuffling");
  app.add_option("--data-dir", data_dir, "Directory holding sim_NNNN folders")->capture_default_str();
  app.add_option("--run-dir", run_dir, "Directory for checkpoints and results (default: <data-dir>/run)");
  app.add_option("--config", config_path, "JSON file overriding profile settings")->check(CLI::ExistingFile);
  app.add_option("--profile", profile_name, "Preset scale")->check(CLI::IsMember({"desk", "paper"}))->capture_default_str();
  app.add_flag("--paper-faithful-norm", paper_faithful_norm,
               "Fit min/max over every simulation instead of the training pool");

  auto* gen = app.add_subcommand("generate", "Simulate the synthetic dataset");
  int n_sims = -1;
  gen->add_option("--n-sims", n_sims, "Number of simulations (profile default: 8 desk, 61 paper)")
      ->check(CLI::PositiveNumber);

  auto* tr = app.add_subcommand("train", "Train one or more models");
  std::string model = "stressnet", loss = "default", channel = "both";
  int epochs = -1;
  tr->add_option("--model", model, "stressnet, lstm, bilstm or all")
      ->check(CLI::IsMember({"stressnet", "lstm", "bilstm", "all"}))
      ->capture_default_str();
  tr->add_option("--loss", loss, "mse, mape, dynamic or all (default: dynamic for stressnet, mse for baselines)")
      ->check(CLI::IsMember({"default", "mse", "mape", "dynamic", "all"}));
  tr->add_option("--channel", channel, "xx, yy or both")->check(CLI::IsMember({"xx", "yy", "both"}))->capture_default_str();
  tr->add_option("--epochs", epochs, "Override the profile epoch count")->check(CLI::PositiveNumber);

  auto* ev = app.add_subcommand("evaluate", "Roll out every trained model on the test sims and emit the results table");

  auto* ro = app.add_subcommand("rollout", "Recursive rollout of one checkpoint on one simulation");
  std::string ckpt, sim_name, out_dir;
  ro->add_option("--checkpoint", ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  ro->add_option("--sim", sim_name, "Simulation folder name, e.g. sim_0003")->required();
  ro->add_option("--out", out_dir, "Output directory (default: run dir)");

  auto* pl = app.add_subcommand("plot", "SVG overlay of truth and stored rollouts for one simulation");
  std::string plot_sim_name, plot_channel = "both";
  pl->add_option("--sim", plot_sim_name, "Simulation folder name")->required();
  pl->add_option("--channel", plot_channel, "xx, yy or both")->check(CLI::IsMember({"xx", "yy", "both"}))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitBadArgs;
  }

  try {
    RunOptions opts = RunOptions::for_profile(parse_profile(profile_name));
    if (!config_path.empty()) opts.apply_json(read_file_bytes(config_path));
    opts.seed = seed;
    opts.data_dir = data_dir;
    opts.run_dir = run_dir;
    if (paper_faithful_norm) opts.paper_faithful_norm = true;

    if (*gen) {
      if (n_sims > 0) opts.n_sims = n_sims;
      generate(opts, std::cout);
    } else if (*tr) {
      if (epochs > 0) opts.apply_json("{\"epochs\": " + std::to_string(epochs) + "}");
      for (const auto& v : variants_for(model, loss))
        for (Channel ch : channels_for(channel)) train_model(opts, v.kind, v.loss, ch, std::cout);
    } else if (*ev) {
      evaluate_run(opts, std::cout);
    } else if (*ro) {
      const fs::path out = out_dir.empty() ? opts.resolved_run_dir() : fs::path(out_dir);
      const auto r = rollout_checkpoint(opts, ckpt, sim_name, out);
      std::cout << sim_name << ": MAPE " << r.mape << " (normalized " << r.mape_normalized << "), " << r.seconds
                << " s, wrote " << (out / ("rollout_" + sim_name + ".csv")).string() << '\n';
    } else if (*pl) {
      for (Channel ch : channels_for(plot_channel)) std::cout << plot_sim(opts, plot_sim_name, ch).string() << '\n';
    }
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadArgs;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadArgs;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}
