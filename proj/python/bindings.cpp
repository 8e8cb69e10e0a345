#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <sstream>

#include "stressnet/dataset_io.hpp"
#include "stressnet/errors.hpp"
#include "stressnet/fracture_sim.hpp"
#include "stressnet/losses.hpp"
#include "stressnet/normalization.hpp"
#include "stressnet/pipeline.hpp"
#include "stressnet/workflow.hpp"

namespace py = pybind11;
using namespace stressnet;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const DoubleArray& a) {
  if (a.ndim() != 1) throw ShapeError("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::array_t<std::uint8_t> frame_to_array(const BinaryFrame& f) {
  py::array_t<std::uint8_t> out({f.rows, f.cols});
  std::copy(f.pixels.begin(), f.pixels.end(), out.mutable_data());
  return out;
}

RunOptions options(const std::filesystem::path& data_dir, std::uint64_t seed, const std::string& profile,
                   const std::string& config_json, const std::optional<std::filesystem::path>& run_dir, bool paper_faithful_norm) {
  RunOptions o = RunOptions::for_profile(parse_profile(profile));
  if (!config_json.empty()) o.apply_json(config_json);
  o.data_dir = data_dir;
  o.run_dir = run_dir.value_or(std::filesystem::path());
  o.seed = seed;
  o.paper_faithful_norm = o.paper_faithful_norm || paper_faithful_norm;
  return o;
}

py::dict rollout_dict(const RolloutResult& r) {
  py::dict d;
  d["sim"] = r.sim;
  d["delta_t"] = r.delta_t;
  d["truth"] = to_array(r.truth);
  d["pred"] = to_array(r.pred);
  d["pred_norm"] = to_array(r.pred_norm);
  d["mape"] = r.mape;
  d["mape_normalized"] = r.mape_normalized;
  d["seconds"] = r.seconds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the stressnet C++ library";

  static py::exception<DataError> data_error(m, "DataError", PyExc_RuntimeError);
  static py::exception<CheckpointError> checkpoint_error(m, "CheckpointError", PyExc_RuntimeError);
  static py::exception<NumericError> numeric_error(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DataError& e) {
      py::set_error(data_error, e.what());
    } catch (const CheckpointError& e) {
      py::set_error(checkpoint_error, e.what());
    } catch (const NumericError& e) {
      py::set_error(numeric_error, e.what());
    } catch (const DomainError& e) {
      py::set_error(PyExc_ValueError, e.what());
    } catch (const ShapeError& e) {
      py::set_error(PyExc_ValueError, e.what());
    }
  });

  py::class_<SimulationRecord>(m, "SimulationRecord")
      .def_readonly("seed", &SimulationRecord::seed)
      .def_readonly("failure_step", &SimulationRecord::failure_step)
      .def_property_readonly("steps", &SimulationRecord::steps)
      .def_property_readonly("stress_xx", [](const SimulationRecord& r) { return to_array(r.stress_xx); })
      .def_property_readonly("stress_yy", [](const SimulationRecord& r) { return to_array(r.stress_yy); })
      .def(
          "frame",
          [](const SimulationRecord& r, int t) {
            if (t < 0 || t >= r.steps()) throw py::index_error("step out of range");
            return frame_to_array(r.frame(t));
          },
          py::arg("t"), "Binary damage frame (192 x 128, uint8) after step t.");

  m.def(
      "simulate",
      [](std::uint64_t seed, double toughness, double toughness_spread) {
        SimConfig cfg;
        cfg.toughness = toughness;
        cfg.toughness_spread = toughness_spread;
        cfg.validate();
        return simulate(cfg, seed);
      },
      py::arg("seed"), py::arg("toughness") = SimConfig{}.toughness,
      py::arg("toughness_spread") = SimConfig{}.toughness_spread, "Runs one 228-step synthetic fracture simulation.");

  m.def(
      "downsample",
      [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
        if (a.ndim() != 2) throw ShapeError("expected a 2-d frame");
        BinaryFrame f(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
        for (std::size_t i = 0; i < f.pixels.size(); ++i) f.pixels[i] = a.data()[i] ? 1 : 0;
        return frame_to_array(downsample_frame(f));
      },
      py::arg("frame"), "8 x 8 blockwise max: 192 x 128 -> 24 x 16.");

  m.def(
      "normalize",
      [](const DoubleArray& x, double x_min, double x_max) {
        const NormalizationStats s{x_min, x_max};
        s.validate();
        return to_array(normalize(to_vector(x), s));
      },
      py::arg("values"), py::arg("x_min"), py::arg("x_max"));
  m.def(
      "denormalize",
      [](const DoubleArray& x, double x_min, double x_max) {
        const NormalizationStats s{x_min, x_max};
        s.validate();
        return to_array(denormalize(to_vector(x), s));
      },
      py::arg("values"), py::arg("x_min"), py::arg("x_max"));

  m.def(
      "mape", [](const DoubleArray& p, const DoubleArray& t) { return mape(to_vector(p), to_vector(t)); },
      py::arg("pred"), py::arg("truth"));
  m.def(
      "mse", [](const DoubleArray& p, const DoubleArray& t) { return mse(to_vector(p), to_vector(t)); },
      py::arg("pred"), py::arg("truth"));
  m.def(
      "fused_loss",
      [](const DoubleArray& p, const DoubleArray& t, double lam) {
        const LossValue v = fused_loss(to_vector(p), to_vector(t), lam);
        return py::make_tuple(v.value, to_array(v.grad));
      },
      py::arg("pred"), py::arg("truth"), py::arg("lam"), "Returns (value, gradient w.r.t. pred).");
  m.def(
      "lambda_at",
      [](int epoch, int switch_epoch, int total_epochs) {
        LossSchedule s;
        s.switch_epoch = switch_epoch;
        s.total_epochs = total_epochs;
        s.validate();
        return lambda_at(epoch, s);
      },
      py::arg("epoch"), py::arg("switch_epoch") = 600, py::arg("total_epochs") = 1800);

  m.def(
      "generate",
      [](const std::filesystem::path& data_dir, int n_sims, std::uint64_t seed, const std::string& config_json) {
        RunOptions o = options(data_dir, seed, "desk", config_json, std::nullopt, false);
        if (n_sims > 0) o.n_sims = n_sims;
        std::ostringstream log;
        generate(o, log);
        return log.str();
      },
      py::arg("data_dir"), py::arg("n_sims") = 0, py::arg("seed") = 0, py::arg("config_json") = "",
      "Writes sim_NNNN folders; returns the log text.");

  m.def(
      "train",
      [](const std::filesystem::path& data_dir, const std::string& model, const std::string& loss, const std::string& channel,
         std::uint64_t seed, const std::string& profile, const std::string& config_json, const std::optional<std::filesystem::path>& run_dir,
         bool paper_faithful_norm) {
        const RunOptions o = options(data_dir, seed, profile, config_json, run_dir, paper_faithful_norm);
        std::ostringstream log;
        const TrainHistory h = train_model(o, parse_model_kind(model), parse_loss_kind(loss), parse_channel(channel), log);
        py::list epochs;
        for (const auto& e : h.epochs) {
          py::dict d;
          d["epoch"] = e.epoch;
          d["lambda"] = e.lambda;
          d["train_loss"] = e.train_loss;
          d["val_mape"] = e.val_mape;
          epochs.append(d);
        }
        py::dict out;
        out["epochs"] = epochs;
        out["best_epoch"] = h.best_epoch;
        out["checkpoint"] = checkpoint_path(o, model_name(parse_model_kind(model), parse_loss_kind(loss)),
                                            parse_channel(channel));
        return out;
      },
      py::arg("data_dir"), py::arg("model") = "stressnet", py::arg("loss") = "dynamic", py::arg("channel") = "yy",
      py::arg("seed") = 0, py::arg("profile") = "desk", py::arg("config_json") = "", py::arg("run_dir") = py::none(),
      py::arg("paper_faithful_norm") = false);

  m.def(
      "evaluate",
      [](const std::filesystem::path& data_dir, std::uint64_t seed, const std::string& profile, const std::string& config_json,
         const std::optional<std::filesystem::path>& run_dir, bool paper_faithful_norm) {
        const RunOptions o = options(data_dir, seed, profile, config_json, run_dir, paper_faithful_norm);
        std::ostringstream log;
        const ResultsTable t = evaluate_run(o, log);
        py::list rows;
        for (const auto& r : t.rows()) {
          py::dict d;
          d["model"] = r.model;
          d["channel"] = to_string(r.channel);
          d["mape"] = r.mape;
          d["mape_normalized"] = r.mape_normalized;
          d["n_sims"] = r.n_sims;
          rows.append(d);
        }
        return rows;
      },
      py::arg("data_dir"), py::arg("seed") = 0, py::arg("profile") = "desk", py::arg("config_json") = "",
      py::arg("run_dir") = py::none(), py::arg("paper_faithful_norm") = false,
      "Rolls out every trained checkpoint on the test sims; returns the results table rows.");

  m.def(
      "rollout",
      [](const std::filesystem::path& data_dir, const std::filesystem::path& checkpoint, const std::string& sim,
         const std::filesystem::path& out_dir) {
        RunOptions o;
        o.data_dir = data_dir;
        return rollout_dict(rollout_checkpoint(o, checkpoint, sim, out_dir));
      },
      py::arg("data_dir"), py::arg("checkpoint"), py::arg("sim"), py::arg("out_dir"));
}
