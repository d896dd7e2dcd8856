#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "rpmixer/diagnostics.hpp"
#include "rpmixer/experiment.hpp"
#include "rpmixer/fft.hpp"
#include "rpmixer/metrics.hpp"

namespace py = pybind11;
using namespace rpmixer;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

template <typename T, typename Array>
BasicTensor<T> to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  std::vector<T> data(a.data(), a.data() + a.size());
  return BasicTensor<T>(std::move(shape), std::move(data));
}

template <typename T>
py::array_t<T> to_array(const BasicTensor<T>& t) {
  py::array_t<T> out(t.shape());
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["mae"] = m.mae;
  d["rmse"] = m.rmse;
  d["mape"] = m.mape_pct;
  d["count"] = m.count;
  return d;
}

py::dict report_dict(const MetricReport& r) {
  py::dict d;
  py::list steps;
  for (const auto& m : r.per_step) steps.append(metrics_dict(m));
  d["per_step"] = steps;
  d["average"] = metrics_dict(r.average);
  d["samples"] = r.samples;
  return d;
}

ModelConfig model_config(std::size_t nodes, std::size_t features, std::size_t t_past,
                         std::size_t t_future, std::size_t n_block, double m_neuron,
                         std::uint64_t seed, bool pre_activation, bool random_projection,
                         bool frequency_domain, bool complex_bias) {
  ModelConfig c;
  c.nodes = nodes;
  c.features = features;
  c.t_past = t_past;
  c.t_future = t_future;
  c.n_block = n_block;
  c.m_neuron = m_neuron;
  c.seed = seed;
  c.pre_activation = pre_activation;
  c.random_projection = random_projection;
  c.frequency_domain = frequency_domain;
  c.complex_bias = complex_bias;
  return c;
}

RawSeries series_from(const FloatArray& values, std::uint32_t interval_minutes) {
  if (values.ndim() == 2) {
    return make_series(to_tensor<float>(values), interval_minutes);
  }
  if (values.ndim() != 3) throw DimensionError("expected an [n x t] or [n x d x t] array");
  return RawSeries{to_tensor<float>(values), interval_minutes, 0, std::nullopt};
}

}  // namespace

PYBIND11_MODULE(_rpmixer, m) {
  m.doc() = "RPMixer forecasting core";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_RuntimeError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  m.def("projection_width", &projection_width, py::arg("nodes"), py::arg("m_neuron"));

  m.def(
      "rfft",
      [](const DoubleArray& x) {
        const auto spec = rfft(to_tensor<double>(x));
        return py::make_tuple(to_array(spec.real), to_array(spec.imag));
      },
      py::arg("signal"), "One-sided DFT over the last axis; returns (real, imag).");
  m.def(
      "irfft",
      [](const DoubleArray& re, const DoubleArray& im, std::size_t length) {
        return to_array(irfft(ComplexSpectrum<double>{to_tensor<double>(re), to_tensor<double>(im)},
                              length));
      },
      py::arg("real"), py::arg("imag"), py::arg("length"));

  m.def(
      "generate_synthetic",
      [](const py::kwargs& kwargs) {
        ExperimentConfig config;
        for (const auto& item : kwargs) {
          const std::string key = py::str(item.first);
          std::string value = py::str(item.second);
          if (py::isinstance<py::bool_>(item.second)) value = item.second.cast<bool>() ? "true" : "false";
          apply_setting(config, key == "seed" ? key : "synthetic." + key, value);
        }
        config.validate();
        return to_array(synthetic_generate(config.synthetic_spec()).values);
      },
      "Synthetic [n x 1 x t] series; keyword arguments are synthetic.* config keys and seed.");

  m.def(
      "load_dataset", [](const std::string& path) { return to_array(load_dataset(path).values); },
      py::arg("path"));
  m.def(
      "save_dataset",
      [](const FloatArray& values, const std::string& path, std::uint32_t interval_minutes) {
        save_binary(series_from(values, interval_minutes), path);
      },
      py::arg("values"), py::arg("path"), py::arg("interval_minutes") = 5);

  m.def(
      "compute_metrics",
      [](const FloatArray& pred, const FloatArray& target, bool mask_zero) {
        const Tensor p = to_tensor<float>(pred), t = to_tensor<float>(target);
        require_same_shape(p.shape(), t.shape(), "compute_metrics");
        return metrics_dict(compute_metrics(p.data(), t.data(), mask_zero));
      },
      py::arg("pred"), py::arg("target"), py::arg("mask_zero") = true);
  m.def(
      "metric_report",
      [](const FloatArray& pred, const FloatArray& target, bool mask_zero) {
        return report_dict(metric_report(to_tensor<float>(pred), to_tensor<float>(target), mask_zero));
      },
      py::arg("pred"), py::arg("target"), py::arg("mask_zero") = true);

  m.def(
      "jl_check",
      [](std::size_t n, std::size_t n_rand, std::size_t num_vectors, std::uint64_t seed) {
        const JLReport r = jl_check(n, n_rand, num_vectors, seed);
        py::dict d;
        d["median"] = r.median;
        d["q1"] = r.q1;
        d["q3"] = r.q3;
        d["iqr"] = r.iqr();
        d["distortions"] = r.distortions;
        return d;
      },
      py::arg("n"), py::arg("n_rand"), py::arg("num_vectors") = 100, py::arg("seed") = 0);

  py::class_<RPMixerModel<float>>(m, "Model")
      .def(py::init([](std::size_t nodes, std::size_t features, std::size_t t_past,
                       std::size_t t_future, std::size_t n_block, double m_neuron,
                       std::uint64_t seed, bool pre_activation, bool random_projection,
                       bool frequency_domain, bool complex_bias) {
             return RPMixerModel<float>(model_config(nodes, features, t_past, t_future, n_block,
                                                     m_neuron, seed, pre_activation,
                                                     random_projection, frequency_domain,
                                                     complex_bias));
           }),
           py::arg("nodes"), py::arg("features") = 1, py::arg("t_past") = 12,
           py::arg("t_future") = 12, py::arg("n_block") = 8, py::arg("m_neuron") = 1.0,
           py::arg("seed") = 0, py::arg("pre_activation") = true,
           py::arg("random_projection") = true, py::arg("frequency_domain") = true,
           py::arg("complex_bias") = true)
      .def_static(
          "load",
          [](const std::string& path) { return restore_run(load_checkpoint(path)).model; },
          py::arg("checkpoint"))
      .def(
          "forward",
          [](const RPMixerModel<float>& model, const FloatArray& x) {
            return to_array(model.forward(to_tensor<float>(x)));
          },
          py::arg("x"), "[n x d*t_past] or [B x n x d*t_past] -> [.. x n x t_future]")
      .def(
          "path_decompose",
          [](const RPMixerModel<float>& model, const FloatArray& x) {
            const auto d = model.path_decompose(to_tensor<float>(x));
            py::dict out;
            out["y0"] = to_array(d.y0);
            py::list contributions;
            for (const auto& c : d.contributions) contributions.append(to_array(c));
            out["contributions"] = contributions;
            out["y"] = to_array(d.y);
            return out;
          },
          py::arg("x"))
      .def("state_dict",
           [](RPMixerModel<float>& model) {
             py::dict out;
             for (const auto& ref : model.state()) out[py::str(ref.name)] = to_array(*ref.value);
             return out;
           })
      .def_property_readonly("n_rand", [](const RPMixerModel<float>& m) { return m.config().n_rand(); })
      .def_property_readonly("trainable_parameter_count",
                             &RPMixerModel<float>::trainable_parameter_count)
      .def_property_readonly("frozen_parameter_count", &RPMixerModel<float>::frozen_parameter_count);

  m.def(
      "parse_config",
      [](const std::string& text) { return serialize_config(parse_config(text)); },
      py::arg("text"), "Validates a config and returns it with every key filled in.");

  m.def(
      "train",
      [](const std::string& config_text, const std::string& out_dir) {
        std::ostringstream log;
        const TrainSummary s = run_train(parse_config(config_text), out_dir, log);
        py::dict d;
        py::list history;
        for (const auto& e : s.history) {
          py::dict row;
          row["epoch"] = e.epoch;
          row["train_loss"] = e.train_loss;
          row["val_mae"] = e.val_mae;
          history.append(row);
        }
        d["history"] = history;
        d["best_epoch"] = s.best_epoch;
        d["best_val_mae"] = s.best_val_mae;
        d["val"] = report_dict(s.val_report);
        d["trainable_parameters"] = s.trainable_parameters;
        d["log"] = log.str();
        return d;
      },
      py::arg("config_text"), py::arg("out_dir"),
      "Trains from config text and writes checkpoint, history and config into out_dir.");

  m.def(
      "evaluate",
      [](const std::string& checkpoint, const std::string& split, const std::string& out_dir) {
        std::ostringstream log;
        const auto s = run_evaluate(checkpoint, std::nullopt, parse_split(split), out_dir, log);
        return report_dict(s.report);
      },
      py::arg("checkpoint"), py::arg("split") = "test", py::arg("out_dir") = "out");

  m.def(
      "main",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"rpmixer"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line interface; returns (exit_code, stdout, stderr).");
}
