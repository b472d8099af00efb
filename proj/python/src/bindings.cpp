/*
 * Copyright 2026 The vadkit Authors. All Rights Reserved.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "vadkit/compression/wire_format.hpp"
#include "vadkit/core/config.hpp"
#include "vadkit/core/errors.hpp"
#include "vadkit/datasets/dataset.hpp"
#include "vadkit/evaluation/metrics.hpp"
#include "vadkit/methods/patchcore.hpp"
#include "vadkit/pipeline/components.hpp"
#include "vadkit/pipeline/run.hpp"

namespace py = pybind11;
using namespace vadkit;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

std::vector<double> to_scores(const DoubleArray& a) { return {a.data(), a.data() + a.size()}; }

std::vector<std::uint8_t> to_labels(const ByteArray& a) { return {a.data(), a.data() + a.size()}; }

ScoreMap to_map(const FloatArray& a) {
  if (a.ndim() != 2) throw InvalidArgument("anomaly maps must be 2-D");
  ScoreMap m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.values().begin());
  return m;
}

Mask to_mask(const ByteArray& a) {
  if (a.ndim() != 2) throw InvalidArgument("masks must be 2-D");
  Mask m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  for (py::ssize_t i = 0; i < a.size(); ++i) m[static_cast<std::size_t>(i)] = a.data()[i] != 0;
  return m;
}

Tensor3 to_tensor(const FloatArray& a) {
  if (a.ndim() != 3) throw InvalidArgument("feature maps must be (C, H, W)");
  Tensor3 t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
  std::copy(a.data(), a.data() + a.size(), t.values().begin());
  return t;
}

py::array_t<float> from_tensor(const Tensor3& t) {
  py::array_t<float> out({t.channels(), t.height(), t.width()});
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

// Stacks records into (N, C, H, W) images and (N, H, W) masks (zeros without a mask).
py::dict records_to_arrays(const std::vector<ImageRecord>& records) {
  py::dict d;
  const py::ssize_t n = static_cast<py::ssize_t>(records.size());
  const int c = n ? records[0].pixels.channels() : 0;
  const int h = n ? records[0].height() : 0;
  const int w = n ? records[0].width() : 0;
  py::array_t<float> images({n, static_cast<py::ssize_t>(c), static_cast<py::ssize_t>(h), static_cast<py::ssize_t>(w)});
  py::array_t<std::uint8_t> masks({n, static_cast<py::ssize_t>(h), static_cast<py::ssize_t>(w)});
  py::list ids;
  float* ip = images.mutable_data();
  std::uint8_t* mp = masks.mutable_data();
  for (const auto& r : records) {
    ip = std::copy(r.pixels.values().begin(), r.pixels.values().end(), ip);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    if (r.mask) {
      mp = std::copy(r.mask->values().begin(), r.mask->values().end(), mp);
    } else {
      mp = std::fill_n(mp, plane, std::uint8_t{0});
    }
    ids.append(r.id);
  }
  // The scalar-count constructor yields zero strides here; pass the shape as a container.
  py::array_t<std::uint8_t> labels(std::vector<py::ssize_t>{n});
  std::uint8_t* lp = labels.mutable_data();
  for (const auto& r : records) *lp++ = r.label == Label::anomalous ? 1 : 0;
  d["images"] = images;
  d["masks"] = masks;
  d["labels"] = labels;
  d["ids"] = ids;
  return d;
}

std::string run_json(const std::string& config_path, const std::optional<std::string>& output_dir,
                     const std::vector<std::string>& overrides, const std::string& command, bool write_files) {
  const Registry& registry = default_registry();
  RunConfig cfg = load_config(config_path, registry, overrides);
  if (output_dir) cfg.output_dir = *output_dir;
  RunOptions options;
  options.command = command;
  options.write_files = write_files;
  py::gil_scoped_release release;
  return run_experiment(cfg, registry, options).report.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the vadkit anomaly detection toolkit";

  static py::exception<Error> base(m, "VadkitError");
  static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      config_error(e.what());
    } catch (const Error& e) {
      base(e.what());
    }
  });

  m.def("run_json", &run_json, py::arg("config"), py::arg("output_dir") = std::nullopt,
        py::arg("overrides") = std::vector<std::string>{}, py::arg("command") = "run", py::arg("write_files") = true,
        "Run an experiment from a config file and return report.json as a string.");

  m.def("auroc", [](const DoubleArray& s, const ByteArray& y) { return auroc(to_scores(s), to_labels(y)); },
        py::arg("scores"), py::arg("labels"));
  m.def("auprc", [](const DoubleArray& s, const ByteArray& y) { return auprc(to_scores(s), to_labels(y)); },
        py::arg("scores"), py::arg("labels"));
  m.def(
      "f1_max",
      [](const DoubleArray& s, const ByteArray& y) {
        const F1Result r = f1_max(to_scores(s), to_labels(y));
        return py::make_tuple(r.f1, r.threshold);
      },
      py::arg("scores"), py::arg("labels"), "Best F1 over thresholds, returned as (f1, threshold).");
  m.def(
      "aupro",
      [](const std::vector<FloatArray>& maps, const std::vector<ByteArray>& masks, double fpr_limit) {
        std::vector<ScoreMap> sm;
        std::vector<Mask> mk;
        for (const auto& a : maps) sm.push_back(to_map(a));
        for (const auto& a : masks) mk.push_back(to_mask(a));
        return aupro(sm, mk, fpr_limit);
      },
      py::arg("maps"), py::arg("masks"), py::arg("fpr_limit") = 0.3);

  m.def(
      "kcenter_greedy",
      [](const FloatArray& points, std::size_t k, std::uint64_t seed) {
        if (points.ndim() != 2) throw InvalidArgument("points must be (m, d)");
        PointMatrix p;
        p.rows = static_cast<std::size_t>(points.shape(0));
        p.cols = static_cast<std::size_t>(points.shape(1));
        p.data.assign(points.data(), points.data() + points.size());
        return kcenter_greedy(p, k, seed);
      },
      py::arg("points"), py::arg("k"), py::arg("seed") = 0);

  m.def(
      "encode_features",
      [](const std::vector<FloatArray>& maps, int bits) {
        FeaturePyramid p;
        for (std::size_t i = 0; i < maps.size(); ++i) p.maps.push_back({"m" + std::to_string(i), to_tensor(maps[i])});
        const EncodedFeatures enc = encode_features(p, bits);
        return py::make_tuple(py::bytes(reinterpret_cast<const char*>(enc.bytes.data()), enc.bytes.size()),
                              enc.report.to_json().dump());
      },
      py::arg("maps"), py::arg("bits"), "Encode (C, H, W) maps; returns (message bytes, bitrate report JSON).");
  m.def(
      "decode_features",
      [](const py::bytes& message) {
        const std::string raw = message;
        const std::vector<std::uint8_t> bytes(raw.begin(), raw.end());
        const FeaturePyramid p = decode_features(bytes);
        py::list out;
        for (const auto& fm : p.maps) out.append(from_tensor(fm.values));
        return out;
      },
      py::arg("message"));

  m.def(
      "synthetic",
      [](int train_normal, int test_normal, int test_anomalous, int size, std::uint64_t seed) {
        SyntheticOptions o;
        o.train_normal = train_normal;
        o.test_normal = test_normal;
        o.test_anomalous = test_anomalous;
        o.size = size;
        o.seed = seed;
        const DatasetSplit split = generate_synthetic(o);
        py::dict d;
        d["train"] = records_to_arrays(split.train);
        d["test"] = records_to_arrays(split.test);
        return d;
      },
      py::arg("train_normal") = 200, py::arg("test_normal") = 50, py::arg("test_anomalous") = 50,
      py::arg("size") = 64, py::arg("seed") = 0);
}
