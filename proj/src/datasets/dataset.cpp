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

#include "vadkit/datasets/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vadkit/core/rng.hpp"
#include "vadkit/datasets/png_io.hpp"

namespace vadkit {
namespace fs = std::filesystem;

const char* to_string(Label label) {
  switch (label) {
    case Label::normal: return "normal";
    case Label::anomalous: return "anomalous";
    case Label::unknown: return "unknown";
  }
  return "?";
}

const char* to_string(Split split) { return split == Split::train ? "train" : "test"; }

std::size_t ImageRecord::anomalous_pixels() const {
  if (!mask) return 0;
  std::size_t n = 0;
  for (auto v : mask->values()) n += v != 0;
  return n;
}

// ---------------------------------------------------------------------------
// MVTec-style folder layout

namespace {

std::vector<fs::path> list_pngs(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

DatasetSplit load_mvtec_layout(const fs::path& root, const std::string& category) {
  const fs::path base = root / category;
  const fs::path train_dir = base / "train" / "good";
  const fs::path test_dir = base / "test";
  if (!fs::is_directory(train_dir)) throw LayoutError("missing directory " + train_dir.string());
  if (!fs::is_directory(test_dir)) throw LayoutError("missing directory " + test_dir.string());

  DatasetSplit split;
  split.category = category;
  for (const auto& file : list_pngs(train_dir)) {
    ImageRecord r;
    r.id = category + "/train/good/" + file.stem().string();
    r.pixels = png::read_rgb(file);
    r.label = Label::normal;
    r.category = category;
    r.split = Split::train;
    split.train.push_back(std::move(r));
  }
  if (split.train.empty()) throw LayoutError("no training images in " + train_dir.string());

  std::vector<fs::path> defect_dirs;
  for (const auto& entry : fs::directory_iterator(test_dir)) {
    if (entry.is_directory()) defect_dirs.push_back(entry.path());
  }
  std::sort(defect_dirs.begin(), defect_dirs.end());

  for (const auto& dir : defect_dirs) {
    const std::string defect = dir.filename().string();
    const bool good = defect == "good";
    for (const auto& file : list_pngs(dir)) {
      ImageRecord r;
      r.id = category + "/test/" + defect + "/" + file.stem().string();
      r.pixels = png::read_rgb(file);
      r.category = category;
      r.split = Split::test;
      if (good) {
        r.label = Label::normal;
      } else {
        const fs::path mask_path =
            base / "ground_truth" / defect / (file.stem().string() + "_mask.png");
        if (!fs::is_regular_file(mask_path)) {
          throw MaskMismatch("no mask for anomalous image " + file.string() + " (expected " +
                             mask_path.string() + ")");
        }
        Mask m = png::read_mask(mask_path);
        if (m.height() != r.height() || m.width() != r.width()) {
          throw MaskMismatch("mask " + mask_path.string() + " has different dimensions than " +
                             file.string());
        }
        r.label = Label::anomalous;
        r.mask = std::move(m);
        if (r.anomalous_pixels() == 0) {
          throw MaskMismatch("mask " + mask_path.string() + " has no positive pixel");
        }
      }
      split.test.push_back(std::move(r));
    }
  }
  return split;
}

// ---------------------------------------------------------------------------
// Synthetic generator

std::uint64_t synthetic_record_seed(std::uint64_t seed, std::string_view role, int index) {
  return substream_seed(seed, std::string(role) + "/" + std::to_string(index));
}

Tensor3 render_synthetic_background(int size, std::uint64_t record_seed, float background) {
  Rng rng(record_seed);
  // Two low-frequency plane waves plus per-pixel gaussian noise.
  const double two_pi = 2.0 * std::numbers::pi;
  const double f1x = 1 + static_cast<double>(rng.uniform_index(4));
  const double f1y = 1 + static_cast<double>(rng.uniform_index(4));
  const double f2x = 1 + static_cast<double>(rng.uniform_index(4));
  const double f2y = 1 + static_cast<double>(rng.uniform_index(4));
  const double p1 = rng.uniform(0.0, two_pi);
  const double p2 = rng.uniform(0.0, two_pi);

  Tensor3 img(3, size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = static_cast<double>(x) / size;
      const double v = static_cast<double>(y) / size;
      const double wave = 0.02 * std::sin(two_pi * (f1x * u + f1y * v) + p1) +
                          0.015 * std::sin(two_pi * (f2x * u - f2y * v) + p2);
      for (int c = 0; c < 3; ++c) {
        const double value = background + wave + 0.01 * rng.normal();
        img.at(c, y, x) = static_cast<float>(std::clamp(value, 0.0, 1.0));
      }
    }
  }
  return img;
}

ImageRecord make_synthetic_anomalous(const std::string& id, int size, std::uint64_t record_seed,
                                     float background) {
  ImageRecord r;
  r.id = id;
  r.pixels = render_synthetic_background(size, record_seed, background);
  r.label = Label::anomalous;

  Rng rng(splitmix64(record_seed));
  const int lo = static_cast<int>(std::ceil(0.10 * size));
  const int hi = static_cast<int>(std::floor(0.25 * size));
  const int bw = lo + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
  const int bh = lo + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
  const int x0 = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(size - bw + 1)));
  const int y0 = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(size - bh + 1)));

  Mask mask(size, size, 0);
  for (int y = y0; y < y0 + bh; ++y) {
    for (int x = x0; x < x0 + bw; ++x) {
      mask.at(y, x) = 1;
      for (int c = 0; c < 3; ++c) {
        float& p = r.pixels.at(c, y, x);
        p = std::min(1.0f, p + 0.4f);
      }
    }
  }
  r.mask = std::move(mask);
  return r;
}

DatasetSplit generate_synthetic(const SyntheticOptions& o) {
  if (o.size < 32) throw InvalidArgument("generate_synthetic: size must be >= 32");
  if (o.train_normal < 0 || o.test_normal < 0 || o.test_anomalous < 0) {
    throw InvalidArgument("generate_synthetic: negative count");
  }
  DatasetSplit split;
  split.category = o.category;

  auto make_normal = [&](const std::string& id, std::uint64_t s, Split which) {
    ImageRecord r;
    r.id = id;
    r.pixels = render_synthetic_background(o.size, s, o.background);
    r.label = Label::normal;
    r.category = o.category;
    r.split = which;
    return r;
  };
  auto name = [&](const char* part, int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", i);
    return o.category + "/" + part + buf;
  };

  for (int i = 0; i < o.train_normal; ++i) {
    split.train.push_back(make_normal(name("train/good_", i),
                                      synthetic_record_seed(o.seed, "train", i), Split::train));
  }
  for (int i = 0; i < o.test_normal; ++i) {
    split.test.push_back(make_normal(name("test/good_", i),
                                     synthetic_record_seed(o.seed, "test_normal", i), Split::test));
  }
  for (int i = 0; i < o.test_anomalous; ++i) {
    ImageRecord r = make_synthetic_anomalous(
        name("test/blob_", i), o.size, synthetic_record_seed(o.seed, "test_anomalous", i),
        o.background);
    r.category = o.category;
    r.split = Split::test;
    split.test.push_back(std::move(r));
  }
  return split;
}

DatasetSplit generate_synthetic(int n_normal, int n_anomalous, int size, std::uint64_t seed) {
  SyntheticOptions o;
  o.train_normal = n_normal;
  o.test_normal = 0;
  o.test_anomalous = n_anomalous;
  o.size = size;
  o.seed = seed;
  return generate_synthetic(o);
}

// ---------------------------------------------------------------------------
// Preprocessing

namespace {

struct Tap {
  int i0, i1;
  double frac;
};

// Half-pixel-center sampling positions, clamped at the borders.
std::vector<Tap> bilinear_taps(int in, int out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    if (src < 0) src = 0;
    int i0 = static_cast<int>(std::floor(src));
    if (i0 > in - 1) i0 = in - 1;
    const int i1 = std::min(i0 + 1, in - 1);
    taps[static_cast<std::size_t>(o)] = {i0, i1, src - i0};
  }
  return taps;
}

void resize_plane(std::span<const float> src, int h, int w, std::span<float> dst, int oh, int ow,
                  const std::vector<Tap>& ty, const std::vector<Tap>& tx) {
  for (int y = 0; y < oh; ++y) {
    const Tap& a = ty[static_cast<std::size_t>(y)];
    for (int x = 0; x < ow; ++x) {
      const Tap& b = tx[static_cast<std::size_t>(x)];
      const double v00 = src[static_cast<std::size_t>(a.i0) * w + b.i0];
      const double v01 = src[static_cast<std::size_t>(a.i0) * w + b.i1];
      const double v10 = src[static_cast<std::size_t>(a.i1) * w + b.i0];
      const double v11 = src[static_cast<std::size_t>(a.i1) * w + b.i1];
      const double top = v00 * (1.0 - b.frac) + v01 * b.frac;
      const double bottom = v10 * (1.0 - b.frac) + v11 * b.frac;
      dst[static_cast<std::size_t>(y) * ow + x] =
          static_cast<float>(top * (1.0 - a.frac) + bottom * a.frac);
    }
  }
  (void)h;
}

}  // namespace

Tensor3 resize_bilinear(const Tensor3& image, int height, int width) {
  if (height <= 0 || width <= 0) throw InvalidArgument("resize: target must be positive");
  if (image.height() == height && image.width() == width) return image;
  const auto ty = bilinear_taps(image.height(), height);
  const auto tx = bilinear_taps(image.width(), width);
  Tensor3 out(image.channels(), height, width);
  for (int c = 0; c < image.channels(); ++c) {
    resize_plane(image.plane(c), image.height(), image.width(), out.plane(c), height, width, ty, tx);
  }
  return out;
}

ScoreMap resize_bilinear(const ScoreMap& map, int height, int width) {
  if (height <= 0 || width <= 0) throw InvalidArgument("resize: target must be positive");
  if (map.height() == height && map.width() == width) return map;
  const auto ty = bilinear_taps(map.height(), height);
  const auto tx = bilinear_taps(map.width(), width);
  ScoreMap out(height, width);
  resize_plane(map.values(), map.height(), map.width(), out.values(), height, width, ty, tx);
  return out;
}

Mask resize_mask(const Mask& mask, int height, int width) {
  if (height <= 0 || width <= 0) throw InvalidArgument("resize: target must be positive");
  Mask out(height, width);
  const double sy = static_cast<double>(mask.height()) / height;
  const double sx = static_cast<double>(mask.width()) / width;
  for (int y = 0; y < height; ++y) {
    const int iy = std::min(static_cast<int>(std::floor((y + 0.5) * sy)), mask.height() - 1);
    for (int x = 0; x < width; ++x) {
      const int ix = std::min(static_cast<int>(std::floor((x + 0.5) * sx)), mask.width() - 1);
      out.at(y, x) = mask.at(iy, ix) ? 1 : 0;
    }
  }
  return out;
}

Tensor3 preprocess(const Tensor3& pixels, int target, const Normalization& norm) {
  if (target <= 0) throw InvalidArgument("preprocess: target must be positive");
  if (pixels.channels() != 3) throw InvalidArgument("preprocess: expected 3 channels");
  Tensor3 out = resize_bilinear(pixels, target, target);
  for (int c = 0; c < 3; ++c) {
    const float mean = norm.mean[static_cast<std::size_t>(c)];
    const float sd = norm.std[static_cast<std::size_t>(c)];
    for (float& v : out.plane(c)) v = (v - mean) / sd;
  }
  return out;
}

Tensor3 preprocess(const ImageRecord& record, int target, const Normalization& norm) {
  return preprocess(record.pixels, target, norm);
}

}  // namespace vadkit
