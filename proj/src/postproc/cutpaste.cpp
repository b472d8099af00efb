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

#include "vadkit/postproc/cutpaste.hpp"

#include <cmath>

#include "vadkit/core/rng.hpp"

namespace vadkit {

CutPasteResult cutpaste(const Tensor3& image, std::uint64_t seed, const CutPasteOptions& o) {
  const int h = image.height(), w = image.width();
  const double total = static_cast<double>(h) * w;
  if (total * o.area_min < 1.0 || h < 2 || w < 2) {
    throw ImageTooSmall("cutpaste: image " + std::to_string(h) + "x" + std::to_string(w) +
                        " cannot hold the minimum patch");
  }
  Rng rng(seed);
  const double log_lo = std::log(o.aspect_min), log_hi = std::log(o.aspect_max);

  // Rounding can push a draw outside the admissible area, so redraw.
  int pw = 0, ph = 0;
  bool found = false;
  for (int attempt = 0; attempt < 1000 && !found; ++attempt) {
    const double area = rng.uniform(o.area_min, o.area_max) * total;
    const double aspect = std::exp(rng.uniform(log_lo, log_hi));
    pw = static_cast<int>(std::lround(std::sqrt(area * aspect)));
    ph = static_cast<int>(std::lround(std::sqrt(area / aspect)));
    if (pw < 1 || ph < 1 || pw > w || ph > h) continue;
    if (pw == w && ph == h) continue;  // source and destination would coincide
    const double ratio = static_cast<double>(pw) * ph / total;
    found = ratio >= o.area_min && ratio <= o.area_max;
  }
  if (!found) throw ImageTooSmall("cutpaste: no admissible patch for this image size");

  const int sx = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(w - pw + 1)));
  const int sy = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(h - ph + 1)));
  int dx = sx, dy = sy;
  while (dx == sx && dy == sy) {
    dx = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(w - pw + 1)));
    dy = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(h - ph + 1)));
  }

  CutPasteResult r{image, Mask(h, w, 0)};
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < ph; ++y) {
      for (int x = 0; x < pw; ++x) r.image.at(c, dy + y, dx + x) = image.at(c, sy + y, sx + x);
    }
  }
  for (int y = 0; y < ph; ++y) {
    for (int x = 0; x < pw; ++x) r.mask.at(dy + y, dx + x) = 1;
  }
  return r;
}

}  // namespace vadkit
