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

#pragma once

#include <cstdint>
#include <utility>

#include "vadkit/core/tensor.hpp"

namespace vadkit {

struct CutPasteOptions {
  double area_min = 0.02;
  double area_max = 0.15;
  double aspect_min = 0.3;
  double aspect_max = 3.3;
};

struct CutPasteResult {
  Tensor3 image;
  Mask mask;  // 1 on the destination rectangle
};

/// Copies a seeded rectangle of the image to a different seeded location.
/// Area ratio and aspect are drawn from the option ranges (aspect log-uniform).
/// Throws ImageTooSmall when no admissible rectangle exists.
CutPasteResult cutpaste(const Tensor3& image, std::uint64_t seed, const CutPasteOptions& options = {});

}  // namespace vadkit
