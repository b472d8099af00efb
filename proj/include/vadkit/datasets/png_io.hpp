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
#include <filesystem>

#include "vadkit/core/tensor.hpp"

namespace vadkit::png {

/// Reads any PNG as RGB in [0, 1].
Tensor3 read_rgb(const std::filesystem::path& path);
/// Reads any PNG as a binary mask (gray >= 0.5 is positive).
Mask read_mask(const std::filesystem::path& path);

/// Writes 8-bit RGB (values clipped to [0, 1]).
void write_rgb(const std::filesystem::path& path, const Tensor3& image);
/// Writes an 8-bit gray mask with values {0, 255}.
void write_mask(const std::filesystem::path& path, const Mask& mask);
/// Writes a 16-bit grayscale PNG.
void write_gray16(const std::filesystem::path& path, const Grid<std::uint16_t>& image);
Grid<std::uint16_t> read_gray16(const std::filesystem::path& path);

}  // namespace vadkit::png
