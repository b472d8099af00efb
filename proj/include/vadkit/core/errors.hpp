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

#include <stdexcept>
#include <string>

namespace vadkit {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Stable, machine-readable error kind (used in CLI error records).
  virtual const char* kind() const noexcept { return "Error"; }
};

#define VADKIT_DEFINE_ERROR(Name, Base)                              \
  class Name : public Base {                                         \
   public:                                                           \
    using Base::Base;                                                \
    const char* kind() const noexcept override { return #Name; }     \
  }

// Configuration problems map to CLI exit code 2.
VADKIT_DEFINE_ERROR(ConfigError, Error);
VADKIT_DEFINE_ERROR(ConfigParseError, ConfigError);
VADKIT_DEFINE_ERROR(UnknownComponent, ConfigError);
VADKIT_DEFINE_ERROR(MissingField, ConfigError);
VADKIT_DEFINE_ERROR(DuplicateRegistration, Error);

VADKIT_DEFINE_ERROR(InvalidArgument, Error);

// datasets
VADKIT_DEFINE_ERROR(LayoutError, Error);
VADKIT_DEFINE_ERROR(MaskMismatch, Error);
VADKIT_DEFINE_ERROR(ImageIoError, Error);

// scenarios
VADKIT_DEFINE_ERROR(PoolExhausted, Error);
VADKIT_DEFINE_ERROR(InsufficientData, Error);
VADKIT_DEFINE_ERROR(DuplicateTask, Error);

// backbones / methods / trainers
VADKIT_DEFINE_ERROR(UnknownLayer, Error);
VADKIT_DEFINE_ERROR(DegenerateInput, Error);
VADKIT_DEFINE_ERROR(ShapeMismatch, Error);
VADKIT_DEFINE_ERROR(EmptyDataset, Error);
VADKIT_DEFINE_ERROR(NonFiniteLoss, Error);
VADKIT_DEFINE_ERROR(CheckpointError, Error);

// evaluation: a metric that has no value for the given input
VADKIT_DEFINE_ERROR(MetricUndefined, Error);
VADKIT_DEFINE_ERROR(SingleClass, MetricUndefined);
VADKIT_DEFINE_ERROR(NoPositives, MetricUndefined);
VADKIT_DEFINE_ERROR(NoRegions, MetricUndefined);

// compression
VADKIT_DEFINE_ERROR(NonFiniteInput, Error);
VADKIT_DEFINE_ERROR(UnsupportedArray, Error);
VADKIT_DEFINE_ERROR(DecodeError, Error);
VADKIT_DEFINE_ERROR(BadMagic, DecodeError);
VADKIT_DEFINE_ERROR(VersionMismatch, DecodeError);
VADKIT_DEFINE_ERROR(TruncatedPayload, DecodeError);
VADKIT_DEFINE_ERROR(TransportError, Error);

// postproc
VADKIT_DEFINE_ERROR(ImageTooSmall, Error);

#undef VADKIT_DEFINE_ERROR

}  // namespace vadkit
