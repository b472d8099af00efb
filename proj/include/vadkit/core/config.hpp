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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vadkit/core/registry.hpp"

namespace vadkit {

/// Component name plus its fully defaulted parameters.
struct ComponentSpec {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
};

/// Validated run description. Every name resolves in the registry it was
/// validated against and every parameter carries its effective value.
struct RunConfig {
  std::uint64_t seed = 0;
  ComponentSpec dataset;
  ComponentSpec backbone;  // params include "hooks"
  ComponentSpec method;
  ComponentSpec trainer;
  ComponentSpec scenario;
  std::vector<std::string> metrics;
  std::string output_dir;
  std::vector<std::string> overrides;  // as applied, in order

  std::vector<std::string> hooks() const;
  /// Complete effective configuration, in the input file's schema.
  nlohmann::json to_json() const;
  /// 16 hex digits of FNV-1a over the canonical dump of to_json().
  std::string digest() const;
  /// Seed for one component, derived from the global seed.
  std::uint64_t component_seed(const std::string& component) const;
};

/// Sets a dotted path ("method.fraction=0.25"). The value is parsed as JSON
/// when possible, otherwise taken as a string. Throws ConfigError.
void apply_override(nlohmann::json& document, const std::string& assignment);

/// Validates a config document: unknown keys, missing required sections,
/// unregistered names and parameter types all raise ConfigError subclasses.
RunConfig parse_config(const nlohmann::json& document, const Registry& registry,
                       const std::vector<std::string>& overrides = {});

/// Reads and validates a JSON config file. Throws ConfigParseError for a
/// missing or malformed file.
RunConfig load_config(const std::filesystem::path& path, const Registry& registry,
                      const std::vector<std::string>& overrides = {});

}  // namespace vadkit
