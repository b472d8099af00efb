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

#include <any>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vadkit/core/errors.hpp"

namespace vadkit {

enum class ComponentKind { dataset, backbone, method, trainer, metric, scenario };

const char* to_string(ComponentKind kind);
/// Throws InvalidArgument for an unknown kind name.
ComponentKind parse_component_kind(const std::string& name);
const std::vector<ComponentKind>& all_component_kinds();

/// One registered component.
///
/// `defaults` lists every accepted parameter with its default; a null default
/// accepts any value. `validate`, when set, checks a fully defaulted spec
/// (e.g. hook names against the backbone) and throws ConfigError.
struct RegistryEntry {
  std::any factory;
  nlohmann::json defaults = nlohmann::json::object();
  std::string description;
  std::function<void(const nlohmann::json& spec)> validate;
};

/// (kind, name) -> entry. Populate at startup, then treat as read-only.
class Registry {
 public:
  /// Throws DuplicateRegistration, InvalidArgument for an empty name.
  void add(ComponentKind kind, const std::string& name, RegistryEntry entry);

  template <class Factory>
  void register_factory(ComponentKind kind, const std::string& name, Factory factory,
                        nlohmann::json defaults = nlohmann::json::object(), std::string description = {}) {
    RegistryEntry e;
    e.factory = std::move(factory);
    e.defaults = std::move(defaults);
    e.description = std::move(description);
    add(kind, name, std::move(e));
  }

  bool contains(ComponentKind kind, const std::string& name) const;
  /// Throws UnknownComponent.
  const RegistryEntry& entry(ComponentKind kind, const std::string& name) const;

  /// Factory of the requested type. Throws UnknownComponent, or
  /// InvalidArgument when the stored factory has another type.
  template <class Factory>
  const Factory& resolve(ComponentKind kind, const std::string& name) const {
    const RegistryEntry& e = entry(kind, name);
    const auto* f = std::any_cast<Factory>(&e.factory);
    if (f == nullptr) {
      throw InvalidArgument(std::string(to_string(kind)) + " '" + name + "' has an incompatible factory type");
    }
    return *f;
  }

  /// Names of one kind, lexicographically ordered.
  std::vector<std::string> list(ComponentKind kind) const;

 private:
  mutable std::mutex mutex_;
  std::map<std::pair<ComponentKind, std::string>, RegistryEntry> entries_;
};

}  // namespace vadkit
