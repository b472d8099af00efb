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

#include "vadkit/core/registry.hpp"

namespace vadkit {

const std::vector<ComponentKind>& all_component_kinds() {
  static const std::vector<ComponentKind> kinds = {ComponentKind::dataset, ComponentKind::backbone,
                                                   ComponentKind::method,  ComponentKind::trainer,
                                                   ComponentKind::metric,  ComponentKind::scenario};
  return kinds;
}

const char* to_string(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::dataset: return "dataset";
    case ComponentKind::backbone: return "backbone";
    case ComponentKind::method: return "method";
    case ComponentKind::trainer: return "trainer";
    case ComponentKind::metric: return "metric";
    case ComponentKind::scenario: return "scenario";
  }
  return "?";
}

ComponentKind parse_component_kind(const std::string& name) {
  for (ComponentKind k : all_component_kinds()) {
    if (name == to_string(k)) return k;
  }
  throw InvalidArgument("unknown component kind '" + name + "'");
}

void Registry::add(ComponentKind kind, const std::string& name, RegistryEntry entry) {
  if (name.empty()) throw InvalidArgument("component name must not be empty");
  if (!entry.defaults.is_object()) throw InvalidArgument("component defaults must be a JSON object");
  std::lock_guard lock(mutex_);
  const auto [it, inserted] = entries_.try_emplace({kind, name}, std::move(entry));
  if (!inserted) {
    throw DuplicateRegistration(std::string(to_string(kind)) + " '" + name + "' is already registered");
  }
}

bool Registry::contains(ComponentKind kind, const std::string& name) const {
  std::lock_guard lock(mutex_);
  return entries_.count({kind, name}) > 0;
}

const RegistryEntry& Registry::entry(ComponentKind kind, const std::string& name) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find({kind, name});
  if (it == entries_.end()) {
    std::string known;
    for (const auto& [key, _] : entries_) {
      if (key.first == kind) known += (known.empty() ? "" : ", ") + key.second;
    }
    throw UnknownComponent("unknown " + std::string(to_string(kind)) + " '" + name + "' (registered: " +
                           (known.empty() ? "none" : known) + ")");
  }
  return it->second;  // node-based map: stable after later insertions
}

std::vector<std::string> Registry::list(ComponentKind kind) const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> names;
  for (const auto& [key, _] : entries_) {
    if (key.first == kind) names.push_back(key.second);
  }
  return names;  // map order is already lexicographic within a kind
}

}  // namespace vadkit
