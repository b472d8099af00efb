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

#include "vadkit/core/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vadkit/core/rng.hpp"

namespace vadkit {

namespace {

const std::vector<std::string> kTopLevelKeys = {"seed",   "dataset", "backbone", "method",
                                                "trainer", "scenario", "metrics",  "output_dir"};

bool same_type(const nlohmann::json& value, const nlohmann::json& default_value) {
  if (default_value.is_null()) return true;
  if (default_value.is_number()) {
    if (!value.is_number()) return false;
    return !default_value.is_number_integer() || value.is_number_integer();
  }
  return value.type() == default_value.type();
}

std::string type_name(const nlohmann::json& v) { return v.type_name(); }

// "padim" or {"name": "padim", ...} -> {"name": "padim", ...}
nlohmann::json as_component_object(const nlohmann::json& value, const std::string& section) {
  if (value.is_string()) return {{"name", value}};
  if (!value.is_object()) throw ConfigParseError("'" + section + "' must be a name or an object");
  return value;
}

ComponentSpec resolve_component(const nlohmann::json& raw, const std::string& section, ComponentKind kind,
                                const Registry& registry, const std::vector<std::string>& extra_keys) {
  const nlohmann::json obj = as_component_object(raw, section);
  if (!obj.contains("name")) throw MissingField(section + ".name");
  if (!obj["name"].is_string()) throw ConfigParseError(section + ".name must be a string");
  ComponentSpec spec;
  spec.name = obj["name"].get<std::string>();
  const RegistryEntry& entry = registry.entry(kind, spec.name);  // UnknownComponent
  spec.params = entry.defaults;
  for (const auto& [key, value] : obj.items()) {
    if (key == "name") continue;
    const bool extra = std::find(extra_keys.begin(), extra_keys.end(), key) != extra_keys.end();
    if (!extra && !entry.defaults.contains(key)) {
      throw ConfigParseError("unknown key '" + section + "." + key + "' for " + to_string(kind) + " '" +
                             spec.name + "'");
    }
    if (!extra && !same_type(value, entry.defaults[key])) {
      throw ConfigParseError(section + "." + key + " must be " + type_name(entry.defaults[key]) + ", got " +
                             type_name(value));
    }
    spec.params[key] = value;
  }
  return spec;
}

nlohmann::json component_json(const ComponentSpec& spec) {
  nlohmann::json j = spec.params;
  j["name"] = spec.name;
  return j;
}

}  // namespace

std::vector<std::string> RunConfig::hooks() const {
  return backbone.params.at("hooks").get<std::vector<std::string>>();
}

nlohmann::json RunConfig::to_json() const {
  return {{"seed", seed},
          {"dataset", component_json(dataset)},
          {"backbone", component_json(backbone)},
          {"method", component_json(method)},
          {"trainer", component_json(trainer)},
          {"scenario", component_json(scenario)},
          {"metrics", metrics},
          {"output_dir", output_dir}};
}

std::string RunConfig::digest() const {
  // Where results land is not part of the experiment's identity.
  nlohmann::json doc = to_json();
  doc.erase("output_dir");
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(doc.dump())));
  return buf;
}

std::uint64_t RunConfig::component_seed(const std::string& component) const {
  return substream_seed(seed, component);
}

void apply_override(nlohmann::json& document, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigParseError("override '" + assignment + "' is not of the form key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    value = text;
  }
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) throw ConfigParseError("override path '" + path + "' has an empty segment");
    parts.push_back(part);
  }
  if (!document.is_object()) throw ConfigParseError("config root must be an object");
  nlohmann::json* node = &document;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    nlohmann::json& child = (*node)[parts[i]];
    if (child.is_string() && i == 0) child = nlohmann::json{{"name", child}};
    if (child.is_null()) child = nlohmann::json::object();
    if (!child.is_object()) throw ConfigParseError("override path '" + path + "' crosses a non-object");
    node = &child;
  }
  (*node)[parts.back()] = value;
}

RunConfig parse_config(const nlohmann::json& input, const Registry& registry,
                       const std::vector<std::string>& overrides) {
  nlohmann::json doc = input;
  if (!doc.is_object()) throw ConfigParseError("config root must be a JSON object");
  for (const auto& o : overrides) apply_override(doc, o);
  for (const auto& [key, _] : doc.items()) {
    if (std::find(kTopLevelKeys.begin(), kTopLevelKeys.end(), key) == kTopLevelKeys.end()) {
      throw ConfigParseError("unknown top-level key '" + key + "'");
    }
  }
  for (const char* required : {"dataset", "backbone", "method"}) {
    if (!doc.contains(required) || doc[required].is_null()) throw MissingField(required);
  }

  RunConfig cfg;
  cfg.overrides = overrides;
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0)) {
      throw ConfigParseError("seed must be a nonnegative integer");
    }
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  cfg.dataset = resolve_component(doc["dataset"], "dataset", ComponentKind::dataset, registry, {});
  cfg.backbone = resolve_component(doc["backbone"], "backbone", ComponentKind::backbone, registry, {"hooks"});
  cfg.method = resolve_component(doc["method"], "method", ComponentKind::method, registry, {});
  cfg.trainer = resolve_component(doc.value("trainer", nlohmann::json("default")), "trainer", ComponentKind::trainer,
                                  registry, {});
  cfg.scenario = resolve_component(doc.value("scenario", nlohmann::json("none")), "scenario",
                                   ComponentKind::scenario, registry, {});

  if (!cfg.backbone.params.contains("hooks")) throw MissingField("backbone.hooks");
  const auto& hooks = cfg.backbone.params["hooks"];
  if (!hooks.is_array() || hooks.empty() ||
      !std::all_of(hooks.begin(), hooks.end(), [](const nlohmann::json& h) { return h.is_string(); })) {
    throw ConfigParseError("backbone.hooks must be a non-empty list of layer names");
  }

  if (doc.contains("metrics")) {
    if (!doc["metrics"].is_array()) throw ConfigParseError("metrics must be a list of names");
    for (const auto& m : doc["metrics"]) {
      if (!m.is_string()) throw ConfigParseError("metrics must be a list of names");
      registry.entry(ComponentKind::metric, m.get<std::string>());
      cfg.metrics.push_back(m.get<std::string>());
    }
  } else {
    cfg.metrics = registry.list(ComponentKind::metric);
  }
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string()) throw ConfigParseError("output_dir must be a string");
    cfg.output_dir = doc["output_dir"].get<std::string>();
  } else {
    cfg.output_dir = "runs/latest";
  }

  const std::pair<ComponentKind, const ComponentSpec*> parts[] = {
      {ComponentKind::dataset, &cfg.dataset}, {ComponentKind::backbone, &cfg.backbone},
      {ComponentKind::method, &cfg.method},   {ComponentKind::trainer, &cfg.trainer},
      {ComponentKind::scenario, &cfg.scenario}};
  for (const auto& [kind, spec] : parts) {
    const RegistryEntry& e = registry.entry(kind, spec->name);
    if (e.validate) e.validate(spec->params);
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const Registry& registry,
                      const std::vector<std::string>& overrides) {
  std::ifstream f(path);
  if (!f) throw ConfigParseError("cannot read config file '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigParseError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc, registry, overrides);
}

}  // namespace vadkit
