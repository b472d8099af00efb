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

#include "vadkit/cli/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vadkit/core/config.hpp"
#include "vadkit/core/errors.hpp"
#include "vadkit/pipeline/components.hpp"
#include "vadkit/pipeline/run.hpp"

namespace vadkit::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  bool dump_raw = false;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration")->required();
  cmd->add_option("--output-dir", c.output_dir, "Directory for every file the command writes (overrides output_dir)");
  cmd->add_option("--seed", c.seed, "Global seed (overrides seed)");
  cmd->add_option("--jobs", c.jobs, "Cap on worker threads; 0 uses the runtime default")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--dump-raw", c.dump_raw, "Also write raw float32 anomaly maps next to the PNGs");
  cmd->add_option("overrides", c.overrides, "Dotted-path overrides applied after loading, e.g. method.fraction=0.25");
}

std::vector<std::string> effective_overrides(const Common& c, std::vector<std::string> prefix = {}) {
  prefix.insert(prefix.end(), c.overrides.begin(), c.overrides.end());
  if (c.seed) prefix.push_back("seed=" + std::to_string(*c.seed));
  if (c.output_dir) prefix.push_back("output_dir=" + json(*c.output_dir).dump());
  return prefix;
}

void print_metrics(const json& report) {
  if (!report.contains("metrics")) return;
  for (const auto& [name, v] : report["metrics"].items()) {
    std::cout << "  " << name << " = " << (v.is_number() ? std::to_string(v.get<double>()) : v.dump()) << '\n';
  }
}

void write_error(const fs::path& dir, const std::string& command, const Error* e, const std::string& message) {
  try {
    write_json(dir / "error.json", {{"command", command},
                                    {"kind", e ? e->kind() : "InternalError"},
                                    {"message", message},
                                    {"exit_code", kExitRuntime}});
  } catch (...) {
    // the record is best effort; stderr already carries the diagnostic
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vadkit: visual anomaly detection experiments (train, evaluate, contaminate, profile, split-sim)"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  Common common;
  auto* run = app.add_subcommand("run", "Train, evaluate and write report.json, manifest.json, maps and the training log");
  auto* train = app.add_subcommand("train", "Train and write checkpoints and the training log");
  auto* eval = app.add_subcommand("eval", "Evaluate checkpoints previously written by train into the same output dir");
  auto* contaminate = app.add_subcommand("contaminate", "Emit contamination reports, or the AUROC-vs-C curve with --curve");
  auto* profile = app.add_subcommand("profile", "Report parameters, FLOPs and activation memory of the hooked backbone");
  auto* split = app.add_subcommand("split-sim", "Run edge/server split inference and compare it with monolithic scoring");
  for (auto* cmd : {run, train, eval, contaminate, profile, split}) add_common(cmd, common);

  bool curve = false;
  std::vector<double> levels;
  contaminate->add_flag("--curve", curve, "Train and evaluate at every level and write noise_curve.json");
  contaminate->add_option("--levels", levels, "Contamination levels C (default: 0 0.05 0.1 0.2, or 0 0.1 0.2 with --curve)")
      ->check(CLI::Range(0.0, 1.0));
  int batch = 1;
  profile->add_option("--batch", batch, "Batch size used for activation memory")->check(CLI::PositiveNumber);
  int bits = 8;
  std::string transport = "pipe";
  int port = 0;
  split->add_option("--bits", bits, "Quantization bits per element: 2..16, or 32 for raw float passthrough");
  split->add_option("--transport", transport, "Byte stream between edge and server")->check(CLI::IsMember({"pipe", "socket"}));
  split->add_option("--port", port, "TCP port for --transport socket; 0 picks a free port")->check(CLI::Range(0, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::string command = cmd->get_name();
  const Registry& registry = default_registry();

  std::vector<std::string> prefix;
  if (command == "split-sim") {
    prefix.push_back("scenario=" + json{{"name", "split"}, {"bits", bits}, {"transport", transport}, {"port", port}}.dump());
  }

  // Validation happens before anything touches the filesystem.
  RunConfig cfg;
  try {
    cfg = load_config(common.config, registry, effective_overrides(common, prefix));
  } catch (const Error& e) {
    std::cerr << "vadkit: configuration error (" << e.kind() << "): " << e.what() << '\n';
    return kExitConfig;
  }

  const fs::path out = cfg.output_dir;
  RunOptions options;
  options.command = command;
  options.jobs = common.jobs;
  options.dump_raw = common.dump_raw;
  try {
    if (command == "contaminate") {
      if (levels.empty()) levels = curve ? std::vector<double>{0.0, 0.1, 0.2} : std::vector<double>{0.0, 0.05, 0.1, 0.2};
      fs::create_directories(out);
      write_json(out / "manifest.json", make_manifest(cfg, command, registry));
      if (curve) {
        const json c = noise_curve(cfg, registry, levels, options);
        write_json(out / "noise_curve.json", c);
        std::cout << "noise curve (" << c["metric"].get<std::string>() << "):\n";
        for (const auto& p : c["points"]) std::cout << "  C=" << p["C"] << "  " << p["metrics"]["image_auroc"] << '\n';
        std::cout << "monotone_nonincreasing=" << c["monotone_nonincreasing"] << '\n'
                  << "wrote " << (out / "noise_curve.json").string() << '\n';
      } else {
        const json reports = contamination_reports(cfg, registry, levels);
        write_json(out / "contamination.json", reports);
        std::cout << reports.dump(2) << '\n';
      }
    } else if (command == "profile") {
      fs::create_directories(out);
      const json p = profile_config(cfg, registry, batch);
      write_json(out / "profile.json", p);
      std::cout << p.dump(2) << '\n';
    } else {
      const RunOutputs r = run_experiment(cfg, registry, options);
      std::cout << command << " finished; outputs in " << out.string() << '\n';
      print_metrics(r.report);
    }
  } catch (const Error& e) {
    std::cerr << "vadkit: " << command << " failed (" << e.kind() << "): " << e.what() << '\n';
    write_error(out, command, &e, e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "vadkit: " << command << " failed: " << e.what() << '\n';
    write_error(out, command, nullptr, e.what());
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace vadkit::cli
