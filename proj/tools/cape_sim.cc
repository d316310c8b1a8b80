//
// Copyright 2026 The CAPE-DP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Command-line driver for the experiment sweeps.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cape/error.h"
#include "cape/experiment.h"
#include "json.hpp"

namespace {

struct CliState {
  std::string config_path;
  std::string out_root = "results";
  std::string run_id;
  nlohmann::json overrides = nlohmann::json::object();
};

template <typename T>
void Flag(CLI::App* app, CliState* state, const std::string& name, const std::string& key,
          const std::string& help) {
  app->add_option_function<T>(
      name, [state, key](const T& v) { state->overrides[key] = v; }, help);
}

void AddCommon(CLI::App* app, CliState* state) {
  app->add_option("--config", state->config_path, "JSON config file; flags override it");
  app->add_option("--out", state->out_root, "Output root directory")->capture_default_str();
  app->add_option("--run-id", state->run_id, "Run id (default: kind and timestamp)");
  Flag<std::string>(app, state, "--axis", "axis", "Sweep axis");
  Flag<std::vector<double>>(app, state, "--grid", "grid", "Sweep grid values");
  Flag<int>(app, state, "--sites,-S", "num_sites", "Number of sites");
  Flag<int>(app, state, "--dim,-D", "dim", "Feature dimension");
  Flag<int>(app, state, "--samples,-N", "num_samples", "Total samples");
  Flag<double>(app, state, "--epsilon", "epsilon", "Epsilon when not swept");
  Flag<double>(app, state, "--delta", "delta", "Delta when not swept");
  Flag<std::vector<std::uint64_t>>(app, state, "--seeds", "seeds", "Seed list");
  Flag<std::vector<std::string>>(app, state, "--modes", "modes", "Mode set");
  Flag<std::string>(app, state, "--loss", "loss", "linear_regression or logistic_regression");
  Flag<int>(app, state, "--hidden", "hidden", "Hidden units (nn)");
  Flag<int>(app, state, "--iterations", "iterations", "Gradient steps (nn)");
  Flag<double>(app, state, "--learning-rate", "learning_rate", "Step size (nn)");
  Flag<double>(app, state, "--clip-norm", "clip_norm", "Per-example clip norm (nn)");
  Flag<std::vector<int>>(app, state, "--site-counts", "site_counts", "Site counts (delta sweeps)");
  Flag<std::vector<double>>(app, state, "--epsilons", "epsilons", "Epsilons (delta sweeps)");
  Flag<int>(app, state, "--samples-per-site", "samples_per_site", "N / S (delta sweeps)");
  Flag<int>(app, state, "--compositions", "compositions", "Random compositions per seed (h-ratio)");
  app->add_flag_function(
      "--transcript", [state](std::int64_t) { state->overrides["write_transcript"] = true; },
      "Write transcript.ndjson");
  app->add_option_function<std::string>(
      "--csv", [state](const std::string& v) {
        state->overrides["data"]["kind"] = "csv";
        state->overrides["data"]["csv_path"] = v;
      },
      "CSV dataset path");
  app->add_option_function<std::string>(
      "--target", [state](const std::string& v) { state->overrides["data"]["target_column"] = v; },
      "CSV target column");
  app->add_option_function<double>(
      "--noise-sd", [state](double v) { state->overrides["data"]["noise_sd"] = v; },
      "Synthetic response noise sd");
  app->add_option_function<double>(
      "--separation", [state](double v) { state->overrides["data"]["separation"] = v; },
      "Synthetic class mean separation");
}

std::string DefaultRunId(const std::string& kind) {
  const std::time_t now = std::time(nullptr);
  std::ostringstream id;
  id << kind << '-' << std::put_time(std::gmtime(&now), "%Y%m%dT%H%M%SZ");
  return id.str();
}

int Execute(const std::string& kind, const CliState& state) {
  nlohmann::json j = nlohmann::json::object();
  if (!state.config_path.empty()) {
    std::ifstream in(state.config_path);
    if (!in) {
      std::cerr << "cannot open config " << state.config_path << "\n";
      return 2;
    }
    j = nlohmann::json::parse(in);
  }
  if (j.contains("experiment") && j["experiment"] != kind) {
    std::cerr << "config experiment " << j["experiment"] << " does not match subcommand " << kind
              << "\n";
    return 2;
  }
  j["experiment"] = kind;
  for (auto it = state.overrides.begin(); it != state.overrides.end(); ++it) {
    if (it.key() == "data" && j.contains("data")) {
      j["data"].update(it.value());
    } else {
      j[it.key()] = it.value();
    }
  }

  const cape::ExperimentConfig config = cape::ExperimentConfig::FromJson(j);
  const auto start = std::chrono::steady_clock::now();
  const cape::ExperimentOutput out = cape::RunExperiment(config);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::string run_id = state.run_id.empty() ? DefaultRunId(kind) : state.run_id;
  const std::string dir = (std::filesystem::path(state.out_root) / run_id).string();
  cape::WriteOutputs(config, out, dir);

  for (const auto& e : out.cell_errors) std::cerr << "cell error: " << e << "\n";
  for (const auto& c : out.checks) {
    std::cout << (c.passed ? "PASS" : "FAIL") << (c.asserted ? "" : " (trend)") << "  " << c.name;
    if (!c.detail.empty()) std::cout << "  [" << c.detail << "]";
    std::cout << "\n";
  }
  std::cout << out.records.size() << " records in " << std::fixed << std::setprecision(1) << secs
            << " s -> " << dir << "\n";
  return out.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed differential privacy simulator"};
  app.require_subcommand(1);
  std::vector<std::string> kinds = {"linreg", "nn", "delta-compare", "collusion-sweep", "h-ratio"};
  std::vector<CliState> states(kinds.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    CLI::App* sub = app.add_subcommand(kinds[i], "Run the " + kinds[i] + " experiment");
    AddCommon(sub, &states[i]);
    subs.push_back(sub);
  }
  CLI11_PARSE(app, argc, argv);
  try {
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      if (subs[i]->parsed()) return Execute(kinds[i], states[i]);
    }
  } catch (const cape::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
