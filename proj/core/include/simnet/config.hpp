#pragma once

// Nested key-value run configuration.
//
//   # comment
//   [scene]
//   q = 5
//   [engine.law]
//   rs = 0.1
//
// Keys are addressed by dotted path (engine.law.rs). Unknown keys are
// rejected with the line that introduced them.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "simnet/diodelab.hpp"
#include "simnet/optim.hpp"
#include "simnet/scene.hpp"

namespace simnet::config {

struct Entry {
  std::string value;
  int line = 0;  // 0 for command-line overrides
};

using KeyValues = std::map<std::string, Entry>;

KeyValues parse(std::istream& in);
KeyValues parse_file(const std::filesystem::path& path);
// "engine.law.rs=0.1"
void apply_override(KeyValues& kv, const std::string& assignment);

struct LocalizeConfig {
  double snr_db = 10.0;
  int trials = 200;
  int anchors_per_axis = 2;
  double drive_rms = 1.0;
  int map_angle_points = 61;
  int map_range_points = 41;
};

struct DiodeRunConfig {
  diodelab::DiodeParams params;
  int samples_per_period = 512;
  double r_min = 1e-3;
  double r_max = 0.15;
  int points = 40;
};

struct GradcheckConfig {
  int linear_scenes = 20;
  int nonlinear_scenes = 10;
  double linear_step = 1e-6;
  double nonlinear_step = 1e-5;
  double linear_tol = 1e-6;
  double nonlinear_tol = 1e-4;
};

struct BenchConfig {
  std::vector<int> q_values{4, 8, 16, 32};
  std::vector<int> k_values{8, 16, 32, 64};
  int fixed_k = 16;
  int fixed_q = 4;
  int repeats = 7;
};

struct RunConfig {
  scene::SceneConfig scene;
  optim::EngineOptions engine;
  optim::OptimOptions optimizer;
  LocalizeConfig localize;
  DiodeRunConfig diode;
  GradcheckConfig gradcheck;
  BenchConfig bench;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
};

// Starts from the defaults and applies every entry; throws ConfigError on an
// unknown key or a malformed value.
RunConfig from_key_values(const KeyValues& kv);
RunConfig load(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// Every key with its resolved value, in the file syntax.
std::string to_text(const RunConfig& config);

}  // namespace simnet::config
