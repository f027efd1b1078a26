#pragma once

// Flat key/value run configuration:
//
//   # comment
//   experiment.kind = error-scaling
//   train.momentum = 0.5
//   experiment.n = 11, 16, 24
//
// Lists are comma separated. Unknown keys and malformed values raise
// DomainError naming the line.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bandlab/bandlimited.hpp"
#include "bandlab/experiments.hpp"
#include "bandlab/sampling.hpp"

namespace bandlab {

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";

  // target.* (generate, experiments)
  ExperimentConfig experiment;  // dim and target live here too

  // sample.*
  std::filesystem::path sample_target;  // saved target to sample
  Scheme sample_scheme = Scheme::uniform_grid;
  std::size_t sample_n = 0;             // 0: (2K+1)^d grid of the target

  // reconstruct.*
  std::filesystem::path reconstruct_samples;
  std::optional<int> reconstruct_bandwidth;  // default: target.K
  std::filesystem::path reconstruct_truth;   // optional reference target

  // train.input
  std::filesystem::path train_samples;

  // analyze.*
  std::filesystem::path analyze_network;
  std::filesystem::path analyze_target;      // optional
  std::size_t analysis_grid = 4096;          // M
  int analysis_kmax = 256;
  std::optional<int> fit_lo;
  std::optional<int> fit_hi;
};

// Parsed `key -> value` pairs, with the line each came from.
struct KeyValues {
  std::map<std::string, std::pair<std::string, std::size_t>> entries;
};

KeyValues parse_key_values(const std::string& text);

// Applies pairs on top of `base`. Throws DomainError on unknown keys.
RunConfig apply_config(const KeyValues& kv, RunConfig base = {});

RunConfig load_config(const std::filesystem::path& path);

// All accepted keys, sorted.
std::vector<std::string> config_keys();

}  // namespace bandlab
