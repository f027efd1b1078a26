#pragma once

// End-to-end studies: error against sample count for univariate and grid
// sampled multivariate targets, and the conditioning of random Fourier
// operators against the redundancy beta = n / Ñ.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bandlab/bandlimited.hpp"
#include "bandlab/network.hpp"
#include "bandlab/sampling.hpp"
#include "bandlab/stats.hpp"

namespace bandlab {

enum class ExperimentKind { error_scaling, manova_study, multivariate_scaling };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);

struct TargetSpec {
  int bandwidth = 5;
  SpectrumKind kind = SpectrumKind::flat;
  double exponent = 2.0;
  double amplitude = 1.0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::error_scaling;
  std::size_t dim = 1;
  TargetSpec target;
  std::vector<std::size_t> sample_counts;  // error-scaling
  std::vector<int> grid_bandwidths;        // multivariate-scaling: n = (2 K_s + 1)^d
  std::vector<Scheme> schemes{Scheme::uniform_grid};
  std::vector<std::uint64_t> seeds{0, 1, 2};  // replicate ids
  std::uint64_t base_seed = 0;                // every derived seed depends on it
  std::vector<std::size_t> hidden{1000, 1000};
  bool spread_kinks = true;
  TrainConfig train;
  std::size_t analysis_grid = 4096;           // M per axis for the error quadrature
  std::optional<std::size_t> fit_n_max;       // plateau cutoff for slope fits
  std::vector<double> betas;                  // manova-study
  int manova_bandwidth = 5;                   // K̃ of the random operators
  std::size_t threads = 0;                    // 0: BANDLAB_THREADS, else all cores

  void validate() const;
};

struct ResultRow {
  ExperimentKind kind = ExperimentKind::error_scaling;
  Scheme scheme = Scheme::uniform_grid;
  std::uint64_t seed = 0;
  std::size_t dim = 1;
  int bandwidth = 0;  // target K (K̃ for the manova study)
  std::size_t n = 0;
  std::optional<double> l2_sq_error;
  std::optional<double> coefficient_error;
  double kappa = 0.0;
  std::optional<std::size_t> epochs;
  std::optional<double> final_residual;
  std::optional<bool> interpolated;
  std::optional<double> beta;
  std::optional<double> kappa_bound;
};

struct SlopeRow {
  Scheme scheme = Scheme::uniform_grid;
  LineFit fit;
  std::size_t fit_n_min = 0;
  std::size_t fit_n_max = 0;
};

struct ExperimentResult {
  ExperimentKind kind = ExperimentKind::error_scaling;
  std::vector<ResultRow> rows;  // sorted by (scheme, n, seed)
  std::vector<SlopeRow> slopes;
};

// Called once per finished cell, serialized across worker threads.
using ProgressFn = std::function<void(const ResultRow&)>;

ExperimentResult run_error_scaling(const ExperimentConfig& cfg, const ProgressFn& progress = {});
ExperimentResult run_manova_study(const ExperimentConfig& cfg, const ProgressFn& progress = {});
ExperimentResult run_multivariate_scaling(const ExperimentConfig& cfg, const ProgressFn& progress = {});
ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});

// The target drawn for an experiment (fixed across all cells).
BandlimitedFn experiment_target(const ExperimentConfig& cfg);

// OLS on (log n, log error). Needs at least three pairs, all positive.
LineFit fit_loglog_slope(std::span<const std::pair<double, double>> pairs);

// Per-n medians of l2 error over interpolated rows of one scheme.
std::vector<std::pair<double, double>> median_errors(const ExperimentResult& r, Scheme scheme);

// Per-beta medians of kappa for a manova study, ordered by beta.
std::vector<std::pair<double, double>> median_kappa_by_beta(const ExperimentResult& r);

std::string results_csv(const ExperimentResult& r);
std::string slopes_csv(const ExperimentResult& r);
std::string manova_csv(const ExperimentResult& r);

// Writes results.csv and slopes.csv, manova.csv for manova studies, and
// error_vs_n.svg when some row carries an error value. Returns the paths.
std::vector<std::filesystem::path> emit_outputs(const ExperimentResult& r, const std::filesystem::path& dir);

// Worker count: cfg.threads, else BANDLAB_THREADS, else hardware concurrency.
std::size_t resolve_threads(std::size_t requested);

}  // namespace bandlab
