#include "bandlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "bandlab/analysis.hpp"
#include "bandlab/errors.hpp"
#include "bandlab/lattice.hpp"
#include "bandlab/linalg.hpp"
#include "bandlab/svg.hpp"
#include "bandlab/textio.hpp"

namespace bandlab {
namespace {

enum class Stream : std::uint32_t { target = 1, points = 2, init = 3, train = 4, manova = 5 };

// Independent 64-bit seeds per (base, stream, replicate, n).
std::uint64_t derive_seed(std::uint64_t base, Stream stream, std::uint64_t replicate, std::size_t n) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(replicate),
                    static_cast<std::uint32_t>(replicate >> 32), static_cast<std::uint32_t>(n)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= b;
  return r;
}

// Runs job(i) for i < count on a worker pool. Exceptions are rethrown (first
// by index) after all workers have joined.
template <class Job>
void parallel_for(std::size_t count, std::size_t threads, Job job) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct Cell {
  Scheme scheme;
  std::uint64_t seed;
  std::size_t n;
  int grid_bandwidth = 0;  // multivariate only
};

class ProgressSink {
 public:
  explicit ProgressSink(const ProgressFn& fn) : fn_(fn) {}
  void operator()(const ResultRow& row) {
    if (!fn_) return;
    std::lock_guard lock(mu_);
    fn_(row);
  }

 private:
  const ProgressFn& fn_;
  std::mutex mu_;
};

ResultRow train_cell(const ExperimentConfig& cfg, const BandlimitedFn& target, const Cell& cell) {
  ResultRow row;
  row.kind = cfg.kind;
  row.scheme = cell.scheme;
  row.seed = cell.seed;
  row.dim = cfg.dim;
  row.bandwidth = cfg.target.bandwidth;
  row.n = cell.n;

  std::vector<double> points;
  std::optional<std::uint64_t> point_seed;
  if (cfg.kind == ExperimentKind::multivariate_scaling) {
    points = uniform_grid(cfg.dim, cell.grid_bandwidth);
  } else if (cell.scheme == Scheme::random_iid) {
    point_seed = derive_seed(cfg.base_seed, Stream::points, cell.seed, cell.n);
    points = random_points(cfg.dim, cell.n, *point_seed);
  } else {
    points = uniform_points(cfg.dim, cell.n);
  }
  row.kappa = condition_number(build_operator(points, cfg.dim, cfg.target.bandwidth).matrix);
  const SampleSet samples = sample(target, std::move(points), cell.scheme, point_seed);

  std::vector<std::size_t> sizes{cfg.dim};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(1);
  InitOptions init;
  init.spread_first_layer_kinks = cfg.spread_kinks;
  Mlp net = init_mlp(sizes, derive_seed(cfg.base_seed, Stream::init, cell.seed, cell.n), init);
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.base_seed, Stream::train, cell.seed, cell.n);

  try {
    TrainResult trained = train_to_interpolation(std::move(net), samples, tc);
    row.epochs = trained.report.epochs;
    row.final_residual = trained.report.final_max_residual;
    row.interpolated = trained.report.interpolated;
    const ErrorReport err = l2_error(field_of(trained.net), target, cfg.analysis_grid);
    row.l2_sq_error = err.l2_sq_error;
    row.coefficient_error = err.coefficient_error;
  } catch (const DivergenceError& e) {
    row.epochs = e.epoch();
    row.interpolated = false;
  }
  return row;
}

bool row_less(const ResultRow& a, const ResultRow& b) {
  if (a.scheme != b.scheme) return a.scheme < b.scheme;
  if (a.n != b.n) return a.n < b.n;
  return a.seed < b.seed;
}

ExperimentResult run_cells(const ExperimentConfig& cfg, const std::vector<Cell>& cells, const ProgressFn& progress) {
  const BandlimitedFn target = experiment_target(cfg);
  ExperimentResult result;
  result.kind = cfg.kind;
  result.rows.resize(cells.size());
  ProgressSink sink(progress);
  parallel_for(cells.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
    result.rows[i] = train_cell(cfg, target, cells[i]);
    sink(result.rows[i]);
  });
  std::stable_sort(result.rows.begin(), result.rows.end(), row_less);

  // Every n needs at least one interpolating seed per scheme.
  std::map<std::pair<Scheme, std::size_t>, bool> any_ok;
  for (const auto& r : result.rows) any_ok[{r.scheme, r.n}] |= r.interpolated.value_or(false);
  for (const auto& [key, ok] : any_ok) {
    if (!ok) {
      throw ExperimentError("no seed interpolated the data at n = " + std::to_string(key.second) + " (" +
                            to_string(key.first) + ")");
    }
  }

  if (target.energy() == 0.0) return result;  // nothing to fit against
  std::vector<Scheme> schemes;
  for (const auto& r : result.rows) {
    if (std::find(schemes.begin(), schemes.end(), r.scheme) == schemes.end()) schemes.push_back(r.scheme);
  }
  for (Scheme s : schemes) {
    auto pairs = median_errors(result, s);
    if (cfg.fit_n_max) {
      std::erase_if(pairs, [&](const auto& p) { return p.first > static_cast<double>(*cfg.fit_n_max); });
    }
    const bool positive = std::all_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.second > 0.0; });
    if (pairs.size() < 3 || !positive) continue;
    SlopeRow slope;
    slope.scheme = s;
    slope.fit = fit_loglog_slope(pairs);
    slope.fit_n_min = static_cast<std::size_t>(pairs.front().first);
    slope.fit_n_max = static_cast<std::size_t>(pairs.back().first);
    result.slopes.push_back(slope);
  }
  return result;
}

std::string opt_field(const std::optional<double>& v) { return v ? textio::format_double(*v) : std::string(); }

}  // namespace

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::error_scaling: return "error-scaling";
    case ExperimentKind::manova_study: return "manova-study";
    case ExperimentKind::multivariate_scaling: return "multivariate-scaling";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "error-scaling") return ExperimentKind::error_scaling;
  if (s == "manova-study") return ExperimentKind::manova_study;
  if (s == "multivariate-scaling") return ExperimentKind::multivariate_scaling;
  throw DomainError("unknown experiment kind '" + s + "'");
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw DomainError("experiment: seeds list is empty");
  {
    auto sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw DomainError("experiment: duplicate seed");
    }
  }
  switch (kind) {
    case ExperimentKind::error_scaling: {
      if (dim != 1) throw DomainError("error-scaling requires d = 1");
      if (target.bandwidth < 0) throw DomainError("experiment: K must be >= 0");
      if (sample_counts.empty()) throw DomainError("error-scaling: n list is empty");
      if (schemes.empty()) throw DomainError("experiment: no sampling scheme");
      if (analysis_grid < 4096) throw DomainError("error-scaling: analysis grid M must be >= 4096");
      const std::size_t lattice = lattice_size(dim, target.bandwidth);
      for (std::size_t n : sample_counts) {
        if (n < lattice) {
          throw DomainError("error-scaling: n = " + std::to_string(n) + " < (2K+1)^d = " + std::to_string(lattice));
        }
      }
      break;
    }
    case ExperimentKind::multivariate_scaling: {
      if (dim != 2 && dim != 3) throw DomainError("multivariate-scaling requires d in {2, 3}");
      if (target.bandwidth < 0) throw DomainError("experiment: K must be >= 0");
      if (grid_bandwidths.empty()) throw DomainError("multivariate-scaling: grid list is empty");
      for (Scheme s : schemes) {
        if (s != Scheme::uniform_grid) throw DomainError("multivariate-scaling supports the uniform grid only");
      }
      for (int ks : grid_bandwidths) {
        if (ks < target.bandwidth) {
          throw DomainError("multivariate-scaling: grid bandwidth " + std::to_string(ks) + " < K");
        }
      }
      if (checked_pow(analysis_grid, dim, kMaxGridEvaluations) > kMaxGridEvaluations) {
        throw ResourceError("multivariate-scaling: M^d exceeds the evaluation budget");
      }
      break;
    }
    case ExperimentKind::manova_study: {
      if (dim != 1) throw DomainError("manova-study requires d = 1");
      if (manova_bandwidth < 0) throw DomainError("manova-study: K must be >= 0");
      if (betas.empty()) throw DomainError("manova-study: beta list is empty");
      if (seeds.size() < 20) throw DomainError("manova-study needs at least 20 seeds");
      for (double b : betas) {
        if (!(b >= 1.0) || !std::isfinite(b)) throw DomainError("manova-study: beta must be >= 1");
      }
      return;
    }
  }
  if (hidden.empty()) throw DomainError("experiment: network needs a hidden layer");
  for (std::size_t h : hidden) {
    if (h == 0) throw DomainError("experiment: empty hidden layer");
  }
  train.validate();
}

BandlimitedFn experiment_target(const ExperimentConfig& cfg) {
  SpectrumProfile p;
  p.kind = cfg.target.kind;
  p.exponent = cfg.target.exponent;
  p.amplitude = cfg.target.amplitude;
  p.seed = derive_seed(cfg.base_seed, Stream::target, 0, 0);
  if (cfg.target.amplitude == 0.0) return BandlimitedFn::zero(cfg.dim, cfg.target.bandwidth);
  return random_bandlimited(cfg.dim, cfg.target.bandwidth, p);
}

ExperimentResult run_error_scaling(const ExperimentConfig& cfg, const ProgressFn& progress) {
  if (cfg.kind != ExperimentKind::error_scaling) throw DomainError("run_error_scaling: wrong experiment kind");
  cfg.validate();
  std::vector<Cell> cells;
  for (Scheme s : cfg.schemes)
    for (std::size_t n : cfg.sample_counts)
      for (std::uint64_t seed : cfg.seeds) cells.push_back({s, seed, n});
  return run_cells(cfg, cells, progress);
}

ExperimentResult run_multivariate_scaling(const ExperimentConfig& cfg, const ProgressFn& progress) {
  if (cfg.kind != ExperimentKind::multivariate_scaling) {
    throw DomainError("run_multivariate_scaling: wrong experiment kind");
  }
  cfg.validate();
  std::vector<Cell> cells;
  for (int ks : cfg.grid_bandwidths)
    for (std::uint64_t seed : cfg.seeds)
      cells.push_back({Scheme::uniform_grid, seed, ipow(static_cast<std::size_t>(2 * ks + 1), cfg.dim), ks});
  return run_cells(cfg, cells, progress);
}

ExperimentResult run_manova_study(const ExperimentConfig& cfg, const ProgressFn& progress) {
  if (cfg.kind != ExperimentKind::manova_study) throw DomainError("run_manova_study: wrong experiment kind");
  cfg.validate();
  const std::size_t ntilde = lattice_size(1, cfg.manova_bandwidth);
  struct Job {
    double beta;
    std::size_t n;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double b : cfg.betas) {
    const auto n = static_cast<std::size_t>(std::llround(b * static_cast<double>(ntilde)));
    for (std::uint64_t seed : cfg.seeds) jobs.push_back({b, std::max(n, ntilde), seed});
  }
  ExperimentResult result;
  result.kind = cfg.kind;
  result.rows.resize(jobs.size());
  ProgressSink sink(progress);
  parallel_for(jobs.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
    const Job& j = jobs[i];
    ResultRow row;
    row.kind = ExperimentKind::manova_study;
    row.scheme = Scheme::random_iid;
    row.seed = j.seed;
    row.dim = 1;
    row.bandwidth = cfg.manova_bandwidth;
    row.n = j.n;
    row.beta = j.beta;
    row.kappa_bound = j.beta > 1.0 ? kappa_bound(j.beta) : std::numeric_limits<double>::infinity();
    const auto pts = random_points(1, j.n, derive_seed(cfg.base_seed, Stream::manova, j.seed, j.n));
    row.kappa = condition_number(build_operator(pts, 1, cfg.manova_bandwidth).matrix);
    result.rows[i] = row;
    sink(row);
  });
  std::stable_sort(result.rows.begin(), result.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (*a.beta != *b.beta) return *a.beta < *b.beta;
    return a.seed < b.seed;
  });
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  switch (cfg.kind) {
    case ExperimentKind::error_scaling: return run_error_scaling(cfg, progress);
    case ExperimentKind::manova_study: return run_manova_study(cfg, progress);
    case ExperimentKind::multivariate_scaling: return run_multivariate_scaling(cfg, progress);
  }
  throw DomainError("unknown experiment kind");
}

LineFit fit_loglog_slope(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 3) throw DomainError("fit_loglog_slope: need at least 3 pairs");
  std::vector<double> x, y;
  for (auto [n, e] : pairs) {
    if (!(n > 0.0) || !(e > 0.0) || !std::isfinite(n) || !std::isfinite(e)) {
      throw DomainError("fit_loglog_slope: values must be positive and finite");
    }
    x.push_back(std::log(n));
    y.push_back(std::log(e));
  }
  return fit_line(x, y);
}

std::vector<std::pair<double, double>> median_errors(const ExperimentResult& r, Scheme scheme) {
  std::map<std::size_t, std::vector<double>> by_n;
  for (const auto& row : r.rows) {
    if (row.scheme != scheme || !row.interpolated.value_or(false) || !row.l2_sq_error) continue;
    by_n[row.n].push_back(*row.l2_sq_error);
  }
  std::vector<std::pair<double, double>> out;
  for (auto& [n, v] : by_n) out.emplace_back(static_cast<double>(n), median(std::move(v)));
  return out;
}

std::vector<std::pair<double, double>> median_kappa_by_beta(const ExperimentResult& r) {
  std::map<double, std::vector<double>> by_beta;
  for (const auto& row : r.rows) {
    if (row.beta) by_beta[*row.beta].push_back(row.kappa);
  }
  std::vector<std::pair<double, double>> out;
  for (auto& [b, v] : by_beta) out.emplace_back(b, median(std::move(v)));
  return out;
}

std::string results_csv(const ExperimentResult& r) {
  std::ostringstream o;
  o << "kind,scheme,seed,d,K,n,l2_sq_error,kappa,epochs,final_residual,interpolated\n";
  for (const auto& row : r.rows) {
    o << to_string(row.kind) << ',' << to_string(row.scheme) << ',' << row.seed << ',' << row.dim << ','
      << row.bandwidth << ',' << row.n << ',' << opt_field(row.l2_sq_error) << ','
      << textio::format_double(row.kappa) << ',';
    if (row.epochs) o << *row.epochs;
    o << ',' << opt_field(row.final_residual) << ',';
    if (row.interpolated) o << (*row.interpolated ? "true" : "false");
    o << '\n';
  }
  return o.str();
}

std::string slopes_csv(const ExperimentResult& r) {
  std::ostringstream o;
  o << "scheme,slope,intercept,residual,fit_n_min,fit_n_max\n";
  for (const auto& s : r.slopes) {
    o << to_string(s.scheme) << ',' << textio::format_double(s.fit.slope) << ','
      << textio::format_double(s.fit.intercept) << ',' << textio::format_double(s.fit.residual) << ','
      << s.fit_n_min << ',' << s.fit_n_max << '\n';
  }
  return o.str();
}

std::string manova_csv(const ExperimentResult& r) {
  std::ostringstream o;
  o << "beta,n,N_tilde,seed,kappa,kappa_bound\n";
  for (const auto& row : r.rows) {
    if (!row.beta) continue;
    o << textio::format_double(*row.beta) << ',' << row.n << ',' << lattice_size(1, row.bandwidth) << ','
      << row.seed << ',' << textio::format_double(row.kappa) << ',' << opt_field(row.kappa_bound) << '\n';
  }
  return o.str();
}

std::vector<std::filesystem::path> emit_outputs(const ExperimentResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& text) {
    const auto path = dir / name;
    textio::write_file(path, text);
    written.push_back(path);
  };
  put("results.csv", results_csv(r));
  put("slopes.csv", slopes_csv(r));
  if (r.kind == ExperimentKind::manova_study) put("manova.csv", manova_csv(r));

  LogLogChart chart;
  chart.title = "Squared L2 error against sample count";
  chart.x_label = "n (samples)";
  chart.y_label = "median squared L2 error";
  chart.reference_slope = -3.0;
  std::vector<Scheme> schemes;
  for (const auto& row : r.rows) {
    if (row.l2_sq_error && std::find(schemes.begin(), schemes.end(), row.scheme) == schemes.end()) {
      schemes.push_back(row.scheme);
    }
  }
  bool plottable = false;
  for (Scheme s : schemes) {
    auto pts = median_errors(r, s);
    for (const auto& p : pts) plottable |= p.second > 0.0;
    chart.series.push_back({to_string(s), std::move(pts)});
  }
  if (plottable) put("error_vs_n.svg", render_loglog_svg(chart));
  return written;
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BANDLAB_THREADS")) {
    try {
      const auto v = textio::parse_u64(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw DomainError("BANDLAB_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace bandlab
