// bandlab: command-line front end.
//
//   bandlab <generate|sample|reconstruct|train|analyze|experiment>
//           --config FILE [--out DIR] [--seed U64] [--quiet] [--set key=value]...
//
// Exit status: 0 success, 1 configuration/domain/I-O error, 2 numerical failure.
// Outputs are staged and only moved into --out when the command succeeds.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "bandlab/analysis.hpp"
#include "bandlab/bandlimited.hpp"
#include "bandlab/config.hpp"
#include "bandlab/errors.hpp"
#include "bandlab/experiments.hpp"
#include "bandlab/lattice.hpp"
#include "bandlab/network.hpp"
#include "bandlab/sampling.hpp"
#include "bandlab/textio.hpp"

namespace fs = std::filesystem;
using namespace bandlab;

namespace {

struct Options {
  std::string command;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  std::vector<std::string> sets;
};

class Stage {
 public:
  explicit Stage(fs::path out) : out_(std::move(out)) {
    std::random_device rd;
    dir_ = out_.parent_path().empty() ? fs::path(".") : out_.parent_path();
    dir_ /= "." + out_.filename().string() + ".staging-" + std::to_string(rd());
    fs::create_directories(dir_);
  }
  ~Stage() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  const fs::path& dir() const { return dir_; }

  void commit() {
    fs::create_directories(out_);
    for (const auto& entry : fs::directory_iterator(dir_)) {
      fs::rename(entry.path(), out_ / entry.path().filename());
    }
  }

 private:
  fs::path out_;
  fs::path dir_;
};

void say(const Options& o, const std::string& line) {
  if (!o.quiet) std::cout << line << '\n';
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

BandlimitedFn config_target(const RunConfig& c) {
  SpectrumProfile p;
  p.kind = c.experiment.target.kind;
  p.exponent = c.experiment.target.exponent;
  p.amplitude = c.experiment.target.amplitude;
  p.seed = c.seed;
  if (p.amplitude == 0.0) return BandlimitedFn::zero(c.experiment.dim, c.experiment.target.bandwidth);
  return random_bandlimited(c.experiment.dim, c.experiment.target.bandwidth, p);
}

// Averages c_k with conj(c_{-k}) so rounding never breaks the real-valued
// invariant of the reconstructed function.
std::vector<cplx> symmetrize(std::vector<cplx> c) {
  const std::size_t n = c.size();
  for (std::size_t i = 0; i < n / 2; ++i) {
    const cplx a = c[i], b = c[n - 1 - i];
    c[i] = 0.5 * (a + std::conj(b));
    c[n - 1 - i] = std::conj(c[i]);
  }
  if (n % 2 == 1) c[n / 2] = c[n / 2].real();
  return c;
}

void cmd_generate(const Options& o, const RunConfig& c, const fs::path& stage) {
  const BandlimitedFn f = config_target(c);
  save_bandlimited(f, stage / "target.txt");
  say(o, "target: d=" + std::to_string(f.dim()) + " K=" + std::to_string(f.bandwidth()) +
             " coefficients=" + std::to_string(f.coeffs().size()) + " energy=" + fmt(f.energy()));
}

void cmd_sample(const Options& o, const RunConfig& c, const fs::path& stage) {
  const BandlimitedFn f = c.sample_target.empty() ? config_target(c) : load_bandlimited(c.sample_target);
  const std::size_t d = f.dim();
  std::vector<double> pts;
  std::optional<std::uint64_t> seed;
  const std::size_t lattice = lattice_size(d, f.bandwidth());
  const std::size_t n = c.sample_n ? c.sample_n : lattice;
  switch (c.sample_scheme) {
    case Scheme::uniform_grid:
    case Scheme::oversampled_uniform: {
      const auto m = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d))));
      if (checked_pow(m, d, n) != n) throw DomainError("sample: n must be a perfect d-th power for a uniform grid");
      pts = uniform_points(d, m);
      break;
    }
    case Scheme::random_iid:
      seed = c.seed;
      pts = random_points(d, n, c.seed);
      break;
  }
  const SampleSet s = sample(f, std::move(pts), c.sample_scheme, seed);
  save_samples_csv(s, stage / "samples.csv");
  say(o, "samples: n=" + std::to_string(s.size()) + " scheme=" + to_string(s.scheme));
}

void cmd_reconstruct(const Options& o, const RunConfig& c, const fs::path& stage) {
  if (c.reconstruct_samples.empty()) throw DomainError("reconstruct: set reconstruct.samples");
  const SampleSet s = load_samples_csv(c.reconstruct_samples);
  const int K = c.reconstruct_bandwidth.value_or(c.experiment.target.bandwidth);
  std::vector<cplx> coeffs;
  if (s.scheme == Scheme::random_iid) {
    const SamplingOperator op = build_operator(s, K);
    coeffs = reconstruct_nonuniform(op, s.values);
    say(o, "kappa: " + fmt(condition_number(op.matrix)));
  } else {
    coeffs = reconstruct_uniform(s.values, s.dim, K);
  }
  const BandlimitedFn g(s.dim, K, symmetrize(std::move(coeffs)));
  save_bandlimited(g, stage / "reconstruction.txt");

  const auto fitted = g.evaluate_batch(s.points);
  double residual = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) residual = std::max(residual, std::abs(fitted[i] - s.values[i]));
  say(o, "max sample residual: " + fmt(residual));
  if (!c.reconstruct_truth.empty()) {
    const BandlimitedFn truth = load_bandlimited(c.reconstruct_truth);
    if (truth.dim() != g.dim()) throw DomainError("reconstruct: truth dimension differs");
    double err = 0.0;
    const int kk = std::max(K, truth.bandwidth());
    for (std::size_t i = 0; i < lattice_size(g.dim(), kk); ++i) {
      const auto k = lattice_point(i, g.dim(), kk);
      const cplx a = linf_norm(k) <= K ? g.coeff(k) : cplx{};
      const cplx b = linf_norm(k) <= truth.bandwidth() ? truth.coeff(k) : cplx{};
      err = std::max(err, std::abs(a - b));
    }
    // Printed even under --quiet: this line is the command's result.
    std::cout << "max coefficient error: " << textio::format_double(err) << '\n';
  }
}

Mlp build_network(const RunConfig& c, std::size_t dim) {
  std::vector<std::size_t> sizes{dim};
  sizes.insert(sizes.end(), c.experiment.hidden.begin(), c.experiment.hidden.end());
  sizes.push_back(1);
  InitOptions init;
  init.spread_first_layer_kinks = c.experiment.spread_kinks;
  return init_mlp(sizes, c.seed, init);
}

void cmd_train(const Options& o, const RunConfig& c, const fs::path& stage) {
  if (c.train_samples.empty()) throw DomainError("train: set train.samples");
  const SampleSet s = load_samples_csv(c.train_samples);
  TrainConfig tc = c.experiment.train;
  tc.seed = c.seed;
  TrainResult r = train_to_interpolation(build_network(c, s.dim), s, tc);
  save_checkpoint(r.net, stage / "network.txt");
  std::string trace = "epoch,frobenius_product\n";
  for (std::size_t i = 0; i < r.report.trace_epochs.size(); ++i) {
    trace += std::to_string(r.report.trace_epochs[i]) + "," +
             textio::format_double(r.report.frobenius_product_trace[i]) + "\n";
  }
  textio::write_file(stage / "train_trace.csv", trace);
  say(o, "epochs=" + std::to_string(r.report.epochs) + " finisher_steps=" + std::to_string(r.report.finisher_steps) +
             " max_residual=" + fmt(r.report.final_max_residual) +
             " interpolated=" + (r.report.interpolated ? "true" : "false"));
  if (!r.report.interpolated) throw NumericalError("training stopped above the interpolation tolerance");
}

void cmd_analyze(const Options& o, const RunConfig& c, const fs::path& stage) {
  if (c.analyze_network.empty()) throw DomainError("analyze: set analyze.network");
  const Mlp net = load_checkpoint(c.analyze_network);
  const std::size_t d = net.input_size();
  const Field phi = field_of(net);
  SpectrumReport spec = network_spectrum(phi, d, c.analysis_kmax, c.analysis_grid);
  const auto [lo, hi] = default_fit_window(c.experiment.target.bandwidth, c.analysis_kmax, c.analysis_grid);
  spec.fit = decay_fit(spec, c.fit_lo.value_or(lo), c.fit_hi.value_or(hi));
  save_spectrum_csv(spec, stage / "spectrum.csv");
  say(o, "spectral decay slope over [" + std::to_string(spec.fit->k_lo) + ", " + std::to_string(spec.fit->k_hi) +
             "]: " + fmt(spec.fit->slope));
  if (d == 1) {
    say(o, "total variation of derivative: " + fmt(total_variation_first_derivative(net, std::size_t{1} << 14)));
  }
  const JacobianAudit audit = jacobian_bound_audit(net, 100, c.seed);
  say(o, "jacobian bound: max=" + fmt(audit.max_jacobian_norm) + " spectral=" + fmt(audit.spectral_product) +
             " frobenius=" + fmt(audit.frobenius_product) + (audit.holds ? " (holds)" : " (VIOLATED)"));
  if (!c.analyze_target.empty()) {
    const BandlimitedFn f = load_bandlimited(c.analyze_target);
    const ErrorReport err = l2_error(phi, f, c.analysis_grid);
    save_error_report_csv(err, stage / "error.csv");
    say(o, "squared L2 error: " + fmt(err.l2_sq_error) + " (coefficient space " + fmt(err.coefficient_error) + ")");
  }
}

void cmd_experiment(const Options& o, const RunConfig& c, const fs::path& stage) {
  ProgressFn progress;
  if (!o.quiet) {
    progress = [](const ResultRow& r) {
      std::string line = to_string(r.scheme) + " n=" + std::to_string(r.n) + " seed=" + std::to_string(r.seed);
      if (r.l2_sq_error) line += " err=" + fmt(*r.l2_sq_error);
      line += " kappa=" + fmt(r.kappa);
      if (r.interpolated && !*r.interpolated) line += " (not interpolated)";
      std::cerr << line << std::endl;
    };
  }
  const ExperimentResult r = run_experiment(c.experiment, progress);
  emit_outputs(r, stage);
  for (const auto& s : r.slopes) {
    say(o, "slope " + to_string(s.scheme) + ": " + fmt(s.fit.slope) + " over n in [" + std::to_string(s.fit_n_min) +
               ", " + std::to_string(s.fit_n_max) + "]");
  }
  if (r.kind == ExperimentKind::manova_study) {
    for (auto [beta, k] : median_kappa_by_beta(r)) say(o, "beta=" + fmt(beta) + " median kappa=" + fmt(k));
  }
}

int run(const Options& o) {
  RunConfig c = load_config(o.config);
  if (!o.sets.empty()) {
    KeyValues kv;
    for (const auto& s : o.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw DomainError("--set expects key=value, got '" + s + "'");
      kv.entries[std::string(textio::trim(s.substr(0, eq)))] = {std::string(textio::trim(s.substr(eq + 1))), 0};
    }
    c = apply_config(kv, c);
  }
  if (o.seed) {
    c.seed = *o.seed;
    c.experiment.base_seed = *o.seed;
  }
  const fs::path out = o.out.empty() ? c.output_dir : fs::path(o.out);

  Stage stage(out);
  if (o.command == "generate") cmd_generate(o, c, stage.dir());
  else if (o.command == "sample") cmd_sample(o, c, stage.dir());
  else if (o.command == "reconstruct") cmd_reconstruct(o, c, stage.dir());
  else if (o.command == "train") cmd_train(o, c, stage.dir());
  else if (o.command == "analyze") cmd_analyze(o, c, stage.dir());
  else if (o.command == "experiment") cmd_experiment(o, c, stage.dir());
  stage.commit();
  say(o, "wrote " + out.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Band-limited sampling and interpolating-network toolkit"};
  app.require_subcommand(1, 1);
  Options o;
  for (const char* name : {"generate", "sample", "reconstruct", "train", "analyze", "experiment"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", o.config, "Configuration file")->required();
    sub->add_option("--out", o.out, "Output directory (default: output.dir)");
    sub->add_option("--seed", o.seed, "Replaces the configured seed");
    sub->add_flag("--quiet", o.quiet, "Suppress progress output");
    sub->add_option("--set", o.sets, "Override a config key (key=value)");
    sub->callback([&o, name] { o.command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "bandlab: " << e.what() << '\n';
    return 1;
  }

  try {
    return run(o);
  } catch (const NumericalError& e) {
    std::cerr << "bandlab: numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "bandlab: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    std::cerr << "bandlab: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "bandlab: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "bandlab: " << e.what() << '\n';
    return 1;
  }
}
