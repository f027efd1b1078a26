#pragma once

// Fully connected network with non-expansive activations, manual
// backpropagation and a full-batch momentum trainer.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bandlab/linalg.hpp"

namespace bandlab {

struct SampleSet;

enum class Activation { relu, identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct Layer {
  RealMatrix weights;  // out x in
  std::vector<double> bias;
  Activation activation = Activation::relu;
};

class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<Layer> layers);

  std::size_t input_size() const;
  std::size_t num_layers() const noexcept { return layers_.size(); }
  std::vector<std::size_t> layer_sizes() const;
  std::size_t parameter_count() const;

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }

  double forward(std::span<const double> x) const;
  // Points are row-major, count x input_size().
  std::vector<double> forward_batch(std::span<const double> points) const;

 private:
  std::vector<Layer> layers_;
};

// Hidden layers use ReLU, the output layer is identity. Weights are Gaussian
// with standard deviation 1/sqrt(fan_in). With `spread_first_layer_kinks`
// the first layer bias of unit j is set to -w_j * u_j, u_j ~ U[-pi, pi), so
// the ReLU kinks of a univariate net cover the domain; otherwise biases are 0.
struct InitOptions {
  bool spread_first_layer_kinks = false;
};

Mlp init_mlp(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed, InitOptions opts = {});

struct Gradients {
  std::vector<RealMatrix> weights;
  std::vector<std::vector<double>> biases;
};

// Gradients of 0.5 * mean_i (phi(x_i) - y_i)^2.
Gradients grad(const Mlp& net, std::span<const double> points, std::span<const double> targets);

struct JacobianResult {
  std::vector<double> gradient;  // d(phi)/dx, length input_size()
  bool at_kink = false;          // some pre-activation was exactly 0 (sigma'(0) := 0)
};

JacobianResult jacobian(const Mlp& net, std::span<const double> x);

// d(phi)/dx at many points of a univariate net (forward mode, sigma'(0) := 0).
std::vector<double> derivative_batch(const Mlp& net, std::span<const double> xs);

struct WeightNorms {
  std::vector<double> frobenius;
  std::vector<double> spectral;
  double frobenius_product = 1.0;
  double spectral_product = 1.0;
  double frobenius_sq_sum = 0.0;
};

WeightNorms weight_norms(const Mlp& net);

// Optional second stage run after the momentum epochs when the residual is
// still above tolerance: damped Gauss-Newton steps solved in sample space,
// theta -= J^T (J J^T + lambda I)^{-1} r, with a random shift of the
// first-layer ReLU kinks (seeded by TrainConfig::seed) when progress stalls.
enum class Finisher { none, gauss_newton };

std::string to_string(Finisher f);
Finisher finisher_from_string(const std::string& s);

struct TrainConfig {
  double learning_rate = 1e-3;
  double momentum = 0.5;
  double weight_decay = 1e-4;
  std::size_t max_epochs = 200000;
  double tolerance = 1e-3;
  std::uint64_t seed = 0;
  std::size_t trace_every = 100;
  Finisher finisher = Finisher::none;
  std::size_t finisher_max_steps = 500;

  void validate() const;
};

struct TrainReport {
  std::size_t epochs = 0;          // momentum epochs plus finisher steps
  std::size_t finisher_steps = 0;
  double final_max_residual = 0.0;
  bool interpolated = false;
  std::vector<std::size_t> trace_epochs;
  std::vector<double> frobenius_product_trace;
};

struct TrainResult {
  Mlp net;
  TrainReport report;
};

// Full-batch gradient descent with heavy-ball momentum and decoupled weight
// decay on the weight matrices, then the configured finisher. Stops at max
// residual <= tolerance.
// Throws DivergenceError when the loss exceeds 1e6 or becomes non-finite.
TrainResult train_to_interpolation(Mlp net, const SampleSet& samples, const TrainConfig& cfg);

void save_checkpoint(const Mlp& net, const std::filesystem::path& path);
Mlp load_checkpoint(const std::filesystem::path& path);
std::string serialize(const Mlp& net);
Mlp deserialize_mlp(const std::string& text);

}  // namespace bandlab
