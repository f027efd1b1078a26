#include "bandlab/network.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "bandlab/errors.hpp"
#include "bandlab/lattice.hpp"
#include "bandlab/sampling.hpp"
#include "bandlab/textio.hpp"

namespace bandlab {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

Mat to_eigen(const RealMatrix& m) { return RowMajorMap(m.values.data(), m.rows, m.cols); }

RealMatrix from_eigen(const Mat& m) {
  RealMatrix r(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r(i, j) = m(i, j);
  return r;
}

Vec to_eigen(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), v.size()); }
std::vector<double> from_eigen(const Vec& v) { return {v.data(), v.data() + v.size()}; }

void apply_activation(Activation a, Mat& m) {
  if (a == Activation::relu) m = m.cwiseMax(0.0);
}

// Column-per-sample forward pass; keeps pre-activations when requested.
struct ForwardTrace {
  std::vector<Mat> inputs;  // input to each layer (z_{l-1})
  std::vector<Mat> pre;     // b_l + W_l z_{l-1}
  Mat output;
};

struct EigenLayer {
  Mat w;
  Vec b;
  Activation act;
};

std::vector<EigenLayer> to_eigen_layers(const Mlp& net) {
  std::vector<EigenLayer> out;
  out.reserve(net.num_layers());
  for (const auto& l : net.layers()) out.push_back({to_eigen(l.weights), to_eigen(l.bias), l.activation});
  return out;
}

ForwardTrace forward_trace(const std::vector<EigenLayer>& layers, const Mat& x) {
  ForwardTrace t;
  Mat z = x;
  for (const auto& l : layers) {
    t.inputs.push_back(z);
    Mat a = l.w * z;
    a.colwise() += l.b;
    t.pre.push_back(a);
    apply_activation(l.act, a);
    z = std::move(a);
  }
  t.output = std::move(z);
  return t;
}

Mat points_to_columns(std::span<const double> points, std::size_t dim) {
  const std::size_t n = points.size() / dim;
  Mat x(dim, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < dim; ++a) x(a, i) = points[i * dim + a];
  return x;
}

double relu_slope(double a) { return a > 0.0 ? 1.0 : 0.0; }

// Gauss-Newton finisher tuning. A step may raise the squared residual by up
// to kSlack before it is halved; a run that has not cut the max residual by
// kProgress within kStallSteps steps gets its first-layer kinks jittered.
constexpr double kDamping = 1e-10;
constexpr double kSlack = 1.5;
constexpr double kProgress = 0.9;
constexpr std::size_t kStallSteps = 20;
constexpr double kJitter = 0.02;

// Training state shared by the momentum epochs and the Gauss-Newton finisher.
class Trainer {
 public:
  Trainer(const Mlp& net, const SampleSet& samples, const TrainConfig& cfg)
      : cfg_(cfg),
        layers_(to_eigen_layers(net)),
        x_(points_to_columns(samples.points, samples.dim)),
        y_(Eigen::Map<const Eigen::RowVectorXd>(samples.values.data(), static_cast<Eigen::Index>(samples.size()))) {
    for (const auto& l : layers_) {
      vel_w_.push_back(Mat::Zero(l.w.rows(), l.w.cols()));
      vel_b_.push_back(Vec::Zero(l.b.size()));
    }
    zs_.resize(layers_.size() + 1);
    pre_.resize(layers_.size());
    zs_[0] = x_;
  }

  const std::vector<EigenLayer>& layers() const { return layers_; }

  // Shifts every first-layer ReLU hyperplane along its normal by N(0, sigma^2).
  void jitter_first_layer(double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, sigma);
    auto& l = layers_.front();
    for (Eigen::Index r = 0; r < l.w.rows(); ++r) l.b(r) += l.w.row(r).norm() * normal(rng);
  }

  double frobenius_product() const {
    double p = 1.0;
    for (const auto& l : layers_) p *= l.w.norm();
    return p;
  }

  // Forward pass at the current parameters; returns the max residual.
  double evaluate(std::size_t epoch) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      pre_[l].noalias() = layers_[l].w * zs_[l];
      pre_[l].colwise() += layers_[l].b;
      zs_[l + 1] = pre_[l];
      apply_activation(layers_[l].act, zs_[l + 1]);
    }
    r_ = zs_.back().row(0) - y_;
    const double loss = 0.5 * r_.squaredNorm() / static_cast<double>(r_.size());
    if (!std::isfinite(loss) || loss > 1e6) throw DivergenceError(epoch);
    return r_.cwiseAbs().maxCoeff();
  }

  // One momentum step using the state left by evaluate().
  void momentum_step(double lr) {
    const double shrink = 1.0 - lr * cfg_.weight_decay;
    Mat delta = r_ / static_cast<double>(r_.size());
    for (std::size_t l = layers_.size(); l-- > 0;) {
      if (layers_[l].act == Activation::relu) delta = delta.cwiseProduct(pre_[l].unaryExpr(&relu_slope));
      Mat gw = delta * zs_[l].transpose();
      Vec gb = delta.rowwise().sum();
      if (l > 0) delta = (layers_[l].w.transpose() * delta).eval();
      vel_w_[l] = cfg_.momentum * vel_w_[l] - lr * gw;
      vel_b_[l] = cfg_.momentum * vel_b_[l] - lr * gb;
      layers_[l].w += vel_w_[l];
      layers_[l].b += vel_b_[l];
      if (shrink != 1.0) layers_[l].w *= shrink;
    }
  }

  // Gauss-Newton step solved in sample space, using the state left by
  // evaluate(). With per-sample backprop signals D_l (out_l x n) and layer
  // inputs Z_l, J J^T = sum_l (D_l^T D_l) o (Z_l^T Z_l + 1), and J^T a maps
  // back to the updates D_l diag(a) Z_l^T and D_l a. The step is halved until
  // the squared residual stays below kSlack times its current value.
  bool gauss_newton_step() {
    const Eigen::Index n = r_.size();
    std::vector<Mat> d(layers_.size());
    Mat delta = Mat::Ones(1, n);
    for (std::size_t l = layers_.size(); l-- > 0;) {
      if (layers_[l].act == Activation::relu) delta = delta.cwiseProduct(pre_[l].unaryExpr(&relu_slope));
      d[l] = delta;
      if (l > 0) delta = (layers_[l].w.transpose() * delta).eval();
    }
    Mat gram = Mat::Zero(n, n);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Mat zz = zs_[l].transpose() * zs_[l];
      zz.array() += 1.0;
      gram += (d[l].transpose() * d[l]).cwiseProduct(zz);
    }
    gram.diagonal().array() += kDamping * gram.trace() / static_cast<double>(n);
    const Vec a = gram.ldlt().solve(r_.transpose());
    std::vector<Mat> dw(layers_.size());
    std::vector<Vec> db(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      dw[l] = d[l] * a.asDiagonal() * zs_[l].transpose();
      db[l] = d[l] * a;
    }
    const double loss = r_.squaredNorm();
    double step = 1.0;
    for (int attempt = 0; attempt < 40; ++attempt, step *= 0.5) {
      auto trial = layers_;
      for (std::size_t l = 0; l < layers_.size(); ++l) {
        trial[l].w -= step * dw[l];
        trial[l].b -= step * db[l];
      }
      const double lt = (forward_trace(trial, x_).output.row(0) - y_).squaredNorm();
      if (std::isfinite(lt) && lt < kSlack * loss) {
        layers_ = std::move(trial);
        return true;
      }
    }
    return false;
  }

 private:
  const TrainConfig& cfg_;
  std::vector<EigenLayer> layers_;
  Mat x_;
  Eigen::RowVectorXd y_;
  std::vector<Mat> vel_w_;
  std::vector<Vec> vel_b_;
  std::vector<Mat> zs_;
  std::vector<Mat> pre_;
  Eigen::RowVectorXd r_;
};

}  // namespace

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

std::string to_string(Finisher f) { return f == Finisher::gauss_newton ? "gauss-newton" : "none"; }

Finisher finisher_from_string(const std::string& s) {
  if (s == "none") return Finisher::none;
  if (s == "gauss-newton") return Finisher::gauss_newton;
  throw DomainError("unknown finisher '" + s + "'");
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  throw DomainError("unknown activation '" + s + "'");
}

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw DomainError("Mlp needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weights.values.size() != l.weights.rows * l.weights.cols || l.bias.size() != l.weights.rows) {
      throw DomainError("Mlp: layer " + std::to_string(i) + " has inconsistent shapes");
    }
    if (i > 0 && layers_[i - 1].weights.rows != l.weights.cols) {
      throw DomainError("Mlp: layer " + std::to_string(i) + " input size does not match previous output");
    }
    for (double v : l.weights.values)
      if (!std::isfinite(v)) throw DomainError("Mlp: non-finite weight");
    for (double v : l.bias)
      if (!std::isfinite(v)) throw DomainError("Mlp: non-finite bias");
  }
}

std::size_t Mlp::input_size() const { return layers_.empty() ? 0 : layers_.front().weights.cols; }

std::vector<std::size_t> Mlp::layer_sizes() const {
  std::vector<std::size_t> s;
  if (layers_.empty()) return s;
  s.push_back(input_size());
  for (const auto& l : layers_) s.push_back(l.weights.rows);
  return s;
}

std::size_t Mlp::parameter_count() const {
  std::size_t c = 0;
  for (const auto& l : layers_) c += l.weights.values.size() + l.bias.size();
  return c;
}

double Mlp::forward(std::span<const double> x) const {
  if (x.size() != input_size()) throw DomainError("forward: input dimension mismatch");
  std::vector<double> z(x.begin(), x.end());
  std::vector<double> next;
  for (const auto& l : layers_) {
    next.assign(l.weights.rows, 0.0);
    for (std::size_t r = 0; r < l.weights.rows; ++r) {
      double s = l.bias[r];
      for (std::size_t c = 0; c < l.weights.cols; ++c) s += l.weights(r, c) * z[c];
      next[r] = (l.activation == Activation::relu) ? std::max(0.0, s) : s;
    }
    z.swap(next);
  }
  return z.front();
}

std::vector<double> Mlp::forward_batch(std::span<const double> points) const {
  const std::size_t d = input_size();
  if (d == 0 || points.size() % d != 0) throw DomainError("forward_batch: point buffer size mismatch");
  const auto layers = to_eigen_layers(*this);
  std::vector<double> out;
  out.reserve(points.size() / d);
  // Chunked to bound the activation memory for dense analysis grids.
  constexpr std::size_t kChunk = 4096;
  const std::size_t n = points.size() / d;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t len = std::min(kChunk, n - start);
    Mat z = points_to_columns(points.subspan(start * d, len * d), d);
    for (const auto& l : layers) {
      Mat a = l.w * z;
      a.colwise() += l.b;
      apply_activation(l.act, a);
      z = std::move(a);
    }
    for (Eigen::Index i = 0; i < z.cols(); ++i) out.push_back(z(0, i));
  }
  return out;
}

Mlp init_mlp(const std::vector<std::size_t>& sizes, std::uint64_t seed, InitOptions opts) {
  if (sizes.size() < 2) throw DomainError("init: need at least input and output sizes");
  if (sizes.back() != 1) throw DomainError("init: output size must be 1");
  for (auto s : sizes)
    if (s == 0) throw DomainError("init: layer sizes must be positive");
  std::mt19937_64 rng(seed);
  std::vector<Layer> layers;
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    Layer l;
    l.weights = RealMatrix(sizes[i], sizes[i - 1]);
    l.bias.assign(sizes[i], 0.0);
    l.activation = (i + 1 == sizes.size()) ? Activation::identity : Activation::relu;
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(sizes[i - 1])));
    for (double& w : l.weights.values) w = normal(rng);
    layers.push_back(std::move(l));
  }
  if (opts.spread_first_layer_kinks && sizes.size() > 2) {
    std::uniform_real_distribution<double> unif(-kPi, kPi);
    auto& first = layers.front();
    for (std::size_t r = 0; r < first.weights.rows; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < first.weights.cols; ++c) s += first.weights(r, c) * unif(rng);
      first.bias[r] = -s;
    }
  }
  return Mlp(std::move(layers));
}

Gradients grad(const Mlp& net, std::span<const double> points, std::span<const double> targets) {
  const std::size_t d = net.input_size();
  if (targets.empty() || points.size() != targets.size() * d) throw DomainError("grad: batch shape mismatch");
  const auto layers = to_eigen_layers(net);
  const auto trace = forward_trace(layers, points_to_columns(points, d));
  const double n = static_cast<double>(targets.size());
  Mat delta(1, targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) delta(0, i) = (trace.output(0, i) - targets[i]) / n;

  Gradients g;
  g.weights.resize(layers.size());
  g.biases.resize(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    if (layers[l].act == Activation::relu) delta = delta.cwiseProduct(trace.pre[l].unaryExpr(&relu_slope));
    g.weights[l] = from_eigen(Mat(delta * trace.inputs[l].transpose()));
    g.biases[l] = from_eigen(Vec(delta.rowwise().sum()));
    if (l > 0) delta = layers[l].w.transpose() * delta;
  }
  return g;
}

JacobianResult jacobian(const Mlp& net, std::span<const double> x) {
  if (x.size() != net.input_size()) throw DomainError("jacobian: input dimension mismatch");
  const auto& layers = net.layers();
  // Forward, recording the activation slopes.
  std::vector<std::vector<double>> slopes(layers.size());
  std::vector<double> z(x.begin(), x.end());
  JacobianResult out;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const auto& l = layers[li];
    std::vector<double> next(l.weights.rows);
    slopes[li].resize(l.weights.rows);
    for (std::size_t r = 0; r < l.weights.rows; ++r) {
      double s = l.bias[r];
      for (std::size_t c = 0; c < l.weights.cols; ++c) s += l.weights(r, c) * z[c];
      if (l.activation == Activation::relu) {
        if (s == 0.0) out.at_kink = true;
        slopes[li][r] = relu_slope(s);
        next[r] = std::max(0.0, s);
      } else {
        slopes[li][r] = 1.0;
        next[r] = s;
      }
    }
    z.swap(next);
  }
  // Row vector times diag(sigma') W, from the output back to the input.
  std::vector<double> row(1, 1.0);
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& l = layers[li];
    std::vector<double> next(l.weights.cols, 0.0);
    for (std::size_t r = 0; r < l.weights.rows; ++r) {
      const double g = row[r] * slopes[li][r];
      if (g == 0.0) continue;
      for (std::size_t c = 0; c < l.weights.cols; ++c) next[c] += g * l.weights(r, c);
    }
    row.swap(next);
  }
  out.gradient = std::move(row);
  return out;
}

std::vector<double> derivative_batch(const Mlp& net, std::span<const double> xs) {
  if (net.input_size() != 1) throw DomainError("derivative_batch: network input must be univariate");
  const auto layers = to_eigen_layers(net);
  std::vector<double> out;
  out.reserve(xs.size());
  constexpr std::size_t kChunk = 4096;
  for (std::size_t start = 0; start < xs.size(); start += kChunk) {
    const auto len = static_cast<Eigen::Index>(std::min(kChunk, xs.size() - start));
    Mat z = Eigen::Map<const Eigen::RowVectorXd>(xs.data() + start, len);
    Mat tangent = Mat::Ones(1, len);
    for (const auto& l : layers) {
      Mat a = l.w * z;
      a.colwise() += l.b;
      tangent = l.w * tangent;
      if (l.act == Activation::relu) {
        tangent = tangent.cwiseProduct(a.unaryExpr(&relu_slope));
        a = a.cwiseMax(0.0);
      }
      z = std::move(a);
    }
    for (Eigen::Index i = 0; i < len; ++i) out.push_back(tangent(0, i));
  }
  return out;
}

WeightNorms weight_norms(const Mlp& net) {
  WeightNorms n;
  for (const auto& l : net.layers()) {
    const double f = l.weights.frobenius_norm();
    const double s = spectral_norm_real(l.weights);
    n.frobenius.push_back(f);
    n.spectral.push_back(s);
    n.frobenius_product *= f;
    n.spectral_product *= s;
    n.frobenius_sq_sum += f * f;
  }
  return n;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw DomainError("train: learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("train: momentum must lie in [0, 1)");
  if (!(tolerance > 0.0)) throw DomainError("train: tolerance must be > 0");
  if (!(weight_decay >= 0.0)) throw DomainError("train: weight decay must be >= 0");
  if (trace_every == 0) throw DomainError("train: trace interval must be positive");
}

TrainResult train_to_interpolation(Mlp net, const SampleSet& samples, const TrainConfig& cfg) {
  cfg.validate();
  if (samples.size() == 0) throw DomainError("train: empty sample set");
  if (samples.dim != net.input_size()) throw DomainError("train: sample dimension does not match the network");

  Trainer trainer(net, samples, cfg);
  TrainReport report;
  auto trace = [&](std::size_t epoch) {
    report.trace_epochs.push_back(epoch);
    report.frobenius_product_trace.push_back(trainer.frobenius_product());
  };

  std::size_t epoch = 0;
  double max_residual = 0.0;
  for (;; ++epoch) {
    max_residual = trainer.evaluate(epoch);
    if (epoch % cfg.trace_every == 0) trace(epoch);
    if (max_residual <= cfg.tolerance || epoch >= cfg.max_epochs) break;
    trainer.momentum_step(cfg.learning_rate);
  }

  if (max_residual > cfg.tolerance && cfg.finisher == Finisher::gauss_newton) {
    std::mt19937_64 rng(cfg.seed);
    double best = max_residual;
    std::size_t since_best = 0;
    while (report.finisher_steps < cfg.finisher_max_steps && max_residual > cfg.tolerance) {
      trainer.gauss_newton_step();
      ++report.finisher_steps;
      ++epoch;
      max_residual = trainer.evaluate(epoch);
      if (epoch % cfg.trace_every == 0) trace(epoch);
      if (max_residual < kProgress * best) {
        best = max_residual;
        since_best = 0;
      } else if (++since_best >= kStallSteps) {
        // Typically no kink is left between some three neighbouring samples,
        // so the residual there is orthogonal to every parameter direction.
        trainer.jitter_first_layer(kJitter, rng);
        max_residual = trainer.evaluate(epoch);
        best = max_residual;
        since_best = 0;
      }
    }
  }

  report.epochs = epoch;
  report.final_max_residual = max_residual;
  report.interpolated = max_residual <= cfg.tolerance;
  if (report.trace_epochs.empty() || report.trace_epochs.back() != epoch) trace(epoch);

  auto& out = net.layers();
  const auto& layers = trainer.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    out[l].weights = from_eigen(layers[l].w);
    out[l].bias = from_eigen(layers[l].b);
  }
  return {std::move(net), std::move(report)};
}

std::string serialize(const Mlp& net) {
  std::ostringstream out;
  out << "bandlab-mlp 1\nsizes";
  for (auto s : net.layer_sizes()) out << ' ' << s;
  out << "\nactivations";
  for (const auto& l : net.layers()) out << ' ' << to_string(l.activation);
  out << '\n';
  for (std::size_t li = 0; li < net.num_layers(); ++li) {
    const auto& l = net.layers()[li];
    out << "weights " << li << '\n';
    for (std::size_t r = 0; r < l.weights.rows; ++r) {
      for (std::size_t c = 0; c < l.weights.cols; ++c) out << (c ? " " : "") << textio::format_double(l.weights(r, c));
      out << '\n';
    }
    out << "bias " << li << '\n';
    for (std::size_t r = 0; r < l.bias.size(); ++r) out << (r ? " " : "") << textio::format_double(l.bias[r]);
    out << '\n';
  }
  return out.str();
}

Mlp deserialize_mlp(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "bandlab-mlp" || version != 1) throw DomainError("not a bandlab-mlp v1 checkpoint");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  auto size_tok = textio::split_whitespace(line);
  if (size_tok.size() < 3 || size_tok[0] != "sizes") throw DomainError("checkpoint: malformed sizes line");
  std::vector<std::size_t> sizes;
  for (std::size_t i = 1; i < size_tok.size(); ++i) sizes.push_back(static_cast<std::size_t>(textio::parse_u64(size_tok[i])));
  std::getline(in, line);
  auto act_tok = textio::split_whitespace(line);
  if (act_tok.size() != sizes.size() || act_tok[0] != "activations") throw DomainError("checkpoint: malformed activations line");

  std::vector<Layer> layers;
  for (std::size_t li = 0; li + 1 < sizes.size(); ++li) {
    Layer l;
    l.activation = activation_from_string(act_tok[li + 1]);
    l.weights = RealMatrix(sizes[li + 1], sizes[li]);
    l.bias.assign(sizes[li + 1], 0.0);
    std::size_t idx = 0;
    if (!(in >> tag >> idx) || tag != "weights" || idx != li) throw DomainError("checkpoint: expected weights block");
    for (double& w : l.weights.values) {
      std::string tok;
      if (!(in >> tok)) throw DomainError("checkpoint: truncated weights");
      w = textio::parse_double(tok);
    }
    if (!(in >> tag >> idx) || tag != "bias" || idx != li) throw DomainError("checkpoint: expected bias block");
    for (double& b : l.bias) {
      std::string tok;
      if (!(in >> tok)) throw DomainError("checkpoint: truncated bias");
      b = textio::parse_double(tok);
    }
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers));
}

void save_checkpoint(const Mlp& net, const std::filesystem::path& path) { textio::write_file(path, serialize(net)); }

Mlp load_checkpoint(const std::filesystem::path& path) { return deserialize_mlp(textio::read_file(path)); }

}  // namespace bandlab
