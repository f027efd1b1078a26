#include "bandlab/bandlimited.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "bandlab/errors.hpp"
#include "bandlab/lattice.hpp"
#include "bandlab/textio.hpp"

namespace bandlab {

BandlimitedFn::BandlimitedFn(std::size_t dim, int bandwidth, std::vector<cplx> coeffs)
    : dim_(dim), bandwidth_(bandwidth), coeffs_(std::move(coeffs)) {
  if (dim == 0) throw DomainError("BandlimitedFn: dimension must be >= 1");
  if (coeffs_.size() != lattice_size(dim, bandwidth)) {
    throw DomainError("BandlimitedFn: expected (2K+1)^d coefficients");
  }
  double scale = 0.0;
  for (const auto& c : coeffs_) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw DomainError("BandlimitedFn: non-finite coefficient");
    scale = std::max(scale, std::abs(c));
  }
  const std::size_t n = coeffs_.size();
  for (std::size_t f = 0; f < n; ++f) {
    if (std::abs(coeffs_[n - 1 - f] - std::conj(coeffs_[f])) > 1e-12 * std::max(scale, 1.0)) {
      throw DomainError("BandlimitedFn: coefficients are not conjugate-symmetric");
    }
  }
}

BandlimitedFn BandlimitedFn::zero(std::size_t dim, int bandwidth) {
  return BandlimitedFn(dim, bandwidth, std::vector<cplx>(lattice_size(dim, bandwidth)));
}

cplx BandlimitedFn::coeff(const std::vector<int>& k) const {
  if (k.size() != dim_) throw DomainError("coeff: index dimension mismatch");
  if (linf_norm(k) > bandwidth_) return {};
  return coeffs_[lattice_flat(k, bandwidth_)];
}

double BandlimitedFn::evaluate(std::span<const double> x) const {
  if (x.size() != dim_) throw DomainError("evaluate: point dimension mismatch");
  const auto side = static_cast<std::size_t>(2 * bandwidth_ + 1);
  // Per-axis tables e^{j k x_a}, then the lattice sum as a product over axes.
  std::vector<cplx> table(dim_ * side);
  for (std::size_t a = 0; a < dim_; ++a) {
    const double xa = wrap_angle(x[a]);
    for (std::size_t i = 0; i < side; ++i) {
      const double k = static_cast<double>(static_cast<int>(i) - bandwidth_);
      table[a * side + i] = std::polar(1.0, k * xa);
    }
  }
  cplx sum{};
  std::vector<std::size_t> idx(dim_, 0);
  for (std::size_t f = 0; f < coeffs_.size(); ++f) {
    cplx term = coeffs_[f];
    for (std::size_t a = 0; a < dim_; ++a) term *= table[a * side + idx[a]];
    sum += term;
    for (std::size_t a = 0; a < dim_; ++a) {
      if (++idx[a] < side) break;
      idx[a] = 0;
    }
  }
  return sum.real();
}

std::vector<double> BandlimitedFn::evaluate_batch(std::span<const double> points) const {
  if (points.size() % dim_ != 0) throw DomainError("evaluate_batch: point buffer size mismatch");
  std::vector<double> out(points.size() / dim_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = evaluate(points.subspan(i * dim_, dim_));
  return out;
}

double BandlimitedFn::energy() const {
  double s = 0.0;
  for (const auto& c : coeffs_) s += std::norm(c);
  return s;
}

namespace {

// Fills the half lattice past the centre and mirrors it, so c_{-k} = conj(c_k)
// holds exactly. `draw(k)` returns the coefficient for the upper half.
template <typename Draw>
BandlimitedFn symmetric_from(std::size_t dim, int bandwidth, double centre, Draw&& draw) {
  const std::size_t n = lattice_size(dim, bandwidth);
  std::vector<cplx> c(n);
  const std::size_t mid = n / 2;
  c[mid] = centre;
  for (std::size_t f = mid + 1; f < n; ++f) {
    c[f] = draw(lattice_point(f, dim, bandwidth));
    c[n - 1 - f] = std::conj(c[f]);
  }
  return BandlimitedFn(dim, bandwidth, std::move(c));
}

}  // namespace

BandlimitedFn random_bandlimited(std::size_t dim, int bandwidth, const SpectrumProfile& profile) {
  if (dim == 0) throw DomainError("random_bandlimited: dimension must be >= 1");
  if (bandwidth < 0) throw DomainError("random_bandlimited: bandwidth must be >= 0");
  std::mt19937_64 rng(profile.seed);
  std::uniform_real_distribution<double> mag(0.5, 1.0);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  switch (profile.kind) {
    case SpectrumKind::flat: {
      const double centre = profile.amplitude * mag(rng) * (phase(rng) < kPi ? 1.0 : -1.0);
      return symmetric_from(dim, bandwidth, centre, [&](const std::vector<int>&) {
        const double m = profile.amplitude * mag(rng);
        return std::polar(m, phase(rng));
      });
    }
    case SpectrumKind::decaying: {
      if (!(profile.exponent > 0.0)) throw DomainError("random_bandlimited: decay exponent must be > 0");
      return symmetric_from(dim, bandwidth, profile.amplitude, [&](const std::vector<int>& k) {
        const double m = profile.amplitude * std::pow(static_cast<double>(l1_norm(k)), -profile.exponent);
        return std::polar(m, phase(rng));
      });
    }
    case SpectrumKind::single_tone: {
      std::vector<cplx> c(lattice_size(dim, bandwidth));
      if (bandwidth == 0) {
        c[0] = profile.amplitude;
      } else {
        std::vector<int> k(dim, 0);
        k[0] = bandwidth;
        c[lattice_flat(k, bandwidth)] = profile.amplitude / 2.0;
        k[0] = -bandwidth;
        c[lattice_flat(k, bandwidth)] = profile.amplitude / 2.0;
      }
      return BandlimitedFn(dim, bandwidth, std::move(c));
    }
  }
  throw DomainError("random_bandlimited: unknown profile");
}

BandlimitedFn random_fast_decay(std::size_t dim, int max_bandwidth, double exponent, std::uint64_t seed) {
  if (max_bandwidth < 1) throw DomainError("random_fast_decay: max bandwidth must be >= 1");
  if (!(exponent >= 1.0)) throw DomainError("random_fast_decay: exponent must be >= 1");
  SpectrumProfile p;
  p.kind = SpectrumKind::decaying;
  p.exponent = exponent;
  p.seed = seed;
  return random_bandlimited(dim, max_bandwidth, p);
}

double fourier_tail_energy(const BandlimitedFn& f, int cutoff) {
  if (cutoff < 0) throw DomainError("fourier_tail_energy: cutoff must be >= 0");
  double s = 0.0;
  const auto c = f.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (linf_norm(lattice_point(i, f.dim(), f.bandwidth())) > cutoff) s += std::norm(c[i]);
  }
  return s;
}

std::string serialize(const BandlimitedFn& f) {
  std::ostringstream out;
  out << "bandlab-bandlimited 1\n";
  out << "d " << f.dim() << "\n";
  out << "K " << f.bandwidth() << "\n";
  out << "coeffs " << f.coeffs().size() << "\n";
  for (const auto& c : f.coeffs()) out << textio::format_double(c.real()) << ' ' << textio::format_double(c.imag()) << '\n';
  return out.str();
}

BandlimitedFn deserialize_bandlimited(const std::string& text) {
  std::istringstream in(text);
  std::string tag, key;
  int version = 0;
  if (!(in >> tag >> version) || tag != "bandlab-bandlimited" || version != 1) {
    throw DomainError("not a bandlab-bandlimited v1 file");
  }
  std::size_t d = 0, count = 0;
  int k = 0;
  if (!(in >> key >> d) || key != "d") throw DomainError("bandlimited file: missing d");
  if (!(in >> key >> k) || key != "K") throw DomainError("bandlimited file: missing K");
  if (!(in >> key >> count) || key != "coeffs") throw DomainError("bandlimited file: missing coeffs");
  std::vector<cplx> c(count);
  for (auto& z : c) {
    std::string re, im;
    if (!(in >> re >> im)) throw DomainError("bandlimited file: truncated coefficient list");
    z = {textio::parse_double(re), textio::parse_double(im)};
  }
  return BandlimitedFn(d, k, std::move(c));
}

void save_bandlimited(const BandlimitedFn& f, const std::filesystem::path& path) {
  textio::write_file(path, serialize(f));
}

BandlimitedFn load_bandlimited(const std::filesystem::path& path) {
  return deserialize_bandlimited(textio::read_file(path));
}

}  // namespace bandlab
