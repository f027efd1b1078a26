#pragma once

// Real-valued trigonometric polynomials on [-pi, pi)^d.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bandlab/linalg.hpp"

namespace bandlab {

class BandlimitedFn {
 public:
  BandlimitedFn() = default;
  // `coeffs` are indexed by the column-stack lattice of {-K..K}^d. Throws
  // DomainError unless c_{-k} = conj(c_k) within 1e-12 (relative to max |c|).
  BandlimitedFn(std::size_t dim, int bandwidth, std::vector<cplx> coeffs);

  static BandlimitedFn zero(std::size_t dim, int bandwidth);

  std::size_t dim() const noexcept { return dim_; }
  int bandwidth() const noexcept { return bandwidth_; }
  std::span<const cplx> coeffs() const noexcept { return coeffs_; }
  cplx coeff(const std::vector<int>& k) const;

  // Sum_k c_k e^{j x.k}; x is wrapped per axis into [-pi, pi).
  double evaluate(std::span<const double> x) const;
  // Points are row-major, count x dim().
  std::vector<double> evaluate_batch(std::span<const double> points) const;

  double energy() const;  // sum |c_k|^2

 private:
  std::size_t dim_ = 0;
  int bandwidth_ = 0;
  std::vector<cplx> coeffs_;
};

enum class SpectrumKind { flat, decaying, single_tone };

struct SpectrumProfile {
  SpectrumKind kind = SpectrumKind::flat;
  double exponent = 2.0;  // decaying only, > 0
  std::uint64_t seed = 0;
  double amplitude = 1.0;
};

// flat: |c_k| ~ amplitude * U[0.5, 1] (never zero), random phase.
// decaying: |c_k| = amplitude * ||k||_1^{-p}, random phase, c_0 = amplitude.
// single_tone: cosine of frequency K along axis 0 with the given amplitude.
BandlimitedFn random_bandlimited(std::size_t dim, int bandwidth, const SpectrumProfile& profile);

// |c_k| = ||k||_1^{-p} with a random unit phase, c_0 = 1, truncated at
// ||k||_inf <= max_bandwidth.
BandlimitedFn random_fast_decay(std::size_t dim, int max_bandwidth, double exponent, std::uint64_t seed);

// Sum of |c_k|^2 over ||k||_inf > cutoff.
double fourier_tail_energy(const BandlimitedFn& f, int cutoff);

std::string serialize(const BandlimitedFn& f);
BandlimitedFn deserialize_bandlimited(const std::string& text);
void save_bandlimited(const BandlimitedFn& f, const std::filesystem::path& path);
BandlimitedFn load_bandlimited(const std::filesystem::path& path);

}  // namespace bandlab
