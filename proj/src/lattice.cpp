#include "bandlab/lattice.hpp"

#include <cmath>
#include <cstdlib>

#include "bandlab/errors.hpp"

namespace bandlab {

std::size_t lattice_size(std::size_t dim, int bandwidth) {
  if (bandwidth < 0) throw DomainError("bandwidth must be >= 0");
  std::size_t n = 1;
  for (std::size_t i = 0; i < dim; ++i) n *= static_cast<std::size_t>(2 * bandwidth + 1);
  return n;
}

std::vector<int> lattice_point(std::size_t flat, std::size_t dim, int bandwidth) {
  const auto side = static_cast<std::size_t>(2 * bandwidth + 1);
  std::vector<int> k(dim);
  for (std::size_t a = 0; a < dim; ++a) {
    k[a] = static_cast<int>(flat % side) - bandwidth;
    flat /= side;
  }
  return k;
}

std::size_t lattice_flat(const std::vector<int>& k, int bandwidth) {
  const auto side = static_cast<std::size_t>(2 * bandwidth + 1);
  std::size_t flat = 0;
  for (std::size_t a = k.size(); a-- > 0;) {
    if (std::abs(k[a]) > bandwidth) throw DomainError("lattice index outside band");
    flat = flat * side + static_cast<std::size_t>(k[a] + bandwidth);
  }
  return flat;
}

int linf_norm(const std::vector<int>& k) {
  int m = 0;
  for (int v : k) m = std::max(m, std::abs(v));
  return m;
}

int l1_norm(const std::vector<int>& k) {
  int s = 0;
  for (int v : k) s += std::abs(v);
  return s;
}

double wrap_angle(double x) {
  double r = x - kTwoPi * std::floor((x + kPi) / kTwoPi);
  if (r >= kPi) r -= kTwoPi;
  if (r < -kPi) r = -kPi;
  return r;
}

std::size_t checked_pow(std::size_t base, std::size_t exp, std::size_t limit) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && r > limit / base) return limit + 1;
    r *= base;
  }
  return r;
}

}  // namespace bandlab
