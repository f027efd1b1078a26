#pragma once

// Frequency lattice {-K..K}^d flattened in column-stack order (axis 0 fastest).
// Flat index f of k and of -k satisfy f(-k) = size - 1 - f(k).

#include <cstddef>
#include <numbers>
#include <vector>

namespace bandlab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t lattice_size(std::size_t dim, int bandwidth);
std::vector<int> lattice_point(std::size_t flat, std::size_t dim, int bandwidth);
std::size_t lattice_flat(const std::vector<int>& k, int bandwidth);

int linf_norm(const std::vector<int>& k);
int l1_norm(const std::vector<int>& k);

// Wraps into [-pi, pi); pi itself maps to -pi.
double wrap_angle(double x);

// Integer power with overflow check against `limit`; returns limit + 1 on overflow.
std::size_t checked_pow(std::size_t base, std::size_t exp, std::size_t limit);

}  // namespace bandlab
