#pragma once

#include <random>

#include "bandlab/linalg.hpp"
#include "bandlab/network.hpp"

namespace testutil {

inline bandlab::ComplexMatrix random_complex(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  bandlab::ComplexMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = {g(rng), g(rng)};
  return m;
}

inline bandlab::ComplexMatrix random_hermitian(std::size_t n, std::mt19937_64& rng) {
  const auto a = random_complex(n, n, rng);
  bandlab::ComplexMatrix h(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h(i, j) = 0.5 * (a(i, j) + std::conj(a(j, i)));
  return h;
}

inline double max_abs_diff(const bandlab::ComplexMatrix& a, const bandlab::ComplexMatrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

// Net with explicit weights; hidden layers relu, last identity.
inline bandlab::Mlp make_net(std::vector<bandlab::RealMatrix> ws, std::vector<std::vector<double>> bs) {
  std::vector<bandlab::Layer> layers;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    bandlab::Layer l;
    l.weights = ws[i];
    l.bias = bs[i];
    l.activation = i + 1 == ws.size() ? bandlab::Activation::identity : bandlab::Activation::relu;
    layers.push_back(std::move(l));
  }
  return bandlab::Mlp(std::move(layers));
}

inline bandlab::RealMatrix mat(std::size_t r, std::size_t c, std::vector<double> v) {
  bandlab::RealMatrix m(r, c);
  m.values = std::move(v);
  return m;
}

}  // namespace testutil
