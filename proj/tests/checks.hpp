#pragma once

// Oracles shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "bandlab/network.hpp"

namespace testutil {

inline double half_mse(const bandlab::Mlp& net, std::span<const double> xs, std::span<const double> ys) {
  const auto out = net.forward_batch(xs);
  double s = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) s += (out[i] - ys[i]) * (out[i] - ys[i]);
  return 0.5 * s / static_cast<double>(ys.size());
}

struct GradCheck {
  std::size_t parameters = 0;
  std::size_t agreeing = 0;
  double worst = 0.0;
};

// Central differences with step h on every parameter; relative error with a
// floor of 1e-8 on the denominator.
inline GradCheck gradient_check(bandlab::Mlp net, std::span<const double> xs, std::span<const double> ys,
                                double h = 1e-6, double tol = 1e-5) {
  const auto g = bandlab::grad(net, xs, ys);
  GradCheck r;
  auto probe = [&](double& p, double analytic) {
    const double saved = p;
    p = saved + h;
    const double up = half_mse(net, xs, ys);
    p = saved - h;
    const double down = half_mse(net, xs, ys);
    p = saved;
    const double fd = (up - down) / (2 * h);
    const double rel = std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-8});
    ++r.parameters;
    if (rel <= tol) ++r.agreeing;
    r.worst = std::max(r.worst, rel);
  };
  auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t i = 0; i < layers[l].weights.values.size(); ++i) probe(layers[l].weights.values[i], g.weights[l].values[i]);
    for (std::size_t i = 0; i < layers[l].bias.size(); ++i) probe(layers[l].bias[i], g.biases[l][i]);
  }
  return r;
}

}  // namespace testutil
