#pragma once

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "decompnet/linalg.hpp"

namespace testing_helpers {

inline decompnet::Vector random_vector(std::size_t n, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  decompnet::Vector v(n);
  for (double& x : v) x = nd(rng);
  return v;
}

inline decompnet::Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  decompnet::Matrix m(r, c);
  std::normal_distribution<double> nd;
  for (double& x : m.data) x = nd(rng);
  return m;
}

}  // namespace testing_helpers

namespace testing_helpers {

inline bool close(std::span<const double> a, std::span<const double> b, double tol = 1e-12) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

}  // namespace testing_helpers
