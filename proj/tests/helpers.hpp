// Small shared helpers for the unit tests.
#pragma once

#include "ocdm/core.hpp"
#include "ocdm/rng.hpp"

namespace testing_util {

inline ocdm::Vec vec(std::initializer_list<double> xs) {
  ocdm::Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline ocdm::Vec gaussian(int n, ocdm::Philox& rng, double scale = 1.0) {
  ocdm::Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * rng.normal();
  return v;
}

inline ocdm::Mat gaussian(int rows, int cols, ocdm::Philox& rng) {
  ocdm::Mat m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

}  // namespace testing_util
