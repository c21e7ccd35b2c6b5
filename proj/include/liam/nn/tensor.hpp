#pragma once

#include <Eigen/Dense>

#include <random>
#include <sstream>
#include <string>

#include "liam/errors.hpp"

namespace liam::nn {

// Dense row-major storage. Every tensor in the library is rank <= 2:
// batches are rows, features are columns, scalars are 1x1.
template <typename Scalar>
using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Rng = std::mt19937_64;

inline std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  std::ostringstream out;
  out << rows << "x" << cols;
  return out.str();
}

template <typename Derived>
std::string shape_string(const Eigen::MatrixBase<Derived>& m) {
  return shape_string(m.rows(), m.cols());
}

template <typename Scalar>
Tensor<Scalar> uniform_tensor(Eigen::Index rows, Eigen::Index cols, Scalar bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-static_cast<double>(bound), static_cast<double>(bound));
  Tensor<Scalar> out(rows, cols);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out.data()[i] = static_cast<Scalar>(dist(rng));
  }
  return out;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace liam::nn
