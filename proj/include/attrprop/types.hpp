// Core scalar/matrix aliases and small numeric helpers shared by all modules.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

namespace attrprop {

template <typename T>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using Scalar = double;
using Matrix = MatrixX<Scalar>;
using Vector = VectorX<Scalar>;
using IndexVector = Eigen::VectorXi;

// Numerically stable logistic function.
template <typename T>
inline T sigmoid(T x) {
  if (x >= T(0)) {
    return T(1) / (T(1) + std::exp(-x));
  }
  const T e = std::exp(x);
  return e / (T(1) + e);
}

// log(1 + exp(x)) without overflow for large |x|.
template <typename T>
inline T softplus(T x) {
  if (x > T(0)) {
    return x + std::log1p(std::exp(-x));
  }
  return std::log1p(std::exp(x));
}

// log(sigmoid(x))
template <typename T>
inline T log_sigmoid(T x) {
  return -softplus(-x);
}

// log(1 - sigmoid(x))
template <typename T>
inline T log_one_minus_sigmoid(T x) {
  return -softplus(x);
}

// SplitMix64 step; used to derive independent child seeds from one master
// seed so that parallel work items never share an RNG stream.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a) {
  return mix64(seed ^ mix64(a + 1));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(seed, a), b);
}

}  // namespace attrprop
