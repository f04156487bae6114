// Exact inference on tiny binary MRFs by exhaustive enumeration. Test-support
// ground truth for validating mean-field inference.
//
// The joint log-score of an assignment y is
//   sum_i unary(i, y_i) + sum_{(i,j,v) in edges} (y_i == y_j ? +v : -v),
// each undirected edge counted once.
#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

#include "attrprop/types.hpp"

namespace attrprop {

struct TinyMRF {
  Matrix unary;  // n x 2 log-potentials, column l is the score of y_i = l
  std::vector<std::tuple<int, int, Scalar>> edges;

  int node_count() const { return static_cast<int>(unary.rows()); }
};

// Joint log-potential of a full assignment (unnormalized).
Scalar joint_log_score(const TinyMRF& m, const std::vector<std::uint8_t>& assignment);

// Per-node p(y_i = 1), computed over all 2^n assignments in log-space.
Vector exact_marginals(const TinyMRF& m);

// Assignment maximizing the joint; ties resolve to the lexicographically
// smallest assignment (y_0 most significant).
std::vector<std::uint8_t> exact_map(const TinyMRF& m);

// Exact conditional p(y_i = 1 | all other labels fixed), evaluated through
// the full joint so that it is an independent route from the mean-field
// posterior computation.
Scalar exact_conditional(const TinyMRF& m, int node, const std::vector<std::uint8_t>& labels);

}  // namespace attrprop
