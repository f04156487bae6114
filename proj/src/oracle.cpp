#include "attrprop/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "attrprop/error.hpp"

namespace attrprop {

namespace {

constexpr int kMaxNodes = 20;

void check_size(const TinyMRF& m) {
  const int n = m.node_count();
  if (n < 1 || n > kMaxNodes) {
    throw_error(ErrorCode::size_limit,
                "enumeration supports 1.." + std::to_string(kMaxNodes) + " nodes, got " +
                    std::to_string(n));
  }
  for (const auto& [i, j, v] : m.edges) {
    if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
      throw_error(ErrorCode::schema_error, "invalid edge in TinyMRF");
    }
    if (!std::isfinite(v)) {
      throw_error(ErrorCode::schema_error, "non-finite edge weight in TinyMRF");
    }
  }
}

// Bit n-1-i of `mask` holds y_i, so increasing mask order enumerates
// assignments in lexicographic order with y_0 most significant.
inline int bit_of(std::uint64_t mask, int node, int n) {
  return static_cast<int>((mask >> (n - 1 - node)) & 1ULL);
}

Scalar score_mask(const TinyMRF& m, std::uint64_t mask, int n) {
  Scalar s = 0;
  for (int i = 0; i < n; ++i) {
    s += m.unary(i, bit_of(mask, i, n));
  }
  for (const auto& [i, j, v] : m.edges) {
    s += bit_of(mask, i, n) == bit_of(mask, j, n) ? v : -v;
  }
  return s;
}

}  // namespace

Scalar joint_log_score(const TinyMRF& m, const std::vector<std::uint8_t>& assignment) {
  check_size(m);
  const int n = m.node_count();
  Scalar s = 0;
  for (int i = 0; i < n; ++i) {
    s += m.unary(i, assignment[static_cast<std::size_t>(i)] ? 1 : 0);
  }
  for (const auto& [i, j, v] : m.edges) {
    const bool equal = assignment[static_cast<std::size_t>(i)] == assignment[static_cast<std::size_t>(j)];
    s += equal ? v : -v;
  }
  return s;
}

Vector exact_marginals(const TinyMRF& m) {
  check_size(m);
  const int n = m.node_count();
  const std::uint64_t total = 1ULL << n;

  // Pass 1: global max for stable normalization.
  Scalar max_score = -std::numeric_limits<Scalar>::infinity();
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    max_score = std::max(max_score, score_mask(m, mask, n));
  }

  // Pass 2: accumulate Z and the per-node mass of y_i = 1.
  Scalar z = 0;
  Vector mass1 = Vector::Zero(n);
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    const Scalar w = std::exp(score_mask(m, mask, n) - max_score);
    z += w;
    for (int i = 0; i < n; ++i) {
      if (bit_of(mask, i, n) == 1) {
        mass1[i] += w;
      }
    }
  }
  return mass1 / z;
}

std::vector<std::uint8_t> exact_map(const TinyMRF& m) {
  check_size(m);
  const int n = m.node_count();
  const std::uint64_t total = 1ULL << n;
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  std::uint64_t best_mask = 0;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    const Scalar s = score_mask(m, mask, n);
    if (s > best) {
      best = s;
      best_mask = mask;
    }
  }
  std::vector<std::uint8_t> assignment(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    assignment[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(bit_of(best_mask, i, n));
  }
  return assignment;
}

Scalar exact_conditional(const TinyMRF& m, int node, const std::vector<std::uint8_t>& labels) {
  check_size(m);
  std::vector<std::uint8_t> y = labels;
  y[static_cast<std::size_t>(node)] = 0;
  const Scalar s0 = joint_log_score(m, y);
  y[static_cast<std::size_t>(node)] = 1;
  const Scalar s1 = joint_log_score(m, y);
  const Scalar hi = std::max(s0, s1);
  const Scalar e0 = std::exp(s0 - hi);
  const Scalar e1 = std::exp(s1 - hi);
  return e1 / (e0 + e1);
}

}  // namespace attrprop
