// Locally-scaled kNN affinity graph and its symmetric degree normalization.
//
// Edge weights follow the self-tuning construction: for nodes i, i' within
// each other's h-neighborhoods, v = exp(-d^2(x_i, x_i') / (sigma_i sigma_i'))
// with sigma_i the distance from x_i to its h-th nearest neighbor.
#pragma once

#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "attrprop/types.hpp"

namespace attrprop {

struct AffinityGraph {
  int n = 0;
  int h = 0;  // neighbor count used during construction (0 when assembled from edges)
  // Per-node neighbor list sorted by neighbor index; symmetric, no self-edges,
  // weights positive and finite.
  std::vector<std::vector<std::pair<int, Scalar>>> adjacency;

  int node_count() const { return n; }
  std::size_t edge_count() const;  // undirected edges
};

// Exact h-nearest-neighbor lists under l2 distance, ties broken by lower
// node index. Self never included.
std::vector<std::vector<int>> knn(const Eigen::Ref<const Matrix>& X, int h, int threads = 1);

// Symmetrized union of the directed kNN edges with locally-scaled weights.
// sigma_i is clamped below at 1e-12 so duplicate points get weight 1.
AffinityGraph local_scaled_weights(const Eigen::Ref<const Matrix>& X,
                                   const std::vector<std::vector<int>>& neighbors, int h,
                                   int threads = 1);

// Symmetric degree normalization v / sqrt(D_i D_j); every node must have a
// positive degree sum.
AffinityGraph normalize(const AffinityGraph& graph);

// knn -> local_scaled_weights -> normalize.
AffinityGraph build_graph(const Eigen::Ref<const Matrix>& X, int h, int threads = 1);

// Assembles a graph from an undirected edge list; validates indices and
// rejects self-edges and duplicates.
AffinityGraph graph_from_edges(int n, std::span<const std::tuple<int, int, Scalar>> edges);

// Edge list `i,j,weight` with i < j, sorted by (i, j).
void save_graph_csv(const AffinityGraph& graph, const std::string& path);
AffinityGraph load_graph_csv(const std::string& path);

// Dense symmetric weight matrix (test/diagnostic helper).
Matrix dense_weights(const AffinityGraph& graph);

}  // namespace attrprop
