#include "attrprop/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "attrprop/csv.hpp"
#include "attrprop/error.hpp"
#include "attrprop/parallel.hpp"

namespace attrprop {

std::size_t AffinityGraph::edge_count() const {
  std::size_t total = 0;
  for (const auto& list : adjacency) {
    total += list.size();
  }
  return total / 2;
}

std::vector<std::vector<int>> knn(const Eigen::Ref<const Matrix>& X, int h, int threads) {
  const int n = static_cast<int>(X.rows());
  if (h < 1 || n <= h) {
    throw_error(ErrorCode::insufficient_nodes,
                "knn requires n > h >= 1, got n=" + std::to_string(n) +
                    ", h=" + std::to_string(h));
  }
  std::vector<std::vector<int>> neighbors(static_cast<std::size_t>(n));
  parallel_for(n, threads, [&](int i) {
    std::vector<std::pair<Scalar, int>> order;
    order.reserve(static_cast<std::size_t>(n) - 1);
    for (int j = 0; j < n; ++j) {
      if (j == i) {
        continue;
      }
      order.emplace_back((X.row(i) - X.row(j)).squaredNorm(), j);
    }
    std::partial_sort(order.begin(), order.begin() + h, order.end());
    auto& list = neighbors[static_cast<std::size_t>(i)];
    list.resize(static_cast<std::size_t>(h));
    for (int r = 0; r < h; ++r) {
      list[static_cast<std::size_t>(r)] = order[static_cast<std::size_t>(r)].second;
    }
  });
  return neighbors;
}

AffinityGraph local_scaled_weights(const Eigen::Ref<const Matrix>& X,
                                   const std::vector<std::vector<int>>& neighbors, int h,
                                   int threads) {
  const int n = static_cast<int>(X.rows());
  if (static_cast<int>(neighbors.size()) != n) {
    throw_error(ErrorCode::dimension_mismatch, "neighbor lists do not match the feature matrix");
  }
  constexpr Scalar kSigmaFloor = 1e-12;

  // sigma_i = distance to the h-th nearest neighbor.
  Vector sigma(n);
  for (int i = 0; i < n; ++i) {
    const auto& list = neighbors[static_cast<std::size_t>(i)];
    if (static_cast<int>(list.size()) != h) {
      throw_error(ErrorCode::dimension_mismatch,
                  "neighbor list of node " + std::to_string(i) + " does not have h entries");
    }
    const int far = list.back();
    sigma[i] = std::max(kSigmaFloor, (X.row(i) - X.row(far)).norm());
  }

  // Union symmetrization of the directed edge set.
  std::vector<std::vector<int>> undirected(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j : neighbors[static_cast<std::size_t>(i)]) {
      undirected[static_cast<std::size_t>(std::min(i, j))].push_back(std::max(i, j));
    }
  }
  for (auto& list : undirected) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }

  AffinityGraph graph;
  graph.n = n;
  graph.h = h;
  graph.adjacency.assign(static_cast<std::size_t>(n), {});
  std::vector<std::vector<std::pair<int, Scalar>>> weighted(static_cast<std::size_t>(n));
  parallel_for(n, threads, [&](int i) {
    auto& out = weighted[static_cast<std::size_t>(i)];
    for (int j : undirected[static_cast<std::size_t>(i)]) {
      const Scalar d2 = (X.row(i) - X.row(j)).squaredNorm();
      out.emplace_back(j, std::exp(-d2 / (sigma[i] * sigma[j])));
    }
  });
  for (int i = 0; i < n; ++i) {
    for (const auto& [j, v] : weighted[static_cast<std::size_t>(i)]) {
      graph.adjacency[static_cast<std::size_t>(i)].emplace_back(j, v);
      graph.adjacency[static_cast<std::size_t>(j)].emplace_back(i, v);
    }
  }
  for (auto& list : graph.adjacency) {
    std::sort(list.begin(), list.end());
  }
  return graph;
}

AffinityGraph normalize(const AffinityGraph& graph) {
  Vector degree = Vector::Zero(graph.n);
  for (int i = 0; i < graph.n; ++i) {
    for (const auto& [j, v] : graph.adjacency[static_cast<std::size_t>(i)]) {
      degree[i] += v;
    }
    if (!(degree[i] > 0)) {
      throw_error(ErrorCode::isolated_node,
                  "node " + std::to_string(i) + " has zero degree; cannot normalize");
    }
  }
  AffinityGraph out = graph;
  for (int i = 0; i < graph.n; ++i) {
    for (auto& [j, v] : out.adjacency[static_cast<std::size_t>(i)]) {
      v = v / std::sqrt(degree[i] * degree[j]);
    }
  }
  return out;
}

AffinityGraph build_graph(const Eigen::Ref<const Matrix>& X, int h, int threads) {
  return normalize(local_scaled_weights(X, knn(X, h, threads), h, threads));
}

AffinityGraph graph_from_edges(int n, std::span<const std::tuple<int, int, Scalar>> edges) {
  AffinityGraph graph;
  graph.n = n;
  graph.adjacency.assign(static_cast<std::size_t>(n), {});
  std::map<std::pair<int, int>, Scalar> seen;
  for (const auto& [i, j, v] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw_error(ErrorCode::schema_error, "edge endpoint out of range");
    }
    if (i == j) {
      throw_error(ErrorCode::schema_error, "self-edge on node " + std::to_string(i));
    }
    if (!(v >= 0) || !std::isfinite(v)) {
      throw_error(ErrorCode::schema_error, "edge weight must be finite and nonnegative");
    }
    const auto key = std::minmax(i, j);
    if (!seen.emplace(key, v).second) {
      throw_error(ErrorCode::schema_error,
                  "duplicate edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }
  for (const auto& [key, v] : seen) {
    graph.adjacency[static_cast<std::size_t>(key.first)].emplace_back(key.second, v);
    graph.adjacency[static_cast<std::size_t>(key.second)].emplace_back(key.first, v);
  }
  for (auto& list : graph.adjacency) {
    std::sort(list.begin(), list.end());
  }
  return graph;
}

void save_graph_csv(const AffinityGraph& graph, const std::string& path) {
  std::ostringstream out;
  out << "i,j,weight\n";
  for (int i = 0; i < graph.n; ++i) {
    for (const auto& [j, v] : graph.adjacency[static_cast<std::size_t>(i)]) {
      if (i < j) {
        out << i << ',' << j << ',' << format_double(v) << "\n";
      }
    }
  }
  write_text_file(path, out.str());
}

AffinityGraph load_graph_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::vector<std::string> expected = {"i", "j", "weight"};
  if (table.header != expected) {
    throw_error(ErrorCode::schema_error, "graph file header must be i,j,weight");
  }
  std::vector<std::tuple<int, int, Scalar>> edges;
  int max_node = -1;
  for (const auto& row : table.rows) {
    if (row.size() != 3) {
      throw_error(ErrorCode::schema_error, "malformed graph row in " + path);
    }
    const int i = static_cast<int>(parse_long(row[0], "graph row"));
    const int j = static_cast<int>(parse_long(row[1], "graph row"));
    const Scalar v = parse_double(row[2], "graph row");
    edges.emplace_back(i, j, v);
    max_node = std::max({max_node, i, j});
  }
  return graph_from_edges(max_node + 1, edges);
}

Matrix dense_weights(const AffinityGraph& graph) {
  Matrix W = Matrix::Zero(graph.n, graph.n);
  for (int i = 0; i < graph.n; ++i) {
    for (const auto& [j, v] : graph.adjacency[static_cast<std::size_t>(i)]) {
      W(i, j) = v;
    }
  }
  return W;
}

}  // namespace attrprop
