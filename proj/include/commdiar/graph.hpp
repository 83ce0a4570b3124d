#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "commdiar/types.hpp"

namespace commdiar {

enum class SimilarityMetric { cosine, euclidean_gaussian };

/// Weighted undirected graph in compressed sparse form. Symmetric, no
/// self-loops, all weights > 0 and finite.
class SparseGraph {
public:
    SparseGraph() = default;

    // Takes per-node (neighbor, weight) lists; each undirected edge must
    // appear in both lists with the same weight.
    static SparseGraph from_adjacency(std::vector<std::vector<std::pair<int, double>>> adjacency);

    int num_nodes() const { return num_nodes_; }
    std::size_t num_edges() const { return neighbors_.size() / 2; }  // undirected
    double total_edge_weight() const { return total_edge_weight_; }  // m
    double degree(int node) const { return degrees_[static_cast<std::size_t>(node)]; }
    const std::vector<double>& degrees() const { return degrees_; }

    std::span<const int> neighbors(int node) const {
        return {neighbors_.data() + offsets_[static_cast<std::size_t>(node)],
                offsets_[static_cast<std::size_t>(node) + 1] - offsets_[static_cast<std::size_t>(node)]};
    }
    std::span<const double> weights(int node) const {
        return {weights_.data() + offsets_[static_cast<std::size_t>(node)],
                offsets_[static_cast<std::size_t>(node) + 1] - offsets_[static_cast<std::size_t>(node)]};
    }

private:
    int num_nodes_ = 0;
    std::vector<std::size_t> offsets_;  // length num_nodes + 1
    std::vector<int> neighbors_;
    std::vector<double> weights_;
    std::vector<double> degrees_;
    double total_edge_weight_ = 0.0;
};

/// Exact brute-force k-nearest-neighbor table. Rows sorted by ascending
/// distance, ties broken by lower index. Cosine rows use distance
/// 1 - cosine similarity.
struct KnnTable {
    int k = 0;
    std::vector<std::vector<int>> indices;        // N x k
    std::vector<std::vector<double>> distances;   // N x k, nonnegative ascending
};

KnnTable exact_knn(const EmbeddingSet& embeddings, int k, SimilarityMetric metric);

// kNN similarity graph: union-symmetrized (weight = max of the two directed
// weights). Cosine weights are clamped to max(sim, 0) and zero-weight edges
// dropped; euclidean-gaussian uses exp(-d^2 / sigma^2) with sigma = median
// kNN distance. Edges below sim_threshold (when >= 0) are dropped too.
SparseGraph knn_similarity_graph(const EmbeddingSet& embeddings, int k, SimilarityMetric metric,
                                 double sim_threshold = -1.0);

// Debug edge-list dump: one `i j w` line per undirected edge, i < j.
void save_edge_list(const SparseGraph& graph, const std::string& path);

}  // namespace commdiar
