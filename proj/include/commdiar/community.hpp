#pragma once

#include "commdiar/graph.hpp"
#include "commdiar/types.hpp"

namespace commdiar {

struct ModularityParams {
    double resolution = 1.0;  // gamma
};

struct LeidenParams {
    double resolution = 1.0;
    double randomness = 0.01;  // refinement temperature theta; 0 = argmax
    int max_iterations = 100;
    RngSeed seed{};
    bool check_increments = false;  // cross-check incremental delta-Q against full recompute
    bool verify_connected = false;  // BFS-assert every output community is connected
};

// Q = sum_c [ e_c/m - gamma * (d_c/2m)^2 ]. Throws std::domain_error when the
// graph has no edges (m = 0).
double modularity(const SparseGraph& graph, const Partition& partition,
                  const ModularityParams& params = {});

// Classic full-sweep local moving plus aggregation. May return communities
// that induce disconnected subgraphs.
Partition louvain(const SparseGraph& graph, const LeidenParams& params = {});

// Fast local move (work queue of nodes whose neighborhood changed), singleton
// refinement within each community, aggregation on the refined partition.
// Every output community induces a connected subgraph.
Partition leiden(const SparseGraph& graph, const LeidenParams& params = {});

// Row c = mean of embedding rows assigned to community c.
MatrixXfR community_means(const EmbeddingSet& embeddings, const Partition& partition);

bool all_communities_connected(const SparseGraph& graph, const Partition& partition);

}  // namespace commdiar
