#pragma once

#include <vector>

#include "commdiar/types.hpp"

namespace commdiar {

struct KMeansParams {
    int k = 2;
    int n_restarts = 10;
    int max_iterations = 100;
    RngSeed seed;
};

struct KMeansResult {
    Partition partition;      // compact labels, num_communities <= k
    MatrixXfR centroids;      // one row per surviving cluster, its member mean
    double inertia = 0.0;     // within-cluster sum of squared distances
    std::vector<double> inertia_trace;  // per-iteration WCSS of the winning
                                        // restart; non-increasing
};

// Lloyd iterations from k-means++ seeding, best of n_restarts by inertia.
// Assignment ties go to the lower cluster index; an empty cluster is repaired
// by splitting the largest cluster at its farthest member.
KMeansResult kmeans(const MatrixXfR& points, const KMeansParams& params);

struct EigengapEstimate {
    int k = 0;
    std::vector<double> eigenvalues;  // ascending, k_max entries
    std::vector<double> gaps;         // gaps[j-1] = eig[j] - eig[j-1], 1 <= j < k_max
};

// Cluster-count estimate from the normalized Laplacian of the dense cosine
// affinity (negative similarities clamped to zero, zero diagonal): the k
// maximizing the eigengap over 1 <= j < k_max on ascending eigenvalues.
// Ties go to the smaller count.
EigengapEstimate estimate_k_eigengap(const EmbeddingSet& embeddings, int k_max = 15);

// Spectral clustering on the same affinity: rows of the k bottom eigenvectors
// of the normalized Laplacian, row-normalized, k-means with 10 restarts.
// k == 0 picks k via estimate_k_eigengap.
Partition spectral_cluster(const EmbeddingSet& embeddings, int k, RngSeed seed,
                           int k_max = 15);

struct AhcParams {
    // Merge while the best average-linkage cosine similarity is >= this;
    // above +1 nothing merges, at -1 everything does.
    double stop_threshold = 0.0;
    // When > 0, merge down to exactly this many clusters instead, ignoring
    // the threshold.
    int target_k = 0;
};

// Average-linkage agglomerative clustering on cosine similarity.
Partition ahc_cluster(const MatrixXfR& embeddings, const AhcParams& params);

struct WtaPoolResult {
    Eigen::RowVectorXf target;       // mean of the dominant frame cluster
    double dominant_fraction = 1.0;  // |dominant cluster| / T
    bool degenerate = false;         // T == 1: nothing to cluster
};

// Winner-takes-all pooling: 2-means over the frames (5 restarts), keep the
// larger cluster's mean. A tie goes to the cluster holding frame 0.
WtaPoolResult wta_pool(const MatrixXfR& frames, RngSeed seed);

}  // namespace commdiar
