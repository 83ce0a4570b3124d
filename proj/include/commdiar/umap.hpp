#pragma once

#include <vector>

#include "commdiar/graph.hpp"
#include "commdiar/types.hpp"

namespace commdiar {

struct UmapParams {
    int target_dim = 8;
    int n_neighbors = 15;
    double min_dist = 0.1;
    int n_epochs = 200;
    double learning_rate = 1.0;
    double negative_sample_rate = 5.0;
    double repulsion_eps = 0.001;  // softens the repulsive gradient near zero distance
    int spectral_init_max_nodes = 2048;  // above this, fall back to random init
    SimilarityMetric metric = SimilarityMetric::cosine;
    RngSeed seed{};
};

/// Per-point scales of the fuzzy neighborhood: rho is the distance to the
/// nearest neighbor at positive distance, sigma solves
///   sum_j exp(-max(0, d_ij - rho_i) / sigma_i) = log2(k)
/// by bisection. residual holds the per-row miss of that target at the
/// returned sigma; degenerate is set when any sigma had to be floored.
struct FuzzyCalibration {
    std::vector<double> rho;
    std::vector<double> sigma;
    std::vector<double> residual;
    bool degenerate = false;
};

FuzzyCalibration calibrate_fuzzy_scales(const KnnTable& knn);

// Directed memberships w_ij = exp(-max(0, d_ij - rho_i) / sigma_i) combined by
// the probabilistic union  b = w1 + w2 - w1*w2. Every node's nearest neighbor
// edge carries weight exactly 1.
SparseGraph fuzzy_neighborhood_graph(const KnnTable& knn, const FuzzyCalibration& calibration);

/// Parameters of the low-dimensional membership curve 1 / (1 + a d^(2b)),
/// least-squares fitted to the min_dist-shifted exponential.
struct CurveFit {
    double a = 0.0;
    double b = 0.0;
    double rms_residual = 0.0;
};

CurveFit fit_output_curve(double min_dist);

// Descent-direction multipliers applied to (y_i - y_j) for one sampled pair;
// sq_dist is the squared embedding distance. The attractive one is <= 0 (pulls
// together), the repulsive one >= 0 (pushes apart). eps = 0 recovers the exact
// cross-entropy gradient; the optimizer runs with a small positive eps.
double attractive_coefficient(double sq_dist, double a, double b);
double repulsive_coefficient(double sq_dist, double a, double b, double eps);

struct InitialEmbedding {
    MatrixXfR coords;
    bool spectral = false;  // false when the random fallback was used
};

// Spectral initialization from the symmetric normalized Laplacian of the fuzzy
// graph (eigenvectors 1..target_dim, scaled to max-abs 10, tiny seeded jitter).
// Falls back to seeded uniform noise in [-10, 10] for graphs above
// max_spectral_nodes or when the eigensolve cannot be used.
InitialEmbedding initial_embedding(const SparseGraph& fuzzy, int target_dim, RngSeed seed,
                                   int max_spectral_nodes = 2048);

// Stochastic gradient descent over the fuzzy edges: per-edge sampling schedule
// proportional to membership, uniform negative samples, linearly decaying
// learning rate, per-component clipping at +/-4.
MatrixXfR optimize_embedding(const SparseGraph& fuzzy, MatrixXfR init, const CurveFit& curve,
                             const UmapParams& params);

struct UmapResult {
    MatrixXfR embedding;
    FuzzyCalibration calibration;
    CurveFit curve;
    bool used_spectral_init = false;
};

UmapResult umap_embed(const EmbeddingSet& embeddings, const UmapParams& params = {});

// Exact fuzzy cross-entropy between the high-dimensional memberships and the
// low-dimensional curve, summed over all point pairs. Quadratic in N; meant
// for sanity checks, not production runs.
double fuzzy_cross_entropy(const SparseGraph& fuzzy, const MatrixXfR& embedding, double a, double b);

}  // namespace commdiar
