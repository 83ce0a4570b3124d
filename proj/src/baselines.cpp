#include "commdiar/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace commdiar {

namespace {

using MatrixXdR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LloydOutcome {
    std::vector<int> assignment;
    MatrixXdR centroids;
    double inertia = 0.0;
    bool converged = false;
    std::vector<double> inertia_trace;
};

// Squared distances from every point to one centroid.
Eigen::VectorXd sq_dist_to(const MatrixXdR& points, const Eigen::RowVectorXd& c) {
    return (points.rowwise() - c).rowwise().squaredNorm();
}

double wcss(const MatrixXdR& points, const MatrixXdR& centroids,
            const std::vector<int>& assignment) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        total += (points.row(i) - centroids.row(assignment[static_cast<std::size_t>(i)]))
                     .squaredNorm();
    }
    return total;
}

LloydOutcome run_lloyd(const MatrixXdR& points, int k, int max_iterations, std::mt19937_64& rng) {
    const int n = static_cast<int>(points.rows());
    const int dim = static_cast<int>(points.cols());

    // k-means++ seeding.
    MatrixXdR centroids(k, dim);
    std::vector<double> min_sq(static_cast<std::size_t>(n), 0.0);
    {
        const int first = std::uniform_int_distribution<int>(0, n - 1)(rng);
        centroids.row(0) = points.row(first);
        Eigen::VectorXd d = sq_dist_to(points, centroids.row(0));
        for (int i = 0; i < n; ++i) min_sq[static_cast<std::size_t>(i)] = d(i);
        for (int c = 1; c < k; ++c) {
            double total = std::accumulate(min_sq.begin(), min_sq.end(), 0.0);
            int chosen;
            if (total <= 0.0) {
                chosen = std::uniform_int_distribution<int>(0, n - 1)(rng);
            } else {
                double pick = std::uniform_real_distribution<double>(0.0, total)(rng);
                chosen = n - 1;
                for (int i = 0; i < n; ++i) {
                    pick -= min_sq[static_cast<std::size_t>(i)];
                    if (pick <= 0.0) {
                        chosen = i;
                        break;
                    }
                }
            }
            centroids.row(c) = points.row(chosen);
            Eigen::VectorXd dc = sq_dist_to(points, centroids.row(c));
            for (int i = 0; i < n; ++i) {
                min_sq[static_cast<std::size_t>(i)] =
                    std::min(min_sq[static_cast<std::size_t>(i)], dc(i));
            }
        }
    }

    LloydOutcome out;
    out.assignment.assign(static_cast<std::size_t>(n), -1);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);

    for (int iter = 0; iter < max_iterations; ++iter) {
        // Assignment step; ties go to the lower cluster index.
        bool changed = false;
        MatrixXdR dists(n, k);
        for (int c = 0; c < k; ++c) dists.col(c) = sq_dist_to(points, centroids.row(c));
        for (int i = 0; i < n; ++i) {
            int best = 0;
            for (int c = 1; c < k; ++c) {
                if (dists(i, c) < dists(i, best)) best = c;
            }
            if (best != out.assignment[static_cast<std::size_t>(i)]) {
                out.assignment[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        if (!changed) {
            out.converged = true;
            break;
        }

        std::fill(counts.begin(), counts.end(), 0);
        MatrixXdR sums = MatrixXdR::Zero(k, dim);
        for (int i = 0; i < n; ++i) {
            const int c = out.assignment[static_cast<std::size_t>(i)];
            sums.row(c) += points.row(i);
            counts[static_cast<std::size_t>(c)] += 1;
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
            }
        }

        // Empty-cluster repair: split the largest cluster at the member
        // farthest from its centroid. Leaves WCSS no worse, so the trace
        // below stays non-increasing.
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            int largest = -1;
            for (int l = 0; l < k; ++l) {
                if (counts[static_cast<std::size_t>(l)] < 2) continue;
                if (largest < 0 ||
                    counts[static_cast<std::size_t>(l)] > counts[static_cast<std::size_t>(largest)]) {
                    largest = l;
                }
            }
            if (largest < 0) break;  // nothing splittable: k > #distinct points
            int farthest = -1;
            double best = -1.0;
            for (int i = 0; i < n; ++i) {
                if (out.assignment[static_cast<std::size_t>(i)] != largest) continue;
                const double d = (points.row(i) - centroids.row(largest)).squaredNorm();
                if (d > best) {
                    best = d;
                    farthest = i;
                }
            }
            out.assignment[static_cast<std::size_t>(farthest)] = c;
            centroids.row(c) = points.row(farthest);
            counts[static_cast<std::size_t>(c)] = 1;
            counts[static_cast<std::size_t>(largest)] -= 1;
            // Recompute the donor's centroid without the moved member.
            sums.row(largest) -= points.row(farthest);
            centroids.row(largest) =
                sums.row(largest) / counts[static_cast<std::size_t>(largest)];
        }

        out.inertia_trace.push_back(wcss(points, centroids, out.assignment));
    }

    out.inertia = wcss(points, centroids, out.assignment);
    out.centroids = std::move(centroids);
    return out;
}

Partition compact_partition(std::vector<int> labels) {
    Partition p;
    std::vector<int> remap;
    int next = 0;
    for (int& l : labels) {
        if (l >= static_cast<int>(remap.size())) remap.resize(static_cast<std::size_t>(l) + 1, -1);
        if (remap[static_cast<std::size_t>(l)] < 0) remap[static_cast<std::size_t>(l)] = next++;
        l = remap[static_cast<std::size_t>(l)];
    }
    p.assignment = std::move(labels);
    p.num_communities = next;
    return p;
}

// Dense cosine affinity: negative similarities clamped to zero, zero diagonal.
Eigen::MatrixXd cosine_affinity(const MatrixXfR& vectors) {
    const int n = static_cast<int>(vectors.rows());
    MatrixXdR unit = vectors.cast<double>();
    for (int i = 0; i < n; ++i) {
        const double norm = unit.row(i).norm();
        if (!(norm > 0.0)) {
            throw std::runtime_error("affinity: all-zero embedding row " + std::to_string(i));
        }
        unit.row(i) /= norm;
    }
    Eigen::MatrixXd affinity = (unit * unit.transpose()).cwiseMax(0.0);
    affinity.diagonal().setZero();
    return affinity;
}

struct LaplacianEigens {
    Eigen::VectorXd values;       // ascending
    Eigen::MatrixXd vectors;      // columns in the same order
};

LaplacianEigens laplacian_eigens(const EmbeddingSet& embeddings) {
    embeddings.validate();
    const int n = static_cast<int>(embeddings.num_rows());
    if (n < 2) throw std::invalid_argument("laplacian: need at least two embeddings");

    Eigen::MatrixXd affinity = cosine_affinity(embeddings.vectors);
    Eigen::VectorXd degree = affinity.rowwise().sum();
    for (int i = 0; i < n; ++i) {
        if (!(degree(i) > 0.0)) {
            throw std::runtime_error("laplacian: degenerate affinity (isolated row " +
                                     std::to_string(i) + ")");
        }
    }
    Eigen::VectorXd inv_sqrt = degree.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(n, n) -
                          inv_sqrt.asDiagonal() * affinity * inv_sqrt.asDiagonal();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
    if (solver.info() != Eigen::Success) throw std::runtime_error("laplacian: eigensolve failed");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

int eigengap_argmax(const Eigen::VectorXd& values, int k_max, EigengapEstimate* est) {
    double best_gap = -1.0;
    int best_k = 1;
    for (int j = 1; j < k_max; ++j) {
        const double gap = values(j) - values(j - 1);
        if (est != nullptr) est->gaps.push_back(gap);
        if (gap > best_gap) {
            best_gap = gap;
            best_k = j;
        }
    }
    return best_k;
}

}  // namespace

KMeansResult kmeans(const MatrixXfR& points, const KMeansParams& params) {
    const int n = static_cast<int>(points.rows());
    if (n < 1) throw std::invalid_argument("kmeans: no points");
    if (params.k < 1 || params.k > n) throw std::invalid_argument("kmeans: k out of range");
    if (params.n_restarts < 1) throw std::invalid_argument("kmeans: n_restarts must be >= 1");
    if (!points.allFinite()) throw std::invalid_argument("kmeans: non-finite input");

    const MatrixXdR pts = points.cast<double>();
    LloydOutcome best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < params.n_restarts; ++r) {
        std::mt19937_64 rng(params.seed.derive(static_cast<std::uint64_t>(r)).seed);
        LloydOutcome run = run_lloyd(pts, params.k, params.max_iterations, rng);
        if (run.inertia < best.inertia) best = std::move(run);
    }

    KMeansResult result;
    result.partition = compact_partition(best.assignment);
    result.partition.converged = best.converged;
    // Reorder centroids to match the compacted labels.
    result.centroids = MatrixXfR(result.partition.num_communities, points.cols());
    std::vector<char> seen(static_cast<std::size_t>(params.k), 0);
    for (int i = 0; i < n; ++i) {
        const int raw = best.assignment[static_cast<std::size_t>(i)];
        if (!seen[static_cast<std::size_t>(raw)]) {
            seen[static_cast<std::size_t>(raw)] = 1;
            result.centroids.row(result.partition.assignment[static_cast<std::size_t>(i)]) =
                best.centroids.row(raw).cast<float>();
        }
    }
    result.inertia = best.inertia;
    result.inertia_trace = std::move(best.inertia_trace);
    return result;
}

EigengapEstimate estimate_k_eigengap(const EmbeddingSet& embeddings, int k_max) {
    const int n = static_cast<int>(embeddings.num_rows());
    if (k_max < 2) throw std::invalid_argument("eigengap: k_max must be >= 2");
    if (k_max > n) throw std::invalid_argument("eigengap: k_max exceeds number of embeddings");

    LaplacianEigens eigens = laplacian_eigens(embeddings);
    EigengapEstimate est;
    for (int j = 0; j < k_max; ++j) est.eigenvalues.push_back(eigens.values(j));
    est.k = eigengap_argmax(eigens.values, k_max, &est);
    return est;
}

Partition spectral_cluster(const EmbeddingSet& embeddings, int k, RngSeed seed, int k_max) {
    const int n = static_cast<int>(embeddings.num_rows());
    if (k < 0 || k > n) throw std::invalid_argument("spectral: k out of range");

    LaplacianEigens eigens;
    if (k == 0 || k > 1) {
        eigens = laplacian_eigens(embeddings);
    }
    if (k == 0) {
        k_max = std::min(k_max, n);
        if (k_max < 2) throw std::invalid_argument("spectral: too few embeddings for auto k");
        k = eigengap_argmax(eigens.values, k_max, nullptr);
    }
    if (k == 1) {
        Partition p;
        p.assignment.assign(static_cast<std::size_t>(n), 0);
        p.num_communities = 1;
        return p;
    }

    MatrixXfR rows = eigens.vectors.leftCols(k).cast<float>();
    for (int i = 0; i < n; ++i) {
        const float norm = rows.row(i).norm();
        if (norm > 0.0f) rows.row(i) /= norm;
    }

    KMeansParams kp;
    kp.k = k;
    kp.n_restarts = 10;
    kp.seed = seed;
    return kmeans(rows, kp).partition;
}

Partition ahc_cluster(const MatrixXfR& points, const AhcParams& params) {
    const int n = static_cast<int>(points.rows());
    if (n < 1) throw std::invalid_argument("ahc: no points");
    if (!points.allFinite()) throw std::invalid_argument("ahc: non-finite input");
    if (params.target_k < 0 || params.target_k > n)
        throw std::invalid_argument("ahc: target_k out of range");

    MatrixXdR unit = points.cast<double>();
    for (int i = 0; i < n; ++i) {
        const double norm = unit.row(i).norm();
        if (!(norm > 0.0)) throw std::invalid_argument("ahc: zero vector has no cosine similarity");
        unit.row(i) /= norm;
    }

    // Average-linkage similarity between clusters; the Lance-Williams update
    //   sim(A+B, C) = (|A| sim(A,C) + |B| sim(B,C)) / (|A| + |B|)
    // keeps entries equal to the mean pairwise cosine between members.
    MatrixXdR sim = unit * unit.transpose();
    std::vector<int> size(static_cast<std::size_t>(n), 1);
    std::vector<char> active(static_cast<std::size_t>(n), 1);
    std::vector<int> label(static_cast<std::size_t>(n));
    std::iota(label.begin(), label.end(), 0);

    int active_count = n;
    for (int merges = 0; merges < n - 1; ++merges) {
        if (params.target_k > 0 && active_count <= params.target_k) break;
        int bi = -1, bj = -1;
        double best = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (!active[static_cast<std::size_t>(i)]) continue;
            for (int j = i + 1; j < n; ++j) {
                if (!active[static_cast<std::size_t>(j)]) continue;
                if (sim(i, j) > best) {
                    best = sim(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        if (bi < 0) break;
        if (params.target_k <= 0 && best < params.stop_threshold) break;

        const double wi = size[static_cast<std::size_t>(bi)];
        const double wj = size[static_cast<std::size_t>(bj)];
        for (int c = 0; c < n; ++c) {
            if (!active[static_cast<std::size_t>(c)] || c == bi || c == bj) continue;
            const double merged = (wi * sim(bi, c) + wj * sim(bj, c)) / (wi + wj);
            sim(bi, c) = merged;
            sim(c, bi) = merged;
        }
        size[static_cast<std::size_t>(bi)] += size[static_cast<std::size_t>(bj)];
        active[static_cast<std::size_t>(bj)] = 0;
        --active_count;
        for (int i = 0; i < n; ++i) {
            if (label[static_cast<std::size_t>(i)] == bj) label[static_cast<std::size_t>(i)] = bi;
        }
    }
    return compact_partition(std::move(label));
}

WtaPoolResult wta_pool(const MatrixXfR& frames, RngSeed seed) {
    const int t = static_cast<int>(frames.rows());
    if (t < 1) throw std::invalid_argument("wta_pool: no frames");

    WtaPoolResult result;
    if (t == 1) {
        result.target = frames.row(0);
        result.degenerate = true;
        return result;
    }

    bool identical = true;
    for (int i = 1; identical && i < t; ++i) {
        identical = frames.row(i) == frames.row(0);
    }
    if (identical) {
        result.target = frames.row(0);
        return result;
    }

    KMeansParams params;
    params.k = 2;
    params.n_restarts = 5;
    params.seed = seed;
    KMeansResult split = kmeans(frames, params);
    if (split.partition.num_communities == 1) {
        result.target = frames.cast<double>().colwise().mean().cast<float>();
        return result;
    }

    int count0 = 0;
    for (int l : split.partition.assignment) count0 += l == 0 ? 1 : 0;
    const int count1 = t - count0;
    int dominant;
    if (count0 != count1) {
        dominant = count0 > count1 ? 0 : 1;
    } else {
        dominant = split.partition.assignment[0];
    }

    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(frames.cols());
    int members = 0;
    for (int i = 0; i < t; ++i) {
        if (split.partition.assignment[static_cast<std::size_t>(i)] == dominant) {
            sum += frames.row(i).cast<double>();
            ++members;
        }
    }
    result.target = (sum / members).cast<float>();
    result.dominant_fraction = static_cast<double>(members) / static_cast<double>(t);
    return result;
}

}  // namespace commdiar
