#include "commdiar/umap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

namespace commdiar {

namespace {

constexpr double kBisectionTolerance = 1e-5;
constexpr int kBisectionIterations = 64;
constexpr double kSigmaFloorScale = 1e-3;

double membership_sum(const std::vector<double>& dists, double rho, double sigma) {
    double sum = 0.0;
    for (double d : dists) sum += std::exp(-std::max(0.0, d - rho) / sigma);
    return sum;
}

}  // namespace

FuzzyCalibration calibrate_fuzzy_scales(const KnnTable& knn) {
    if (knn.k < 2) throw std::invalid_argument("fuzzy calibration needs k >= 2 neighbors");
    const std::size_t n = knn.distances.size();
    const double target = std::log2(static_cast<double>(knn.k));

    FuzzyCalibration out;
    out.rho.resize(n);
    out.sigma.resize(n);
    out.residual.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        const auto& dists = knn.distances[i];

        double rho = 0.0;
        for (double d : dists) {
            if (d > 0.0) {
                rho = d;
                break;
            }
        }
        out.rho[i] = rho;

        // Bisection on sigma; the membership sum grows monotonically with it.
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        double mid = 1.0;
        for (int it = 0; it < kBisectionIterations; ++it) {
            const double sum = membership_sum(dists, rho, mid);
            if (std::abs(sum - target) < kBisectionTolerance) break;
            if (sum > target) {
                hi = mid;
                mid = (lo + hi) / 2.0;
            } else {
                lo = mid;
                mid = std::isinf(hi) ? mid * 2.0 : (lo + hi) / 2.0;
            }
        }

        double mean_dist = 0.0;
        for (double d : dists) mean_dist += d;
        mean_dist /= static_cast<double>(dists.size());
        const double floor = kSigmaFloorScale * mean_dist;
        if (mid < floor) {
            mid = floor;
            out.degenerate = true;
        }
        if (mid <= 0.0) {
            // All-zero distances: any sigma gives the same (degenerate) sums.
            mid = kSigmaFloorScale;
            out.degenerate = true;
        }
        out.sigma[i] = mid;
        out.residual[i] = std::abs(membership_sum(dists, rho, mid) - target);
        if (out.residual[i] > kBisectionTolerance && !out.degenerate) out.degenerate = true;
    }
    return out;
}

SparseGraph fuzzy_neighborhood_graph(const KnnTable& knn, const FuzzyCalibration& calibration) {
    const std::size_t n = knn.indices.size();
    if (calibration.rho.size() != n || calibration.sigma.size() != n) {
        throw std::invalid_argument("fuzzy graph: calibration size does not match knn table");
    }

    // Directed memberships, then probabilistic union per unordered pair. The
    // union is computed as wmax + wmin*(1 - wmax) so a weight of one stays
    // exactly one.
    std::vector<std::vector<std::pair<int, double>>> directed(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < knn.indices[i].size(); ++t) {
            const double d = knn.distances[i][t];
            const double w =
                std::exp(-std::max(0.0, d - calibration.rho[i]) / calibration.sigma[i]);
            directed[i].emplace_back(knn.indices[i][t], w);
        }
    }

    std::vector<std::vector<std::pair<int, double>>> adj(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [j, w_ij] : directed[i]) {
            const auto ju = static_cast<std::size_t>(j);
            if (ju < i) continue;  // handled from the lower-index side
            double w_ji = 0.0;
            for (const auto& [back, w] : directed[ju]) {
                if (back == static_cast<int>(i)) {
                    w_ji = w;
                    break;
                }
            }
            const double wmax = std::max(w_ij, w_ji);
            const double wmin = std::min(w_ij, w_ji);
            const double combined = wmax + wmin * (1.0 - wmax);
            adj[i].emplace_back(j, combined);
            adj[ju].emplace_back(static_cast<int>(i), combined);
        }
        // Pairs where only j -> i exists are caught when i iterates over
        // directed[j]; pairs where only i -> j exists were handled above. The
        // remaining case is j < i with no reverse edge:
        for (const auto& [j, w_ij] : directed[i]) {
            const auto ju = static_cast<std::size_t>(j);
            if (ju >= i) continue;
            bool has_reverse = false;
            for (const auto& [back, w] : directed[ju]) {
                if (back == static_cast<int>(i)) {
                    has_reverse = true;
                    break;
                }
            }
            if (!has_reverse) {
                adj[i].emplace_back(j, w_ij);
                adj[ju].emplace_back(static_cast<int>(i), w_ij);
            }
        }
    }
    return SparseGraph::from_adjacency(std::move(adj));
}

CurveFit fit_output_curve(double min_dist) {
    if (!(min_dist >= 0.0) || !std::isfinite(min_dist)) {
        throw std::invalid_argument("min_dist must be finite and >= 0");
    }
    constexpr int kSamples = 300;
    constexpr double kSpan = 3.0;
    std::vector<double> x(kSamples), y(kSamples);
    for (int t = 0; t < kSamples; ++t) {
        x[t] = kSpan * static_cast<double>(t) / (kSamples - 1);
        y[t] = x[t] <= min_dist ? 1.0 : std::exp(-(x[t] - min_dist));
    }

    // Levenberg-Marquardt on f(x) = 1 / (1 + a x^(2b)).
    double a = 1.0, b = 1.0;
    double lambda = 1e-3;
    auto sum_sq = [&](double pa, double pb) {
        double s = 0.0;
        for (int t = 0; t < kSamples; ++t) {
            const double f = 1.0 / (1.0 + pa * std::pow(x[t], 2.0 * pb));
            s += (f - y[t]) * (f - y[t]);
        }
        return s;
    };

    double err = sum_sq(a, b);
    for (int iter = 0; iter < 200; ++iter) {
        double jtj00 = 0, jtj01 = 0, jtj11 = 0, jtr0 = 0, jtr1 = 0;
        for (int t = 0; t < kSamples; ++t) {
            if (x[t] <= 0.0) continue;
            const double p = std::pow(x[t], 2.0 * b);
            const double denom = 1.0 + a * p;
            const double f = 1.0 / denom;
            const double r = f - y[t];
            const double dfda = -p / (denom * denom);
            const double dfdb = -a * p * 2.0 * std::log(x[t]) / (denom * denom);
            jtj00 += dfda * dfda;
            jtj01 += dfda * dfdb;
            jtj11 += dfdb * dfdb;
            jtr0 += dfda * r;
            jtr1 += dfdb * r;
        }
        const double d00 = jtj00 * (1.0 + lambda);
        const double d11 = jtj11 * (1.0 + lambda);
        const double det = d00 * d11 - jtj01 * jtj01;
        if (std::abs(det) < 1e-300) break;
        const double da = (-jtr0 * d11 + jtr1 * jtj01) / det;
        const double db = (-jtr1 * d00 + jtr0 * jtj01) / det;
        const double na = a + da;
        const double nb = b + db;
        if (!(na > 0.0) || !(nb > 0.0) || !std::isfinite(na) || !std::isfinite(nb)) {
            lambda *= 10.0;
            continue;
        }
        const double nerr = sum_sq(na, nb);
        if (nerr < err) {
            a = na;
            b = nb;
            err = nerr;
            lambda = std::max(lambda * 0.3, 1e-12);
            if (std::abs(da) < 1e-12 && std::abs(db) < 1e-12) break;
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) break;
        }
    }

    CurveFit fit;
    fit.a = a;
    fit.b = b;
    fit.rms_residual = std::sqrt(err / kSamples);
    return fit;
}

double attractive_coefficient(double sq_dist, double a, double b) {
    if (sq_dist <= 0.0) return 0.0;
    const double pb = std::pow(sq_dist, b);
    return -2.0 * a * b * pb / sq_dist / (a * pb + 1.0);
}

double repulsive_coefficient(double sq_dist, double a, double b, double eps) {
    if (sq_dist <= 0.0 && eps <= 0.0) {
        throw std::domain_error("repulsive gradient undefined at zero distance with zero eps");
    }
    return 2.0 * b / ((eps + sq_dist) * (a * std::pow(sq_dist, b) + 1.0));
}

InitialEmbedding initial_embedding(const SparseGraph& fuzzy, int target_dim, RngSeed seed,
                                   int max_spectral_nodes) {
    if (target_dim < 1) throw std::invalid_argument("target_dim must be >= 1");
    const int n = fuzzy.num_nodes();
    std::mt19937_64 rng(seed.seed);

    InitialEmbedding out;
    out.coords = MatrixXfR(n, target_dim);

    const bool try_spectral = n <= max_spectral_nodes && n > target_dim + 1;
    if (try_spectral) {
        Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
        std::vector<double> inv_sqrt_deg(static_cast<std::size_t>(n));
        bool degree_ok = true;
        for (int i = 0; i < n; ++i) {
            const double d = fuzzy.degree(i);
            if (!(d > 0.0)) {
                degree_ok = false;
                break;
            }
            inv_sqrt_deg[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(d);
        }
        if (degree_ok) {
            for (int i = 0; i < n; ++i) {
                lap(i, i) = 1.0;
                auto nbrs = fuzzy.neighbors(i);
                auto ws = fuzzy.weights(i);
                for (std::size_t t = 0; t < nbrs.size(); ++t) {
                    lap(i, nbrs[t]) = -ws[t] * inv_sqrt_deg[static_cast<std::size_t>(i)] *
                                      inv_sqrt_deg[static_cast<std::size_t>(nbrs[t])];
                }
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
            if (solver.info() == Eigen::Success) {
                // Columns 1..target_dim: the trivial eigenvector is skipped.
                Eigen::MatrixXd v = solver.eigenvectors().middleCols(1, target_dim);
                const double max_abs = v.cwiseAbs().maxCoeff();
                if (max_abs > 0.0) v *= 10.0 / max_abs;
                std::normal_distribution<double> jitter(0.0, 1e-4);
                for (int i = 0; i < n; ++i) {
                    for (int d = 0; d < target_dim; ++d) {
                        out.coords(i, d) = static_cast<float>(v(i, d) + jitter(rng));
                    }
                }
                out.spectral = true;
                return out;
            }
        }
    }

    std::uniform_real_distribution<double> uniform(-10.0, 10.0);
    for (int i = 0; i < n; ++i) {
        for (int d = 0; d < target_dim; ++d) out.coords(i, d) = static_cast<float>(uniform(rng));
    }
    out.spectral = false;
    return out;
}

MatrixXfR optimize_embedding(const SparseGraph& fuzzy, MatrixXfR init, const CurveFit& curve,
                             const UmapParams& params) {
    const int n = fuzzy.num_nodes();
    if (init.rows() != n) throw std::invalid_argument("optimize_embedding: init rows != graph nodes");
    if (params.n_epochs < 1) throw std::invalid_argument("n_epochs must be >= 1");
    const int dim = static_cast<int>(init.cols());
    const double a = curve.a;
    const double b = curve.b;

    // Directed edge arrays; each undirected edge appears once per direction so
    // both endpoints take the head role (and its negative samples) equally.
    std::vector<int> head, tail;
    std::vector<double> weight;
    for (int i = 0; i < n; ++i) {
        auto nbrs = fuzzy.neighbors(i);
        auto ws = fuzzy.weights(i);
        for (std::size_t t = 0; t < nbrs.size(); ++t) {
            head.push_back(i);
            tail.push_back(nbrs[t]);
            weight.push_back(ws[t]);
        }
    }
    const std::size_t num_edges = head.size();
    if (num_edges == 0) return init;

    const double w_max = *std::max_element(weight.begin(), weight.end());
    std::vector<double> epochs_per_sample(num_edges);
    for (std::size_t e = 0; e < num_edges; ++e) epochs_per_sample[e] = w_max / weight[e];

    std::vector<double> next_sample = epochs_per_sample;
    std::vector<double> epochs_per_negative(num_edges);
    for (std::size_t e = 0; e < num_edges; ++e) {
        epochs_per_negative[e] = epochs_per_sample[e] / params.negative_sample_rate;
    }
    std::vector<double> next_negative = epochs_per_negative;

    std::mt19937_64 rng(params.seed.derive(0xEDCE).seed);
    std::uniform_int_distribution<int> pick_node(0, n - 1);

    const auto clip = [](double v) { return std::clamp(v, -4.0, 4.0); };

    for (int epoch = 1; epoch <= params.n_epochs; ++epoch) {
        const double alpha =
            params.learning_rate * (1.0 - static_cast<double>(epoch - 1) / params.n_epochs);
        for (std::size_t e = 0; e < num_edges; ++e) {
            if (next_sample[e] > static_cast<double>(epoch)) continue;
            const int i = head[e];
            const int j = tail[e];

            double sq = 0.0;
            for (int d = 0; d < dim; ++d) {
                const double diff = static_cast<double>(init(i, d)) - init(j, d);
                sq += diff * diff;
            }
            const double att = attractive_coefficient(sq, a, b);
            for (int d = 0; d < dim; ++d) {
                const double diff = static_cast<double>(init(i, d)) - init(j, d);
                const double g = clip(att * diff) * alpha;
                init(i, d) += static_cast<float>(g);
                init(j, d) -= static_cast<float>(g);
            }
            next_sample[e] += epochs_per_sample[e];

            const int negatives = static_cast<int>(
                (static_cast<double>(epoch) - next_negative[e]) / epochs_per_negative[e]);
            for (int s = 0; s < negatives; ++s) {
                const int k = pick_node(rng);
                if (k == i) continue;
                double nsq = 0.0;
                for (int d = 0; d < dim; ++d) {
                    const double diff = static_cast<double>(init(i, d)) - init(k, d);
                    nsq += diff * diff;
                }
                if (nsq > 0.0) {
                    const double rep = repulsive_coefficient(nsq, a, b, params.repulsion_eps);
                    for (int d = 0; d < dim; ++d) {
                        const double diff = static_cast<double>(init(i, d)) - init(k, d);
                        init(i, d) += static_cast<float>(clip(rep * diff) * alpha);
                    }
                } else {
                    // Coincident points: deterministic maximal kick apart.
                    for (int d = 0; d < dim; ++d) init(i, d) += static_cast<float>(4.0 * alpha);
                }
            }
            next_negative[e] += negatives * epochs_per_negative[e];
        }
    }
    return init;
}

UmapResult umap_embed(const EmbeddingSet& embeddings, const UmapParams& params) {
    embeddings.validate();
    if (params.n_neighbors < 2) throw std::invalid_argument("n_neighbors must be >= 2");
    if (embeddings.num_rows() <= params.n_neighbors) {
        throw std::invalid_argument("umap needs more rows than n_neighbors");
    }

    KnnTable knn = exact_knn(embeddings, params.n_neighbors, params.metric);
    UmapResult result;
    result.calibration = calibrate_fuzzy_scales(knn);
    SparseGraph fuzzy = fuzzy_neighborhood_graph(knn, result.calibration);
    result.curve = fit_output_curve(params.min_dist);
    InitialEmbedding init = initial_embedding(fuzzy, params.target_dim, params.seed.derive(0x1417),
                                              params.spectral_init_max_nodes);
    result.used_spectral_init = init.spectral;
    result.embedding = optimize_embedding(fuzzy, std::move(init.coords), result.curve, params);
    return result;
}

double fuzzy_cross_entropy(const SparseGraph& fuzzy, const MatrixXfR& embedding, double a,
                           double b) {
    const int n = fuzzy.num_nodes();
    if (embedding.rows() != n) throw std::invalid_argument("cross entropy: size mismatch");
    constexpr double kClamp = 1e-12;

    // Memberships default to zero except where the fuzzy graph has an edge.
    double ce = 0.0;
    std::vector<double> mu_row(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::fill(mu_row.begin(), mu_row.end(), 0.0);
        auto nbrs = fuzzy.neighbors(i);
        auto ws = fuzzy.weights(i);
        for (std::size_t t = 0; t < nbrs.size(); ++t) mu_row[static_cast<std::size_t>(nbrs[t])] = ws[t];

        for (int j = i + 1; j < n; ++j) {
            const double mu = std::clamp(mu_row[static_cast<std::size_t>(j)], kClamp, 1.0 - kClamp);
            const double sq = (embedding.row(i) - embedding.row(j)).cast<double>().squaredNorm();
            double nu = 1.0 / (1.0 + a * std::pow(sq, b));
            nu = std::clamp(nu, kClamp, 1.0 - kClamp);
            ce += -mu * std::log(nu) - (1.0 - mu) * std::log(1.0 - nu);
        }
    }
    return ce;
}

}  // namespace commdiar
