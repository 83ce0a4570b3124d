#include "commdiar/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace commdiar {

SparseGraph SparseGraph::from_adjacency(std::vector<std::vector<std::pair<int, double>>> adjacency) {
    SparseGraph g;
    g.num_nodes_ = static_cast<int>(adjacency.size());
    g.offsets_.assign(static_cast<std::size_t>(g.num_nodes_) + 1, 0);

    std::size_t total = 0;
    for (const auto& row : adjacency) total += row.size();
    g.neighbors_.reserve(total);
    g.weights_.reserve(total);
    g.degrees_.assign(static_cast<std::size_t>(g.num_nodes_), 0.0);

    for (int i = 0; i < g.num_nodes_; ++i) {
        auto& row = adjacency[static_cast<std::size_t>(i)];
        std::sort(row.begin(), row.end());
        double deg = 0.0;
        for (const auto& [j, w] : row) {
            if (j < 0 || j >= g.num_nodes_) throw std::invalid_argument("SparseGraph: neighbor index out of range");
            if (j == i) throw std::invalid_argument("SparseGraph: self-loop at node " + std::to_string(i));
            if (!(w > 0.0) || !std::isfinite(w)) {
                throw std::invalid_argument("SparseGraph: non-positive or non-finite weight on edge " +
                                            std::to_string(i) + "-" + std::to_string(j));
            }
            g.neighbors_.push_back(j);
            g.weights_.push_back(w);
            deg += w;
        }
        g.degrees_[static_cast<std::size_t>(i)] = deg;
        g.offsets_[static_cast<std::size_t>(i) + 1] = g.neighbors_.size();
    }

    // Symmetry check: every directed entry must have its mirror with equal weight.
    struct Entry { int a, b; double w; };
    std::vector<Entry> entries;
    entries.reserve(g.neighbors_.size());
    for (int i = 0; i < g.num_nodes_; ++i) {
        auto nbrs = g.neighbors(i);
        auto ws = g.weights(i);
        for (std::size_t t = 0; t < nbrs.size(); ++t) {
            entries.push_back({std::min(i, nbrs[t]), std::max(i, nbrs[t]), ws[t]});
        }
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
        return std::tie(x.a, x.b, x.w) < std::tie(y.a, y.b, y.w);
    });
    if (entries.size() % 2 != 0) throw std::invalid_argument("SparseGraph: asymmetric adjacency");
    for (std::size_t t = 0; t < entries.size(); t += 2) {
        const auto& x = entries[t];
        const auto& y = entries[t + 1];
        if (x.a != y.a || x.b != y.b || x.w != y.w) {
            throw std::invalid_argument("SparseGraph: asymmetric edge " + std::to_string(x.a) + "-" +
                                        std::to_string(x.b));
        }
    }

    g.total_edge_weight_ = std::accumulate(g.degrees_.begin(), g.degrees_.end(), 0.0) / 2.0;
    return g;
}

namespace {

void check_knn_params(const EmbeddingSet& embeddings, int k) {
    embeddings.validate();
    const auto n = embeddings.num_rows();
    if (k < 1 || k >= n) {
        throw std::invalid_argument("knn: need 1 <= k < N, got k=" + std::to_string(k) +
                                    " N=" + std::to_string(n));
    }
}

// 1 - cosine for cosine metric, euclidean distance otherwise.
MatrixXfR distance_block(const MatrixXfR& points, const Eigen::VectorXf& sq_norms,
                         Eigen::Index row_begin, Eigen::Index rows, SimilarityMetric metric) {
    MatrixXfR block = points.middleRows(row_begin, rows) * points.transpose();
    if (metric == SimilarityMetric::cosine) {
        block = (1.0f - block.array()).matrix();
    } else {
        for (Eigen::Index r = 0; r < rows; ++r) {
            block.row(r) = (sq_norms(row_begin + r) + sq_norms.array() - 2.0f * block.row(r).transpose().array())
                               .max(0.0f)
                               .sqrt()
                               .matrix()
                               .transpose();
        }
    }
    return block;
}

}  // namespace

KnnTable exact_knn(const EmbeddingSet& embeddings, int k, SimilarityMetric metric) {
    check_knn_params(embeddings, k);
    const Eigen::Index n = embeddings.num_rows();

    MatrixXfR points = embeddings.vectors;
    Eigen::VectorXf sq_norms = points.rowwise().squaredNorm();
    if (metric == SimilarityMetric::cosine) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const float norm = std::sqrt(sq_norms(i));
            if (!(norm > 0.0f)) {
                throw std::runtime_error("knn: all-zero embedding row " + std::to_string(i) +
                                         " under cosine metric");
            }
            points.row(i) /= norm;
        }
    }

    KnnTable table;
    table.k = k;
    table.indices.assign(static_cast<std::size_t>(n), {});
    table.distances.assign(static_cast<std::size_t>(n), {});

    const Eigen::Index block_rows = std::max<Eigen::Index>(1, std::min<Eigen::Index>(n, 512));
    std::vector<std::pair<double, int>> cand;
    cand.reserve(static_cast<std::size_t>(n));

    for (Eigen::Index begin = 0; begin < n; begin += block_rows) {
        const Eigen::Index rows = std::min(block_rows, n - begin);
        MatrixXfR dist = distance_block(points, sq_norms, begin, rows, metric);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const Eigen::Index i = begin + r;
            cand.clear();
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) continue;
                cand.emplace_back(std::max(0.0, static_cast<double>(dist(r, j))), static_cast<int>(j));
            }
            std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
            auto& idx_row = table.indices[static_cast<std::size_t>(i)];
            auto& dist_row = table.distances[static_cast<std::size_t>(i)];
            idx_row.reserve(static_cast<std::size_t>(k));
            dist_row.reserve(static_cast<std::size_t>(k));
            for (int t = 0; t < k; ++t) {
                dist_row.push_back(cand[static_cast<std::size_t>(t)].first);
                idx_row.push_back(cand[static_cast<std::size_t>(t)].second);
            }
        }
    }
    return table;
}

SparseGraph knn_similarity_graph(const EmbeddingSet& embeddings, int k, SimilarityMetric metric,
                                 double sim_threshold) {
    KnnTable table = exact_knn(embeddings, k, metric);
    const int n = static_cast<int>(embeddings.num_rows());

    double sigma = 1.0;
    if (metric == SimilarityMetric::euclidean_gaussian) {
        std::vector<double> all;
        all.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(k));
        for (const auto& row : table.distances) all.insert(all.end(), row.begin(), row.end());
        const std::size_t mid = all.size() / 2;
        std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(mid), all.end());
        sigma = all[mid];
        if (!(sigma > 0.0)) sigma = 1e-12;
    }

    // Union symmetrization keyed on (min, max); weight = max of the two
    // directed weights.
    std::vector<std::vector<std::pair<int, double>>> upper(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto& idx = table.indices[static_cast<std::size_t>(i)];
        const auto& dst = table.distances[static_cast<std::size_t>(i)];
        for (int t = 0; t < k; ++t) {
            const int j = idx[static_cast<std::size_t>(t)];
            double w;
            if (metric == SimilarityMetric::cosine) {
                w = std::max(1.0 - dst[static_cast<std::size_t>(t)], 0.0);
            } else {
                const double d = dst[static_cast<std::size_t>(t)];
                w = std::exp(-(d * d) / (sigma * sigma));
            }
            if (!(w > 0.0)) continue;
            if (sim_threshold >= 0.0 && w < sim_threshold) continue;
            const int a = std::min(i, j);
            const int b = std::max(i, j);
            auto& row = upper[static_cast<std::size_t>(a)];
            auto it = std::find_if(row.begin(), row.end(), [b](const auto& p) { return p.first == b; });
            if (it == row.end()) {
                row.emplace_back(b, w);
            } else {
                it->second = std::max(it->second, w);
            }
        }
    }

    std::vector<std::vector<std::pair<int, double>>> adjacency(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
        for (const auto& [b, w] : upper[static_cast<std::size_t>(a)]) {
            adjacency[static_cast<std::size_t>(a)].emplace_back(b, w);
            adjacency[static_cast<std::size_t>(b)].emplace_back(a, w);
        }
    }
    return SparseGraph::from_adjacency(std::move(adjacency));
}

void save_edge_list(const SparseGraph& graph, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char buf[96];
    for (int i = 0; i < graph.num_nodes(); ++i) {
        auto nbrs = graph.neighbors(i);
        auto ws = graph.weights(i);
        for (std::size_t t = 0; t < nbrs.size(); ++t) {
            if (i < nbrs[t]) {
                std::snprintf(buf, sizeof(buf), "%d %d %.12g\n", i, nbrs[t], ws[t]);
                out << buf;
            }
        }
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace commdiar
