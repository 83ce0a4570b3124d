#include "commdiar/pipeline.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "commdiar/community.hpp"
#include "commdiar/graph.hpp"

namespace commdiar {

namespace {

bool is_community(ClusterMethod m) {
    return m == ClusterMethod::louvain || m == ClusterMethod::leiden ||
           m == ClusterMethod::umap_leiden;
}

// "<segment>_f<index>" -> "<segment>"
std::string frame_segment_id(const std::string& id) {
    const auto pos = id.rfind("_f");
    if (pos == std::string::npos || pos == 0)
        throw std::invalid_argument("pooling expects frame ids of the form <segment>_f<index>, got: " + id);
    return id.substr(0, pos);
}

// Collapse frame rows into one pooled vector per segment, keeping first-seen
// segment order. Frame times are the segment's span, so the first member's
// time carries over.
EmbeddingSet pool_frame_groups(const EmbeddingSet& frames, RngSeed seed, double* mean_fraction) {
    const int n = static_cast<int>(frames.num_rows());
    if (n == 0) throw std::invalid_argument("pooling: empty frame set");

    std::vector<std::string> group_ids;
    std::unordered_map<std::string, int> group_index;
    std::vector<std::vector<int>> members;
    for (int i = 0; i < n; ++i) {
        const std::string sid = frame_segment_id(frames.segment_ids[static_cast<std::size_t>(i)]);
        auto [it, fresh] = group_index.emplace(sid, static_cast<int>(group_ids.size()));
        if (fresh) {
            group_ids.push_back(sid);
            members.emplace_back();
        }
        members[static_cast<std::size_t>(it->second)].push_back(i);
    }

    const int g = static_cast<int>(group_ids.size());
    EmbeddingSet out;
    out.vectors.resize(g, frames.dim());
    out.segment_ids = std::move(group_ids);
    if (frames.times) {
        std::vector<SegmentTime> times;
        times.reserve(static_cast<std::size_t>(g));
        for (int c = 0; c < g; ++c)
            times.push_back((*frames.times)[static_cast<std::size_t>(members[static_cast<std::size_t>(c)].front())]);
        out.times = std::move(times);
    }

    double fraction_sum = 0.0;
    for (int c = 0; c < g; ++c) {
        const auto& rows = members[static_cast<std::size_t>(c)];
        MatrixXfR block(static_cast<Eigen::Index>(rows.size()), frames.dim());
        for (std::size_t r = 0; r < rows.size(); ++r)
            block.row(static_cast<Eigen::Index>(r)) = frames.vectors.row(rows[r]);
        const WtaPoolResult pooled = wta_pool(block, seed.derive(static_cast<std::uint64_t>(c)));
        out.vectors.row(c) = pooled.target;
        fraction_sum += pooled.dominant_fraction;
    }
    *mean_fraction = fraction_sum / g;
    return out;
}

}  // namespace

ClusterMethod cluster_method_from_string(const std::string& name) {
    if (name == "kmeans") return ClusterMethod::kmeans;
    if (name == "spectral") return ClusterMethod::spectral;
    if (name == "ahc") return ClusterMethod::ahc;
    if (name == "louvain") return ClusterMethod::louvain;
    if (name == "leiden") return ClusterMethod::leiden;
    if (name == "umap-leiden") return ClusterMethod::umap_leiden;
    throw std::invalid_argument("unknown cluster method: " + name);
}

std::string to_string(ClusterMethod method) {
    switch (method) {
        case ClusterMethod::kmeans: return "kmeans";
        case ClusterMethod::spectral: return "spectral";
        case ClusterMethod::ahc: return "ahc";
        case ClusterMethod::louvain: return "louvain";
        case ClusterMethod::leiden: return "leiden";
        case ClusterMethod::umap_leiden: return "umap-leiden";
    }
    throw std::invalid_argument("unknown cluster method enum");
}

GraphSource graph_source_from_string(const std::string& name) {
    if (name == "recomputed") return GraphSource::recomputed;
    if (name == "umap-fuzzy") return GraphSource::umap_fuzzy;
    throw std::invalid_argument("unknown graph source: " + name);
}

std::string to_string(GraphSource source) {
    return source == GraphSource::recomputed ? "recomputed" : "umap-fuzzy";
}

void PipelineConfig::validate() const {
    if (k < 0) throw std::invalid_argument("pipeline: k must be >= 0 (0 = automatic)");
    if (graph_neighbors < 1) throw std::invalid_argument("pipeline: graph_neighbors must be >= 1");
    if (eigengap_k_max < 2) throw std::invalid_argument("pipeline: eigengap_k_max must be >= 2");
    if (!(resolution > 0.0)) throw std::invalid_argument("pipeline: resolution must be > 0");
    if (randomness < 0.0) throw std::invalid_argument("pipeline: randomness must be >= 0");
    if (is_community(method) && k > 0)
        throw std::invalid_argument("pipeline: community methods discover the cluster count; k must be 0");
    if (graph_source == GraphSource::umap_fuzzy && !reduce && method != ClusterMethod::umap_leiden)
        throw std::invalid_argument("pipeline: graph source umap-fuzzy requires the umap stage");
}

void apply_stage_list(const std::vector<std::string>& stages, PipelineConfig* config) {
    static const std::vector<std::string> order = {"wta-pool", "umap", "cluster"};
    config->pool_frames = false;
    config->reduce = false;
    bool has_cluster = false;
    int last_rank = -1;
    for (const auto& stage : stages) {
        const auto it = std::find(order.begin(), order.end(), stage);
        if (it == order.end()) throw std::invalid_argument("unknown pipeline stage: " + stage);
        const int rank = static_cast<int>(it - order.begin());
        if (rank == last_rank) throw std::invalid_argument("duplicate pipeline stage: " + stage);
        if (rank < last_rank)
            throw std::invalid_argument("pipeline stages must follow wta-pool, umap, cluster order");
        last_rank = rank;
        if (stage == "wta-pool") config->pool_frames = true;
        if (stage == "umap") config->reduce = true;
        has_cluster = has_cluster || stage == "cluster";
    }
    if (!has_cluster) throw std::invalid_argument("pipeline stages must include cluster");
}

std::vector<std::string> stage_list(const PipelineConfig& config) {
    std::vector<std::string> stages;
    if (config.pool_frames) stages.emplace_back("wta-pool");
    if (config.reduce || config.method == ClusterMethod::umap_leiden) stages.emplace_back("umap");
    stages.emplace_back("cluster");
    return stages;
}

PipelineResult run_pipeline(const EmbeddingSet& input, const PipelineConfig& config) {
    config.validate();
    if (input.num_rows() == 0) throw std::invalid_argument("pipeline: empty input");

    PipelineResult result;

    EmbeddingSet segments;
    if (config.pool_frames) {
        double mean_fraction = 0.0;
        segments = pool_frame_groups(input, config.seed.derive(1), &mean_fraction);
        result.mean_dominant_fraction = mean_fraction;
        result.pooled = true;
    } else {
        segments = input;
    }
    const int n = static_cast<int>(segments.num_rows());

    if (n == 1) {  // nothing to cluster, whatever the method
        result.partition.assignment = {0};
        result.partition.num_communities = 1;
        result.k = 1;
        result.segments = std::move(segments);
        return result;
    }

    const bool reduce = config.reduce || config.method == ClusterMethod::umap_leiden;
    const ClusterMethod method =
        config.method == ClusterMethod::umap_leiden ? ClusterMethod::leiden : config.method;

    UmapParams umap_params = config.umap;
    umap_params.n_neighbors = std::min(umap_params.n_neighbors, n - 1);
    umap_params.seed = config.seed.derive(2);

    EmbeddingSet current = segments;
    if (reduce) {
        const UmapResult reduced = umap_embed(segments, umap_params);
        current.vectors = reduced.embedding;
        result.reduced_vectors = reduced.embedding;
        result.reduced = true;
    }

    const RngSeed cluster_seed = config.seed.derive(3);
    const int k_max = std::min(config.eigengap_k_max, n);
    switch (method) {
        case ClusterMethod::kmeans: {
            KMeansParams params;
            params.k = config.k > 0 ? config.k : estimate_k_eigengap(current, k_max).k;
            params.seed = cluster_seed;
            result.partition = kmeans(current.vectors, params).partition;
            break;
        }
        case ClusterMethod::spectral: {
            result.partition = spectral_cluster(current, config.k, cluster_seed, k_max);
            break;
        }
        case ClusterMethod::ahc: {
            AhcParams params;
            params.stop_threshold = config.ahc_stop_threshold;
            params.target_k = config.k;
            result.partition = ahc_cluster(current.vectors, params);
            break;
        }
        case ClusterMethod::louvain:
        case ClusterMethod::leiden: {
            SparseGraph graph;
            if (config.graph_source == GraphSource::umap_fuzzy) {
                const KnnTable knn = exact_knn(segments, umap_params.n_neighbors, umap_params.metric);
                graph = fuzzy_neighborhood_graph(knn, calibrate_fuzzy_scales(knn));
            } else {
                graph = knn_similarity_graph(current, std::min(config.graph_neighbors, n - 1),
                                             SimilarityMetric::cosine);
            }
            LeidenParams params;
            params.resolution = config.resolution;
            params.randomness = config.randomness;
            params.seed = cluster_seed;
            result.partition =
                method == ClusterMethod::leiden ? leiden(graph, params) : louvain(graph, params);
            result.graph_modularity = result.partition.quality;
            break;
        }
        case ClusterMethod::umap_leiden:
            throw std::logic_error("umap_leiden should have been rewritten to leiden");
    }

    result.k = result.partition.num_communities;
    result.segments = std::move(segments);
    return result;
}

}  // namespace commdiar
