#pragma once

#include <optional>
#include <string>
#include <vector>

#include "commdiar/baselines.hpp"
#include "commdiar/types.hpp"
#include "commdiar/umap.hpp"

namespace commdiar {

/// Clustering back-ends the pipeline can dispatch to. umap_leiden is the
/// bundled shorthand: reduce with UMAP, then run Leiden on a kNN graph of the
/// reduced points.
enum class ClusterMethod { kmeans, spectral, ahc, louvain, leiden, umap_leiden };

ClusterMethod cluster_method_from_string(const std::string& name);
std::string to_string(ClusterMethod method);

/// Which graph the community methods cluster after a UMAP stage: a fresh
/// cosine kNN graph built on the reduced points (default), or the fuzzy
/// neighborhood graph UMAP itself optimized.
enum class GraphSource { recomputed, umap_fuzzy };

GraphSource graph_source_from_string(const std::string& name);
std::string to_string(GraphSource source);

/// Staged segment-clustering pipeline. Stages run in a fixed order:
/// winner-take-all frame pooling (optional), UMAP reduction (optional),
/// then clustering (mandatory).
struct PipelineConfig {
    bool pool_frames = false;  // input rows are frames named <segment>_f<index>
    bool reduce = false;       // UMAP before clustering
    ClusterMethod method = ClusterMethod::umap_leiden;

    int k = 0;  // fixed cluster count; 0 = automatic (eigengap or community count)
    UmapParams umap;
    int graph_neighbors = 15;  // kNN degree for the community graph
    // Well below the classic 1.0 on purpose: the default path clusters the
    // kNN graph of the reduced space, where cross-cluster edges all but vanish
    // and gamma = 1 shreds 20-200 point speaker clusters into modularity-scale
    // fragments. 0.05 recovers exact counts across 1-10 speakers there. On
    // raw-embedding graphs (cluster stage without reduction) cross-speaker
    // cosine edges stay positive, so such runs usually want gamma back near 1.
    double resolution = 0.05;
    double randomness = 0.01;
    GraphSource graph_source = GraphSource::recomputed;
    double ahc_stop_threshold = 0.35;
    int eigengap_k_max = 15;
    RngSeed seed{};

    void validate() const;
};

/// Parse a comma-free stage list ("wta-pool", "umap", "cluster") onto a config.
/// Stages must appear in pipeline order, each at most once; "cluster" is
/// mandatory. Throws std::invalid_argument otherwise.
void apply_stage_list(const std::vector<std::string>& stages, PipelineConfig* config);
std::vector<std::string> stage_list(const PipelineConfig& config);

struct PipelineResult {
    Partition partition;    // one cluster id per segment
    EmbeddingSet segments;  // post-pooling segments (pooled vectors, pre-reduction)
    int k = 0;              // clusters found
    std::optional<double> graph_modularity;  // community methods only
    std::optional<double> mean_dominant_fraction;  // pooling diagnostic
    bool pooled = false;
    bool reduced = false;
    MatrixXfR reduced_vectors;  // N x target_dim when reduced, else empty
};

/// Run the configured stages over `input`. Without pooling, input rows are
/// segments; with pooling, rows are frames grouped by the id prefix before the
/// final "_f". Throws std::invalid_argument on malformed input or config.
PipelineResult run_pipeline(const EmbeddingSet& input, const PipelineConfig& config);

}  // namespace commdiar
