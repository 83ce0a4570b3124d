#pragma once

#include <optional>
#include <string>
#include <vector>

#include "commdiar/pipeline.hpp"
#include "commdiar/types.hpp"

namespace commdiar {

/// Shared configuration for the two benchmark studies: cluster-count accuracy
/// across methods and speaker counts, and a single-machine runtime comparison
/// on one large similarity graph.
struct BenchConfig {
    std::vector<ClusterMethod> methods = {ClusterMethod::kmeans,  ClusterMethod::spectral,
                                          ClusterMethod::ahc,     ClusterMethod::louvain,
                                          ClusterMethod::leiden,  ClusterMethod::umap_leiden};
    std::vector<int> speaker_counts = {1, 2, 4, 6, 8, 10};
    int trials_per_count = 100;
    int segments_per_speaker = 20;
    int embedding_dim = 256;
    std::optional<double> within_spread;  // nullopt = simulator default

    int graph_points = 20000;  // runtime study size; >= 1000
    int runtime_speakers = 10;
    int runtime_reps = 3;
    double timeout_seconds = 3600.0;

    int threads = 1;           // worker pool size for the cluster study
    PipelineConfig pipeline;   // per-method knobs; method/k/stages set per cell
    RngSeed seed;

    void validate() const;
};

/// One (method, speaker count) cell. count_accuracy counts a failed trial as
/// a wrong answer; mean_f_score and mean_k average over completed trials.
struct ClusterStudyCell {
    ClusterMethod method{};
    int num_speakers = 0;
    int trials = 0;
    int failures = 0;
    double count_accuracy = 0.0;
    double mean_f_score = 0.0;
    double mean_k = 0.0;
};

struct ClusterStudyResult {
    std::vector<ClusterMethod> methods;
    std::vector<int> speaker_counts;
    int trials_per_count = 0;
    int segments_per_speaker = 0;
    std::uint64_t seed = 0;
    double total_seconds = 0.0;
    std::vector<ClusterStudyCell> cells;  // method-major over speaker counts

    const ClusterStudyCell& cell(ClusterMethod method, int num_speakers) const;
};

/// Every method sees the same simulated trials; per-trial seeds are derived
/// from the trial counter, so results do not depend on thread scheduling.
ClusterStudyResult run_cluster_study(const BenchConfig& config);

std::string to_json(const ClusterStudyResult& result);
std::string to_text_table(const ClusterStudyResult& result);

struct RuntimeRow {
    ClusterMethod method{};
    std::string status;        // "ok", "timeout", or "skipped: <reason>"
    std::string note;          // what the measured span covers, caveats
    std::vector<double> run_seconds;  // completed repetitions
    double median_seconds = 0.0;
    int k = 0;                 // clusters found (identical across reps)
};

struct RuntimeStudyResult {
    int points = 0;            // actual rows benchmarked
    int speakers = 0;
    std::uint64_t seed = 0;
    double graph_build_seconds = 0.0;  // shared kNN graph; excluded from rows
    std::size_t graph_edges = 0;
    std::vector<RuntimeRow> rows;

    const RuntimeRow& row(ClusterMethod method) const;
};

/// Time the clustering stage of each requested method on one simulated
/// embedding set. The shared kNN similarity graph is built once and its cost
/// reported separately; community methods are timed on the prebuilt graph.
/// Methods whose cost is quadratic in N are skipped above a size guard.
RuntimeStudyResult run_runtime_study(const BenchConfig& config);

std::string to_json(const RuntimeStudyResult& result);
std::string to_text_table(const RuntimeStudyResult& result);

}  // namespace commdiar
