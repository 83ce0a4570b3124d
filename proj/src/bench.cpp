#include "commdiar/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <thread>
#include <utility>

#include "commdiar/community.hpp"
#include "commdiar/eval.hpp"
#include "commdiar/graph.hpp"
#include "commdiar/simdata.hpp"
#include <json.hpp>

namespace commdiar {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

struct TrialOutcome {
    bool completed = false;
    bool count_hit = false;
    double f_score = 0.0;
    int k = 0;
};

// N of the quadratic-cost methods above which the runtime study skips them
// rather than burn the budget (dense similarity matrix / dense eigensolve).
constexpr int kAhcMaxPoints = 8000;
constexpr int kSpectralMaxPoints = 4000;

}  // namespace

void BenchConfig::validate() const {
    if (methods.empty()) throw std::invalid_argument("bench: no methods requested");
    std::set<ClusterMethod> seen;
    for (const auto m : methods)
        if (!seen.insert(m).second)
            throw std::invalid_argument("bench: duplicate method " + to_string(m));
    if (speaker_counts.empty()) throw std::invalid_argument("bench: no speaker counts");
    for (const int c : speaker_counts)
        if (c < 1) throw std::invalid_argument("bench: speaker counts must be >= 1");
    if (trials_per_count < 1) throw std::invalid_argument("bench: trials_per_count must be >= 1");
    if (segments_per_speaker < 1)
        throw std::invalid_argument("bench: segments_per_speaker must be >= 1");
    if (embedding_dim < 2) throw std::invalid_argument("bench: embedding_dim must be >= 2");
    if (within_spread && *within_spread < 0.0)
        throw std::invalid_argument("bench: within_spread must be >= 0");
    if (graph_points < 1000)
        throw std::invalid_argument("bench: the runtime study needs at least 1000 points");
    if (runtime_speakers < 1) throw std::invalid_argument("bench: runtime_speakers must be >= 1");
    if (runtime_reps < 1) throw std::invalid_argument("bench: runtime_reps must be >= 1");
    if (!(timeout_seconds > 0.0)) throw std::invalid_argument("bench: timeout must be positive");
    if (threads < 1) throw std::invalid_argument("bench: threads must be >= 1");
}

const ClusterStudyCell& ClusterStudyResult::cell(ClusterMethod method, int num_speakers) const {
    for (const auto& c : cells)
        if (c.method == method && c.num_speakers == num_speakers) return c;
    throw std::out_of_range("no study cell for " + to_string(method) + " at " +
                            std::to_string(num_speakers) + " speakers");
}

ClusterStudyResult run_cluster_study(const BenchConfig& config) {
    config.validate();
    const auto start = Clock::now();

    const int num_counts = static_cast<int>(config.speaker_counts.size());
    const int num_methods = static_cast<int>(config.methods.size());
    const int tasks = num_counts * config.trials_per_count;

    std::vector<std::vector<TrialOutcome>> outcomes(
        static_cast<std::size_t>(tasks),
        std::vector<TrialOutcome>(static_cast<std::size_t>(num_methods)));

    auto run_task = [&](int task) {
        const int ci = task / config.trials_per_count;
        const int count = config.speaker_counts[static_cast<std::size_t>(ci)];
        // Counter-derived seed: independent of worker scheduling.
        const RngSeed trial_seed = config.seed.derive(0xC1000000u + static_cast<std::uint64_t>(task));
        ClusterTrial trial;
        bool trial_ok = true;
        try {
            trial = sample_cluster_trial(count, config.segments_per_speaker, trial_seed,
                                         config.embedding_dim, config.within_spread);
        } catch (const std::exception&) {
            trial_ok = false;  // every method records a failure for this trial
        }
        for (int mi = 0; mi < num_methods; ++mi) {
            auto& slot = outcomes[static_cast<std::size_t>(task)][static_cast<std::size_t>(mi)];
            if (!trial_ok) continue;
            PipelineConfig pipeline = config.pipeline;
            pipeline.method = config.methods[static_cast<std::size_t>(mi)];
            pipeline.k = 0;
            pipeline.pool_frames = false;
            pipeline.reduce = false;
            pipeline.seed = trial_seed.derive(0xB0u + static_cast<std::uint64_t>(mi));
            try {
                const PipelineResult run = run_pipeline(trial.embeddings, pipeline);
                slot.completed = true;
                slot.k = run.k;
                slot.count_hit = run.k == count;
                slot.f_score = pairwise_f_score(run.partition, trial.labels).f;
            } catch (const std::exception&) {
                // recorded as a failure; the study continues
            }
        }
    };

    if (config.threads <= 1) {
        for (int task = 0; task < tasks; ++task) run_task(task);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> workers;
        const int pool = std::min(config.threads, tasks);
        workers.reserve(static_cast<std::size_t>(pool));
        for (int w = 0; w < pool; ++w) {
            workers.emplace_back([&] {
                for (int task = next.fetch_add(1); task < tasks; task = next.fetch_add(1))
                    run_task(task);
            });
        }
        for (auto& worker : workers) worker.join();
    }

    ClusterStudyResult result;
    result.methods = config.methods;
    result.speaker_counts = config.speaker_counts;
    result.trials_per_count = config.trials_per_count;
    result.segments_per_speaker = config.segments_per_speaker;
    result.seed = config.seed.seed;
    for (int mi = 0; mi < num_methods; ++mi) {
        for (int ci = 0; ci < num_counts; ++ci) {
            ClusterStudyCell cell;
            cell.method = config.methods[static_cast<std::size_t>(mi)];
            cell.num_speakers = config.speaker_counts[static_cast<std::size_t>(ci)];
            cell.trials = config.trials_per_count;
            int hits = 0, completed = 0;
            double f_sum = 0.0, k_sum = 0.0;
            for (int t = 0; t < config.trials_per_count; ++t) {
                const auto& slot = outcomes[static_cast<std::size_t>(ci * config.trials_per_count + t)]
                                           [static_cast<std::size_t>(mi)];
                if (!slot.completed) continue;
                ++completed;
                hits += slot.count_hit ? 1 : 0;
                f_sum += slot.f_score;
                k_sum += slot.k;
            }
            cell.failures = config.trials_per_count - completed;
            cell.count_accuracy = static_cast<double>(hits) / config.trials_per_count;
            cell.mean_f_score = completed > 0 ? f_sum / completed : 0.0;
            cell.mean_k = completed > 0 ? k_sum / completed : 0.0;
            result.cells.push_back(cell);
        }
    }
    result.total_seconds = seconds_since(start);
    return result;
}

std::string to_json(const ClusterStudyResult& result) {
    nlohmann::json j;
    for (const auto m : result.methods) j["methods"].push_back(to_string(m));
    j["speaker_counts"] = result.speaker_counts;
    j["trials_per_count"] = result.trials_per_count;
    j["segments_per_speaker"] = result.segments_per_speaker;
    j["seed"] = result.seed;
    j["total_seconds"] = result.total_seconds;
    j["cells"] = nlohmann::json::array();
    for (const auto& cell : result.cells) {
        j["cells"].push_back({{"method", to_string(cell.method)},
                              {"num_speakers", cell.num_speakers},
                              {"trials", cell.trials},
                              {"failures", cell.failures},
                              {"count_accuracy", cell.count_accuracy},
                              {"mean_f_score", cell.mean_f_score},
                              {"mean_k", cell.mean_k}});
    }
    return j.dump(2) + "\n";
}

namespace {

std::string study_matrix(const ClusterStudyResult& result, const char* title,
                         double ClusterStudyCell::*field) {
    std::string out;
    char buf[64];
    out += title;
    out += "\n";
    std::snprintf(buf, sizeof(buf), "%-12s", "method");
    out += buf;
    for (const int c : result.speaker_counts) {
        std::snprintf(buf, sizeof(buf), "%7d", c);
        out += buf;
    }
    out += "\n";
    for (const auto method : result.methods) {
        std::snprintf(buf, sizeof(buf), "%-12s", to_string(method).c_str());
        out += buf;
        for (const int c : result.speaker_counts) {
            std::snprintf(buf, sizeof(buf), "%7.2f", result.cell(method, c).*field);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

}  // namespace

std::string to_text_table(const ClusterStudyResult& result) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "cluster study: %d trials/count, %d segments/speaker, seed %llu (%.1f s)\n",
                  result.trials_per_count, result.segments_per_speaker,
                  static_cast<unsigned long long>(result.seed), result.total_seconds);
    std::string out = buf;
    out += study_matrix(result, "\ncount accuracy", &ClusterStudyCell::count_accuracy);
    out += study_matrix(result, "\nmean pairwise F", &ClusterStudyCell::mean_f_score);
    bool any_failures = false;
    for (const auto& cell : result.cells) any_failures = any_failures || cell.failures > 0;
    if (any_failures) {
        out += "\nfailed trials:\n";
        for (const auto& cell : result.cells) {
            if (cell.failures == 0) continue;
            std::snprintf(buf, sizeof(buf), "  %s @ %d speakers: %d of %d\n",
                          to_string(cell.method).c_str(), cell.num_speakers, cell.failures,
                          cell.trials);
            out += buf;
        }
    }
    return out;
}

const RuntimeRow& RuntimeStudyResult::row(ClusterMethod method) const {
    for (const auto& r : rows)
        if (r.method == method) return r;
    throw std::out_of_range("no runtime row for " + to_string(method));
}

RuntimeStudyResult run_runtime_study(const BenchConfig& config) {
    config.validate();

    const int per_speaker =
        (config.graph_points + config.runtime_speakers - 1) / config.runtime_speakers;
    const ClusterTrial trial =
        sample_cluster_trial(config.runtime_speakers, per_speaker, config.seed.derive(0xD0u),
                             config.embedding_dim, config.within_spread);
    const int points = static_cast<int>(trial.embeddings.num_rows());

    RuntimeStudyResult result;
    result.points = points;
    result.speakers = config.runtime_speakers;
    result.seed = config.seed.seed;

    // One shared similarity graph for the community methods; its cost is
    // reported here, not inside the per-method timings.
    const auto graph_start = Clock::now();
    const SparseGraph graph =
        knn_similarity_graph(trial.embeddings, std::min(config.pipeline.graph_neighbors, points - 1),
                             SimilarityMetric::cosine);
    result.graph_build_seconds = seconds_since(graph_start);
    result.graph_edges = graph.num_edges();

    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
        const ClusterMethod method = config.methods[mi];
        RuntimeRow row;
        row.method = method;

        if (method == ClusterMethod::ahc && points > kAhcMaxPoints) {
            row.status = "skipped: quadratic similarity matrix at this size";
            result.rows.push_back(std::move(row));
            continue;
        }
        if (method == ClusterMethod::spectral && points > kSpectralMaxPoints) {
            row.status = "skipped: dense eigensolve at this size";
            result.rows.push_back(std::move(row));
            continue;
        }

        const RngSeed method_seed = config.seed.derive(0xE0u + static_cast<std::uint64_t>(mi));
        switch (method) {
            case ClusterMethod::louvain:
            case ClusterMethod::leiden:
                row.note = "prebuilt graph excluded";
                break;
            case ClusterMethod::umap_leiden:
                row.note = "includes reduction and its own graph";
                break;
            case ClusterMethod::kmeans:
                row.note = "k fixed to the generating speaker count";
                break;
            default:
                break;
        }

        const auto method_start = Clock::now();
        row.status = "ok";
        for (int rep = 0; rep < config.runtime_reps; ++rep) {
            Partition partition;
            const auto rep_start = Clock::now();
            try {
                switch (method) {
                    case ClusterMethod::louvain:
                    case ClusterMethod::leiden: {
                        LeidenParams params;
                        params.resolution = config.pipeline.resolution;
                        params.randomness = config.pipeline.randomness;
                        params.seed = method_seed;
                        partition = method == ClusterMethod::leiden ? leiden(graph, params)
                                                                    : louvain(graph, params);
                        break;
                    }
                    case ClusterMethod::kmeans: {
                        KMeansParams params;
                        params.k = config.runtime_speakers;
                        params.seed = method_seed;
                        partition = kmeans(trial.embeddings.vectors, params).partition;
                        break;
                    }
                    default: {  // spectral, ahc, umap-leiden go through the pipeline
                        PipelineConfig pipeline = config.pipeline;
                        pipeline.method = method;
                        pipeline.k = 0;
                        pipeline.pool_frames = false;
                        pipeline.reduce = false;
                        pipeline.seed = method_seed;
                        partition = run_pipeline(trial.embeddings, pipeline).partition;
                        break;
                    }
                }
            } catch (const std::exception& e) {
                row.status = std::string("failed: ") + e.what();
                break;
            }
            row.run_seconds.push_back(seconds_since(rep_start));
            row.k = partition.num_communities;  // same seed every rep: identical output
            if (seconds_since(method_start) > config.timeout_seconds) {
                if (rep + 1 < config.runtime_reps) row.status = "timeout";
                break;
            }
        }
        row.median_seconds = median(row.run_seconds);
        result.rows.push_back(std::move(row));
    }
    return result;
}

std::string to_json(const RuntimeStudyResult& result) {
    nlohmann::json j;
    j["points"] = result.points;
    j["speakers"] = result.speakers;
    j["seed"] = result.seed;
    j["graph_build_seconds"] = result.graph_build_seconds;
    j["graph_edges"] = result.graph_edges;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : result.rows) {
        j["rows"].push_back({{"method", to_string(row.method)},
                             {"status", row.status},
                             {"note", row.note},
                             {"run_seconds", row.run_seconds},
                             {"median_seconds", row.median_seconds},
                             {"k", row.k}});
    }
    return j.dump(2) + "\n";
}

std::string to_text_table(const RuntimeStudyResult& result) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "runtime study: %d points, %d speakers, seed %llu\n",
                  result.points, result.speakers, static_cast<unsigned long long>(result.seed));
    std::string out = buf;
    std::snprintf(buf, sizeof(buf), "shared kNN graph: %.2f s, %zu edges\n\n",
                  result.graph_build_seconds, result.graph_edges);
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-12s %-10s %10s %4s  %s\n", "method", "status", "median s",
                  "k", "runs");
    out += buf;
    for (const auto& row : result.rows) {
        std::string runs = "[";
        for (std::size_t i = 0; i < row.run_seconds.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s%.3f", i ? ", " : "", row.run_seconds[i]);
            runs += buf;
        }
        runs += "]";
        const bool ok = row.status == "ok" || row.status == "timeout";
        std::snprintf(buf, sizeof(buf), "%-12s %-10s %10.3f %4d  %s%s%s\n",
                      to_string(row.method).c_str(), ok ? row.status.c_str() : "-",
                      row.median_seconds, row.k, runs.c_str(), row.note.empty() ? "" : "  # ",
                      row.note.c_str());
        out += buf;
        if (!ok) {
            std::snprintf(buf, sizeof(buf), "  %s\n", row.status.c_str());
            out += buf;
        }
    }
    return out;
}

}  // namespace commdiar
