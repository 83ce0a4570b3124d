// Command-line front end: simulate meetings, reduce embeddings, cluster them,
// run the full diarization pipeline, score hypotheses, and run the benchmark
// studies. Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "commdiar/bench.hpp"
#include "commdiar/community.hpp"
#include "commdiar/eval.hpp"
#include "commdiar/io.hpp"
#include "commdiar/pipeline.hpp"
#include "commdiar/simdata.hpp"
#include "commdiar/types.hpp"
#include "commdiar/umap.hpp"

namespace {

using namespace commdiar;
using nlohmann::json;

// Thrown for problems the user can fix on the command line; mapped to exit 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::uint64_t seed = 0;
    std::string config_path;

    // simulate
    int speakers = 4;
    double duration = 1800.0;
    double overlap = 0.10;
    double segment_seconds = 4.0;
    int frames_per_segment = 0;
    int dim = 256;
    double min_separation = 0.5;
    double shared_bias = 0.42;
    std::optional<double> within_spread;
    std::string out_prefix;

    // shared pipeline / umap knobs
    PipelineConfig pipeline;
    std::string method = "umap-leiden";
    std::string k_text = "auto";
    std::string graph_source = "recomputed";
    std::string stages_text = "cluster";

    // file arguments
    std::string input;
    std::string output;
    std::string script_path;
    std::string labels_path;
    std::string rttm_path;
    std::string report_path;
    std::string ref_path;
    std::string hyp_path;

    // bench
    BenchConfig bench;
    std::string study_methods = "kmeans,spectral,ahc,louvain,leiden,umap-leiden";
    std::string runtime_methods = "louvain,leiden";
    std::string counts_text = "1,2,4,6,8,10";
    std::string bench_out;
};

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, sep)) parts.push_back(part);
    return parts;
}

int parse_k(const std::string& text) {
    if (text == "auto") return 0;
    try {
        std::size_t used = 0;
        const int k = std::stoi(text, &used);
        if (used != text.size() || k < 1) throw std::invalid_argument(text);
        return k;
    } catch (const std::exception&) {
        throw UsageError("--k must be a positive integer or 'auto', got '" + text + "'");
    }
}

std::vector<int> parse_counts(const std::string& text) {
    std::vector<int> counts;
    for (const auto& part : split(text, ',')) {
        try {
            std::size_t used = 0;
            counts.push_back(std::stoi(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw UsageError("bad speaker count '" + part + "' in --counts");
        }
    }
    return counts;
}

std::vector<ClusterMethod> parse_methods(const std::string& text) {
    std::vector<ClusterMethod> methods;
    for (const auto& part : split(text, ',')) {
        try {
            methods.push_back(cluster_method_from_string(part));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    return methods;
}

// The full set of defaults the config file can override, seed included.
json default_config_json(const Options& opt) {
    json j;
    j["seed"] = opt.seed;
    j["simulator"] = {{"speakers", opt.speakers},
                      {"duration_seconds", opt.duration},
                      {"overlap_ratio", opt.overlap},
                      {"segment_seconds", opt.segment_seconds},
                      {"frames_per_segment", opt.frames_per_segment},
                      {"dim", opt.dim},
                      {"min_separation", opt.min_separation},
                      {"shared_bias", opt.shared_bias},
                      {"within_spread", opt.within_spread ? json(*opt.within_spread) : json()}};
    const UmapParams& u = opt.pipeline.umap;
    j["umap"] = {{"target_dim", u.target_dim},
                 {"n_neighbors", u.n_neighbors},
                 {"min_dist", u.min_dist},
                 {"n_epochs", u.n_epochs},
                 {"learning_rate", u.learning_rate},
                 {"negative_sample_rate", u.negative_sample_rate},
                 {"repulsion_eps", u.repulsion_eps},
                 {"spectral_init_max_nodes", u.spectral_init_max_nodes}};
    j["pipeline"] = {{"stages", opt.stages_text},
                     {"method", opt.method},
                     {"k", opt.k_text},
                     {"graph_neighbors", opt.pipeline.graph_neighbors},
                     {"graph_source", opt.graph_source},
                     {"resolution", opt.pipeline.resolution},
                     {"randomness", opt.pipeline.randomness},
                     {"ahc_stop_threshold", opt.pipeline.ahc_stop_threshold},
                     {"eigengap_k_max", opt.pipeline.eigengap_k_max}};
    j["bench"] = {{"methods", opt.study_methods},
                  {"runtime_methods", opt.runtime_methods},
                  {"speaker_counts", opt.counts_text},
                  {"trials_per_count", opt.bench.trials_per_count},
                  {"segments_per_speaker", opt.bench.segments_per_speaker},
                  {"embedding_dim", opt.bench.embedding_dim},
                  {"graph_points", opt.bench.graph_points},
                  {"runtime_speakers", opt.bench.runtime_speakers},
                  {"runtime_reps", opt.bench.runtime_reps},
                  {"timeout_seconds", opt.bench.timeout_seconds},
                  {"threads", opt.bench.threads}};
    return j;
}

template <typename T>
void maybe_set(const json& section, const char* key, T* field) {
    if (section.contains(key) && !section.at(key).is_null()) *field = section.at(key).get<T>();
}

void apply_config_file(const std::string& path, Options* opt) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw UsageError("config file " + path + ": " + e.what());
    }
    const json reference = default_config_json(*opt);
    for (const auto& [key, value] : j.items()) {
        if (!reference.contains(key))
            std::cerr << "warning: unknown config section '" << key << "' ignored\n";
        else if (value.is_object())
            for (const auto& [inner, unused] : value.items())
                if (!reference.at(key).contains(inner))
                    std::cerr << "warning: unknown config key '" << key << "." << inner
                              << "' ignored\n";
    }

    maybe_set(j, "seed", &opt->seed);
    if (j.contains("simulator")) {
        const json& s = j["simulator"];
        maybe_set(s, "speakers", &opt->speakers);
        maybe_set(s, "duration_seconds", &opt->duration);
        maybe_set(s, "overlap_ratio", &opt->overlap);
        maybe_set(s, "segment_seconds", &opt->segment_seconds);
        maybe_set(s, "frames_per_segment", &opt->frames_per_segment);
        maybe_set(s, "dim", &opt->dim);
        maybe_set(s, "min_separation", &opt->min_separation);
        maybe_set(s, "shared_bias", &opt->shared_bias);
        if (s.contains("within_spread") && !s.at("within_spread").is_null())
            opt->within_spread = s.at("within_spread").get<double>();
    }
    if (j.contains("umap")) {
        const json& u = j["umap"];
        maybe_set(u, "target_dim", &opt->pipeline.umap.target_dim);
        maybe_set(u, "n_neighbors", &opt->pipeline.umap.n_neighbors);
        maybe_set(u, "min_dist", &opt->pipeline.umap.min_dist);
        maybe_set(u, "n_epochs", &opt->pipeline.umap.n_epochs);
        maybe_set(u, "learning_rate", &opt->pipeline.umap.learning_rate);
        maybe_set(u, "negative_sample_rate", &opt->pipeline.umap.negative_sample_rate);
        maybe_set(u, "repulsion_eps", &opt->pipeline.umap.repulsion_eps);
        maybe_set(u, "spectral_init_max_nodes", &opt->pipeline.umap.spectral_init_max_nodes);
    }
    if (j.contains("pipeline")) {
        const json& p = j["pipeline"];
        maybe_set(p, "stages", &opt->stages_text);
        maybe_set(p, "method", &opt->method);
        maybe_set(p, "k", &opt->k_text);
        maybe_set(p, "graph_neighbors", &opt->pipeline.graph_neighbors);
        maybe_set(p, "graph_source", &opt->graph_source);
        maybe_set(p, "resolution", &opt->pipeline.resolution);
        maybe_set(p, "randomness", &opt->pipeline.randomness);
        maybe_set(p, "ahc_stop_threshold", &opt->pipeline.ahc_stop_threshold);
        maybe_set(p, "eigengap_k_max", &opt->pipeline.eigengap_k_max);
    }
    if (j.contains("bench")) {
        const json& b = j["bench"];
        maybe_set(b, "methods", &opt->study_methods);
        maybe_set(b, "runtime_methods", &opt->runtime_methods);
        maybe_set(b, "speaker_counts", &opt->counts_text);
        maybe_set(b, "trials_per_count", &opt->bench.trials_per_count);
        maybe_set(b, "segments_per_speaker", &opt->bench.segments_per_speaker);
        maybe_set(b, "embedding_dim", &opt->bench.embedding_dim);
        maybe_set(b, "graph_points", &opt->bench.graph_points);
        maybe_set(b, "runtime_speakers", &opt->bench.runtime_speakers);
        maybe_set(b, "runtime_reps", &opt->bench.runtime_reps);
        maybe_set(b, "timeout_seconds", &opt->bench.timeout_seconds);
        maybe_set(b, "threads", &opt->bench.threads);
    }
}

// Build the pipeline config a subcommand will run, translating the string
// options; bad combinations surface as usage errors.
PipelineConfig build_pipeline(const Options& opt, bool allow_stages) {
    PipelineConfig config = opt.pipeline;
    try {
        config.method = cluster_method_from_string(opt.method);
        config.graph_source = graph_source_from_string(opt.graph_source);
        if (allow_stages) apply_stage_list(split(opt.stages_text, ','), &config);
        config.k = parse_k(opt.k_text);
        config.seed = RngSeed{opt.seed};
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return config;
}

// Segment times for a script tiled at a fixed segment length; used when the
// embedding file format carries no times of its own.
void attach_script_times(EmbeddingSet* segments, const MeetingScript& script,
                         double segment_seconds) {
    if (segments->times) return;
    const int n = static_cast<int>(segments->num_rows());
    const int expected = static_cast<int>(
        std::ceil(script.total_duration_seconds / segment_seconds - 1e-9));
    if (n != expected)
        throw std::runtime_error("script tiling gives " + std::to_string(expected) +
                                 " segments but the input has " + std::to_string(n));
    std::vector<SegmentTime> times;
    times.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double onset = i * segment_seconds;
        times.push_back({onset, std::min(segment_seconds, script.total_duration_seconds - onset)});
    }
    segments->times = std::move(times);
}

// Rewrite block-ordered frame rows (raw-f32 input) to the <segment>_f<index>
// naming that the pooling stage groups on.
void regroup_frames(EmbeddingSet* frames, int frames_per_segment) {
    const int n = static_cast<int>(frames->num_rows());
    if (frames_per_segment < 1 || n % frames_per_segment != 0)
        throw UsageError("--frames-per-segment must evenly divide the " + std::to_string(n) +
                         " input rows");
    for (int i = 0; i < n; ++i)
        frames->segment_ids[static_cast<std::size_t>(i)] =
            "seg" + std::to_string(i / frames_per_segment) + "_f" +
            std::to_string(i % frames_per_segment);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

int cmd_simulate(const Options& opt) {
    if (opt.out_prefix.empty()) throw UsageError("simulate needs --out <prefix>");
    MeetingSimConfig config;
    config.num_speakers = opt.speakers;
    config.duration_seconds = opt.duration;
    config.overlap_ratio = opt.overlap;
    config.segment_seconds = opt.segment_seconds;
    config.frames_per_segment = opt.frames_per_segment;
    config.seed = RngSeed{opt.seed};
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    const std::vector<SpeakerModel> speakers =
        sample_speakers(opt.speakers, opt.dim, opt.min_separation, RngSeed{opt.seed}.derive(1),
                        opt.shared_bias, opt.within_spread);
    const MeetingSample sample = simulate_meeting(config, speakers);

    save_embeddings(sample.embeddings, opt.out_prefix + ".embeddings.f32",
                    EmbeddingFormat::raw_f32);
    save_meeting_script(sample.script, opt.out_prefix + ".script.json");
    save_script_rttm(sample.script, opt.out_prefix + ".ref.rttm");
    if (sample.frames)
        save_embeddings(*sample.frames, opt.out_prefix + ".frames.csv", EmbeddingFormat::csv);

    std::cout << "simulate: " << sample.embeddings.num_rows() << " segments, "
              << opt.speakers << " speakers, overlap " << sample.script.overlap_ratio()
              << ", wrote " << opt.out_prefix << ".{embeddings.f32,script.json,ref.rttm"
              << (sample.frames ? ",frames.csv}" : "}") << "\n";
    return 0;
}

int cmd_reduce(const Options& opt) {
    if (opt.input.empty() || opt.output.empty())
        throw UsageError("reduce needs --input and --output");
    const EmbeddingSet input = load_embeddings(opt.input, format_from_path(opt.input));
    UmapParams params = opt.pipeline.umap;
    params.n_neighbors = std::min<int>(params.n_neighbors,
                                       static_cast<int>(input.num_rows()) - 1);
    params.seed = RngSeed{opt.seed}.derive(2);  // same stream the pipeline uses

    const UmapResult result = umap_embed(input, params);
    EmbeddingSet reduced = input;
    reduced.vectors = result.embedding;
    save_embeddings(reduced, opt.output, format_from_path(opt.output));

    std::cout << "reduce: " << input.num_rows() << " points " << input.dim() << "d -> "
              << params.target_dim << "d (" << (result.used_spectral_init ? "spectral" : "random")
              << " init), wrote " << opt.output << "\n";
    return 0;
}

json pipeline_report(const PipelineConfig& config, const PipelineResult& result,
                     const Options& opt) {
    json j;
    j["seed"] = opt.seed;
    j["stages"] = stage_list(config);
    j["method"] = to_string(config.method);
    j["k"] = result.k;
    if (result.graph_modularity) j["modularity"] = *result.graph_modularity;
    j["graph"] = {{"source", to_string(config.graph_source)},
                  {"neighbors", config.graph_neighbors}};
    j["community"] = {{"resolution", config.resolution}, {"randomness", config.randomness}};
    if (result.reduced)
        j["umap"] = {{"target_dim", config.umap.target_dim},
                     {"n_neighbors", config.umap.n_neighbors},
                     {"min_dist", config.umap.min_dist},
                     {"n_epochs", config.umap.n_epochs}};
    if (result.pooled) j["pooling"] = {{"mean_dominant_fraction", *result.mean_dominant_fraction}};
    j["segments"] = static_cast<int>(result.segments.num_rows());
    return j;
}

int cmd_cluster(const Options& opt) {
    if (opt.input.empty()) throw UsageError("cluster needs --input");
    if (opt.labels_path.empty() && opt.rttm_path.empty())
        throw UsageError("cluster needs --labels and/or --rttm to write results to");
    const EmbeddingSet input = load_embeddings(opt.input, format_from_path(opt.input));
    const PipelineConfig config = build_pipeline(opt, /*allow_stages=*/false);

    const PipelineResult result = run_pipeline(input, config);

    if (!opt.labels_path.empty()) {
        json j = pipeline_report(config, result, opt);
        j["input"] = opt.input;
        j["segment_ids"] = result.segments.segment_ids;
        j["assignment"] = result.partition.assignment;
        write_text(opt.labels_path, j.dump(2) + "\n");
    }
    if (!opt.rttm_path.empty()) {
        EmbeddingSet segments = result.segments;
        if (!segments.times) {
            if (opt.script_path.empty())
                throw std::runtime_error(
                    "input carries no segment times; pass --script to derive them");
            attach_script_times(&segments, load_meeting_script(opt.script_path),
                                opt.segment_seconds);
        }
        save_partition_rttm(result.partition, segments, opt.rttm_path);
    }
    std::cout << "cluster: " << to_string(config.method) << " found k=" << result.k;
    if (result.graph_modularity) std::cout << " (modularity " << *result.graph_modularity << ")";
    std::cout << "\n";
    return 0;
}

int cmd_diarize(const Options& opt) {
    if (opt.input.empty()) throw UsageError("diarize needs --input");
    if (opt.rttm_path.empty()) throw UsageError("diarize needs --out <hypothesis rttm>");
    EmbeddingSet input = load_embeddings(opt.input, format_from_path(opt.input));
    PipelineConfig config = build_pipeline(opt, /*allow_stages=*/true);
    if (config.pool_frames && opt.frames_per_segment > 0)
        regroup_frames(&input, opt.frames_per_segment);

    const PipelineResult result = run_pipeline(input, config);

    EmbeddingSet segments = result.segments;
    if (!segments.times) {
        if (opt.script_path.empty())
            throw std::runtime_error("input carries no segment times; pass --script to derive them");
        attach_script_times(&segments, load_meeting_script(opt.script_path), opt.segment_seconds);
    }
    save_partition_rttm(result.partition, segments, opt.rttm_path);

    if (!opt.report_path.empty()) {
        json j = pipeline_report(config, result, opt);
        j["input"] = opt.input;
        j["hypothesis_rttm"] = opt.rttm_path;
        write_text(opt.report_path, j.dump(2) + "\n");
    }
    std::cout << "diarize: k=" << result.k;
    if (result.graph_modularity) std::cout << ", modularity " << *result.graph_modularity;
    std::cout << ", wrote " << opt.rttm_path << "\n";
    return 0;
}

int cmd_eval(const Options& opt) {
    if (opt.ref_path.empty() || opt.hyp_path.empty())
        throw UsageError("eval needs --ref and --hyp");
    const std::vector<LabeledSegment> hypothesis = load_rttm(opt.hyp_path);

    MeetingScript reference;
    if (opt.ref_path.size() > 5 && opt.ref_path.substr(opt.ref_path.size() - 5) == ".json") {
        reference = load_meeting_script(opt.ref_path);
    } else {
        const std::vector<LabeledSegment> segments = load_rttm(opt.ref_path);
        double end = 0.0;
        for (const auto& s : segments) {
            if (std::find(reference.speakers.begin(), reference.speakers.end(), s.speaker) ==
                reference.speakers.end())
                reference.speakers.push_back(s.speaker);
            reference.turns.push_back({s.speaker, s.onset, s.duration});
            end = std::max(end, s.onset + s.duration);
        }
        for (const auto& s : hypothesis) end = std::max(end, s.onset + s.duration);
        reference.total_duration_seconds = end;
    }

    const DerBreakdown breakdown = der(reference, hypothesis);

    EvalReport report;
    report.der = breakdown.der;
    report.miss = breakdown.miss;
    report.false_alarm = breakdown.false_alarm;
    report.confusion = breakdown.confusion;
    report.trials = 1;
    if (!opt.report_path.empty()) write_text(opt.report_path, to_json(report));

    char buf[160];
    std::snprintf(buf, sizeof(buf), "DER %.2f%% (miss %.2f%%, false alarm %.2f%%, confusion %.2f%%)\n",
                  100.0 * breakdown.der, 100.0 * breakdown.miss, 100.0 * breakdown.false_alarm,
                  100.0 * breakdown.confusion);
    std::cout << buf;
    return 0;
}

BenchConfig build_bench(const Options& opt, bool runtime) {
    BenchConfig config = opt.bench;
    config.methods = parse_methods(runtime ? opt.runtime_methods : opt.study_methods);
    config.speaker_counts = parse_counts(opt.counts_text);
    config.within_spread = opt.within_spread;
    config.pipeline = opt.pipeline;
    config.pipeline.graph_source = graph_source_from_string(opt.graph_source);
    config.seed = RngSeed{opt.seed};
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return config;
}

int cmd_bench_cluster(const Options& opt) {
    const ClusterStudyResult result = run_cluster_study(build_bench(opt, false));
    const std::string table = to_text_table(result);
    std::cout << table;
    if (!opt.bench_out.empty()) {
        write_text(opt.bench_out + ".json", to_json(result));
        write_text(opt.bench_out + ".txt", table);
        std::cout << "wrote " << opt.bench_out << ".{json,txt}\n";
    }
    return 0;
}

int cmd_bench_runtime(const Options& opt) {
    const RuntimeStudyResult result = run_runtime_study(build_bench(opt, true));
    const std::string table = to_text_table(result);
    std::cout << table;
    if (!opt.bench_out.empty()) {
        write_text(opt.bench_out + ".json", to_json(result));
        write_text(opt.bench_out + ".txt", table);
        std::cout << "wrote " << opt.bench_out << ".{json,txt}\n";
    }
    return 0;
}

void add_pipeline_flags(CLI::App* cmd, Options& opt, bool with_stages) {
    cmd->add_option("--method", opt.method,
                    "kmeans, spectral, ahc, louvain, leiden, or umap-leiden");
    cmd->add_option("--k", opt.k_text, "cluster count, or 'auto'");
    cmd->add_option("--graph-neighbors", opt.pipeline.graph_neighbors,
                    "kNN degree of the community graph");
    cmd->add_option("--graph-source", opt.graph_source,
                    "community graph after umap: recomputed or umap-fuzzy");
    cmd->add_option("--resolution", opt.pipeline.resolution, "modularity resolution");
    cmd->add_option("--randomness", opt.pipeline.randomness, "refinement temperature");
    cmd->add_option("--ahc-threshold", opt.pipeline.ahc_stop_threshold,
                    "agglomerative merge threshold");
    cmd->add_option("--eigengap-k-max", opt.pipeline.eigengap_k_max,
                    "largest cluster count the eigengap considers");
    if (with_stages)
        cmd->add_option("--stages", opt.stages_text,
                        "comma list from wta-pool, umap, cluster (in that order)");
}

void add_umap_flags(CLI::App* cmd, Options& opt) {
    cmd->add_option("--target-dim", opt.pipeline.umap.target_dim, "reduced dimension");
    cmd->add_option("--n-neighbors", opt.pipeline.umap.n_neighbors, "fuzzy graph degree");
    cmd->add_option("--min-dist", opt.pipeline.umap.min_dist, "output curve min_dist");
    cmd->add_option("--epochs", opt.pipeline.umap.n_epochs, "optimizer epochs");
    cmd->add_option("--learning-rate", opt.pipeline.umap.learning_rate, "initial step size");
}

}  // namespace

int main(int argc, char** argv) {
    Options opt;

    // The config file must be applied before CLI11 sees the defaults, so
    // flags given alongside it still win.
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) opt.config_path = argv[i + 1];
        else if (arg.rfind("--config=", 0) == 0) opt.config_path = arg.substr(9);
    }
    try {
        if (!opt.config_path.empty()) apply_config_file(opt.config_path, &opt);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    CLI::App app{"speaker-segment clustering via graph community detection"};
    app.fallthrough();
    app.add_option("--seed", opt.seed, "base seed for every random stream");
    app.add_option("--config", opt.config_path, "JSON config file (flags override it)")
        ->expected(1);
    bool dump_config = false;
    app.add_flag("--dump-config", dump_config, "print every default as JSON and exit");

    CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic meeting");
    simulate->add_option("--speakers", opt.speakers, "number of speakers (2-10)");
    simulate->add_option("--duration", opt.duration, "meeting length in seconds (>= 1800)");
    simulate->add_option("--overlap", opt.overlap, "target overlap ratio (0.05-0.30)");
    simulate->add_option("--segment-seconds", opt.segment_seconds, "segment tiling length");
    simulate->add_option("--frames-per-segment", opt.frames_per_segment,
                         "also emit this many frames per segment (csv)");
    simulate->add_option("--dim", opt.dim, "embedding dimension");
    simulate->add_option("--min-separation", opt.min_separation,
                         "max allowed centroid cosine between speakers");
    simulate->add_option("--shared-bias", opt.shared_bias, "shared direction strength");
    simulate->add_option("--within-spread", opt.within_spread,
                         "within-speaker spread (default: model choice)");
    simulate->add_option("--out", opt.out_prefix, "output path prefix");

    CLI::App* reduce = app.add_subcommand("reduce", "umap-reduce an embedding file");
    reduce->add_option("--input", opt.input, "embedding file (.csv or raw-f32)");
    reduce->add_option("--output", opt.output, "reduced embedding file");
    add_umap_flags(reduce, opt);

    CLI::App* cluster = app.add_subcommand("cluster", "cluster an embedding file");
    cluster->add_option("--input", opt.input, "embedding file (.csv or raw-f32)");
    cluster->add_option("--labels", opt.labels_path, "write assignment JSON here");
    cluster->add_option("--rttm", opt.rttm_path, "also write a hypothesis RTTM");
    cluster->add_option("--script", opt.script_path, "script JSON for segment times");
    cluster->add_option("--segment-seconds", opt.segment_seconds, "tiling for --script times");
    add_pipeline_flags(cluster, opt, /*with_stages=*/false);
    add_umap_flags(cluster, opt);

    CLI::App* diarize = app.add_subcommand("diarize", "run the staged pipeline to an RTTM");
    diarize->add_option("--input", opt.input, "segment or frame embedding file");
    diarize->add_option("--script", opt.script_path, "script JSON for segment times");
    diarize->add_option("--segment-seconds", opt.segment_seconds, "tiling for --script times");
    diarize->add_option("--frames-per-segment", opt.frames_per_segment,
                        "regroup a raw frame file into blocks of this size");
    diarize->add_option("--out", opt.rttm_path, "hypothesis RTTM path");
    diarize->add_option("--report", opt.report_path, "provenance report JSON");
    add_pipeline_flags(diarize, opt, /*with_stages=*/true);
    add_umap_flags(diarize, opt);

    CLI::App* eval = app.add_subcommand("eval", "score a hypothesis RTTM against a reference");
    eval->add_option("--ref", opt.ref_path, "reference rttm or script json");
    eval->add_option("--hyp", opt.hyp_path, "hypothesis rttm");
    eval->add_option("--report", opt.report_path, "metrics report JSON");

    CLI::App* bench = app.add_subcommand("bench", "benchmark studies");
    bench->require_subcommand(1);
    CLI::App* bench_cluster =
        bench->add_subcommand("cluster-study", "count accuracy across methods and speaker counts");
    bench_cluster->add_option("--methods", opt.study_methods, "comma list of methods");
    bench_cluster->add_option("--counts", opt.counts_text, "comma list of speaker counts");
    bench_cluster->add_option("--trials", opt.bench.trials_per_count, "trials per count");
    bench_cluster->add_option("--segments-per-speaker", opt.bench.segments_per_speaker,
                              "segments per speaker per trial");
    bench_cluster->add_option("--dim", opt.bench.embedding_dim, "embedding dimension");
    bench_cluster->add_option("--within-spread", opt.within_spread,
                              "within-speaker spread (default: model choice)");
    bench_cluster->add_option("--threads", opt.bench.threads, "worker pool size");
    bench_cluster->add_option("--out", opt.bench_out, "output prefix for .json and .txt");
    add_pipeline_flags(bench_cluster, opt, /*with_stages=*/false);

    CLI::App* bench_runtime =
        bench->add_subcommand("runtime-study", "clustering wall time on one large graph");
    bench_runtime->add_option("--methods", opt.runtime_methods, "comma list of methods");
    bench_runtime->add_option("--points", opt.bench.graph_points, "embedding rows (>= 1000)");
    bench_runtime->add_option("--speakers", opt.bench.runtime_speakers, "generating speakers");
    bench_runtime->add_option("--reps", opt.bench.runtime_reps, "repetitions per method");
    bench_runtime->add_option("--dim", opt.bench.embedding_dim, "embedding dimension");
    bench_runtime->add_option("--within-spread", opt.within_spread,
                              "within-speaker spread (default: model choice)");
    bench_runtime->add_option("--timeout", opt.bench.timeout_seconds,
                              "per-method budget in seconds");
    bench_runtime->add_option("--out", opt.bench_out, "output prefix for .json and .txt");
    add_pipeline_flags(bench_runtime, opt, /*with_stages=*/false);

    if (argc <= 1) {
        std::cout << app.help();
        return 2;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (dump_config) {
            std::cout << default_config_json(opt).dump(2) << "\n";
            return 0;
        }
        if (simulate->parsed()) return cmd_simulate(opt);
        if (reduce->parsed()) return cmd_reduce(opt);
        if (cluster->parsed()) return cmd_cluster(opt);
        if (diarize->parsed()) return cmd_diarize(opt);
        if (eval->parsed()) return cmd_eval(opt);
        if (bench->parsed())
            return bench_cluster->parsed() ? cmd_bench_cluster(opt) : cmd_bench_runtime(opt);
        std::cout << app.help();
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
