#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace commdiar {

using MatrixXfR = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Onset/duration of one segment, in seconds.
struct SegmentTime {
    double onset = 0.0;
    double duration = 0.0;
};

/// N segment-level speaker embeddings (rows) with ids and optional times.
struct EmbeddingSet {
    MatrixXfR vectors;                              // N x D
    std::vector<std::string> segment_ids;           // length N, unique
    std::optional<std::vector<SegmentTime>> times;  // length N when present

    Eigen::Index num_rows() const { return vectors.rows(); }
    Eigen::Index dim() const { return vectors.cols(); }

    // Throws std::invalid_argument if any invariant is violated.
    void validate() const;
};

/// Node -> community assignment. Community indices are compact: every index
/// in [0, num_communities) occurs at least once.
struct Partition {
    std::vector<int> assignment;
    int num_communities = 0;
    double quality = 0.0;  // modularity on the graph it came from, when computed
    bool converged = true;

    void validate(std::size_t expected_nodes) const;
};

/// Ground-truth speaker timeline. Turns may overlap.
struct Turn {
    std::string speaker;
    double onset = 0.0;
    double duration = 0.0;
};

struct MeetingScript {
    std::vector<std::string> speakers;
    std::vector<Turn> turns;
    double total_duration_seconds = 0.0;

    double total_speech_seconds() const;    // measure of {t : >=1 speaker active}
    double overlapped_speech_seconds() const;  // measure of {t : >=2 active}
    double overlap_ratio() const;

    void validate() const;
};

/// Seed for every randomized operation. Identical seed + identical inputs
/// gives bit-identical outputs within one build.
struct RngSeed {
    std::uint64_t seed = 0;

    RngSeed() = default;
    explicit RngSeed(std::uint64_t s) : seed(s) {}

    // Derive an independent stream seed from a counter (splitmix64 mix).
    RngSeed derive(std::uint64_t counter) const;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace commdiar
