#pragma once

#include <optional>
#include <random>
#include <vector>

#include "commdiar/types.hpp"

namespace commdiar {

/// One synthetic speaker: a unit voice centroid plus the tangent-space noise
/// scale its segment embeddings scatter with (0 = every sample identical).
struct SpeakerModel {
    Eigen::RowVectorXf centroid;
    double within_spread = 0.0;
};

// Spread giving same-speaker cosines around 0.75 for 4-second segments.
double default_within_spread(int dim);

// Unit centroids with pairwise cosine <= min_separation, found by rejection
// sampling (10k attempt budget). A shared bias component pulls typical
// cross-speaker cosines up to ~0.15, mimicking the common-channel correlation
// of real speaker embeddings. An absent within_spread picks the default for
// dim; an explicit 0 makes speakers sample their centroid exactly.
std::vector<SpeakerModel> sample_speakers(int num, int dim, double min_separation, RngSeed seed,
                                          double shared_bias = 0.42,
                                          std::optional<double> within_spread = std::nullopt);

// One embedding: centroid plus tangent Gaussian noise, re-normalized. The
// noise variance scales with 4/duration_seconds (shorter segments are noisier).
Eigen::RowVectorXf sample_embedding(const SpeakerModel& speaker, double duration_seconds,
                                    std::mt19937_64& rng);

struct MeetingSimConfig {
    int num_speakers = 4;             // 2..10
    double duration_seconds = 1800;   // >= 1800
    double overlap_ratio = 0.10;      // [0.05, 0.30]
    double segment_seconds = 4.0;
    int frames_per_segment = 0;       // > 0: also emit frame rows per segment
    RngSeed seed;

    void validate() const;
};

struct MeetingSample {
    MeetingScript script;
    EmbeddingSet embeddings;              // one row per segment
    std::vector<int> dominant_speaker;    // per segment, index into speakers
    std::optional<EmbeddingSet> frames;   // frames_per_segment rows per segment,
                                          // ids "<segment>_f<j>"
};

// Alternating log-normal turns (median 5 s) tile the meeting; overlap is
// realized by shifting turn onsets earlier until the realized ratio lands
// within +-2 points of the configured one (else an error). Fixed-length
// segments tile the timeline; overlapped segments interpolate toward the
// secondary speaker's centroid by its time share before re-noising.
MeetingSample simulate_meeting(const MeetingSimConfig& config,
                               const std::vector<SpeakerModel>& speakers);

struct ClusterTrial {
    EmbeddingSet embeddings;   // shuffled; durations uniform in [2,4] s
    std::vector<int> labels;   // ground-truth speaker per row
    std::vector<SpeakerModel> speakers;
};

// Shuffled per-speaker segment samples with ground-truth labels.
ClusterTrial sample_cluster_trial(int num_speakers, int segments_per_speaker, RngSeed seed,
                                  int dim = 256,
                                  std::optional<double> within_spread = std::nullopt);

// T frames, ceil((1-mix_fraction)*T) from the primary speaker and the rest
// from the secondary, shuffled. secondary may be null only when mix is 0.
MatrixXfR sample_frames(const SpeakerModel& primary, const SpeakerModel* secondary,
                        double mix_fraction, int num_frames, RngSeed seed);

}  // namespace commdiar
