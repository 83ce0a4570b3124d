#include "commdiar/simdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace commdiar {

namespace {

constexpr int kSpeakerAttemptBudget = 10000;
constexpr double kTurnMedianSeconds = 5.0;
constexpr double kTurnLogSigma = 0.6;
constexpr double kMinTurnSeconds = 1.0;
constexpr double kMaxTurnSeconds = 30.0;
// A turn's onset may move back over the previous turn by at most this share
// of the shorter of the two; < 1 keeps every overlap a two-speaker region.
constexpr double kMaxOnsetShiftShare = 0.8;
constexpr double kOverlapTolerance = 0.02;
constexpr double kReferenceSegmentSeconds = 4.0;

Eigen::RowVectorXf random_unit(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    Eigen::RowVectorXf v(dim);
    double norm_sq = 0.0;
    do {
        for (int d = 0; d < dim; ++d) v(d) = static_cast<float>(gauss(rng));
        norm_sq = v.cast<double>().squaredNorm();
    } while (!(norm_sq > 0.0));
    return v / static_cast<float>(std::sqrt(norm_sq));
}

// Tangent-space Gaussian noise around a unit vector, re-projected to the
// sphere.
Eigen::RowVectorXf perturb_on_sphere(const Eigen::RowVectorXf& center, double sigma,
                                     std::mt19937_64& rng) {
    if (sigma <= 0.0) return center;
    std::normal_distribution<double> gauss(0.0, sigma);
    Eigen::RowVectorXd noise(center.cols());
    for (int d = 0; d < center.cols(); ++d) noise(d) = gauss(rng);
    Eigen::RowVectorXd c = center.cast<double>();
    noise -= (noise.dot(c)) * c;  // keep the step tangent
    Eigen::RowVectorXd out = c + noise;
    return (out / out.norm()).cast<float>();
}

double turn_length(std::mt19937_64& rng) {
    std::lognormal_distribution<double> dist(std::log(kTurnMedianSeconds), kTurnLogSigma);
    return std::clamp(dist(rng), kMinTurnSeconds, kMaxTurnSeconds);
}

std::string segment_id(int index) {
    std::string digits = std::to_string(index);
    if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
    return "seg" + digits;
}

}  // namespace

double default_within_spread(int dim) {
    if (dim < 2) throw std::invalid_argument("default_within_spread: dim must be >= 2");
    // Same-speaker cosine ~ 1/(1 + sigma^2 (dim-1)); 0.75 needs
    // sigma^2 (dim-1) = 1/3.
    return 1.0 / std::sqrt(3.0 * (dim - 1));
}

std::vector<SpeakerModel> sample_speakers(int num, int dim, double min_separation, RngSeed seed,
                                          double shared_bias,
                                          std::optional<double> within_spread) {
    if (num < 1) throw std::invalid_argument("sample_speakers: num must be >= 1");
    if (dim < 2) throw std::invalid_argument("sample_speakers: dim must be >= 2");
    if (min_separation >= 1.0) {
        throw std::invalid_argument("sample_speakers: min_separation must be < 1");
    }
    if (shared_bias < 0.0) throw std::invalid_argument("sample_speakers: negative bias");
    const double spread = within_spread.value_or(default_within_spread(dim));
    if (spread < 0.0) throw std::invalid_argument("sample_speakers: negative within_spread");

    std::mt19937_64 rng(seed.seed);
    const Eigen::RowVectorXf bias = random_unit(dim, rng);

    std::vector<SpeakerModel> speakers;
    speakers.reserve(static_cast<std::size_t>(num));
    int attempts = 0;
    while (static_cast<int>(speakers.size()) < num) {
        if (++attempts > kSpeakerAttemptBudget) {
            throw std::runtime_error(
                "sample_speakers: separation " + std::to_string(min_separation) +
                " infeasible in dim " + std::to_string(dim) + " within attempt budget");
        }
        Eigen::RowVectorXf raw =
            static_cast<float>(shared_bias) * bias + random_unit(dim, rng);
        Eigen::RowVectorXf candidate = raw / raw.norm();
        bool ok = true;
        for (const SpeakerModel& s : speakers) {
            if (candidate.dot(s.centroid) > min_separation) {
                ok = false;
                break;
            }
        }
        if (ok) speakers.push_back({candidate, spread});
    }
    return speakers;
}

Eigen::RowVectorXf sample_embedding(const SpeakerModel& speaker, double duration_seconds,
                                    std::mt19937_64& rng) {
    if (!(duration_seconds > 0.0)) {
        throw std::invalid_argument("sample_embedding: duration must be positive");
    }
    const double sigma =
        speaker.within_spread * std::sqrt(kReferenceSegmentSeconds / duration_seconds);
    return perturb_on_sphere(speaker.centroid, sigma, rng);
}

void MeetingSimConfig::validate() const {
    if (num_speakers < 2 || num_speakers > 10) {
        throw std::invalid_argument("meeting config: num_speakers must be in [2, 10]");
    }
    if (!(duration_seconds >= 1800.0)) {
        throw std::invalid_argument("meeting config: duration must be >= 1800 s");
    }
    if (!(overlap_ratio >= 0.05 && overlap_ratio <= 0.30)) {
        throw std::invalid_argument("meeting config: overlap_ratio must be in [0.05, 0.30]");
    }
    if (!(segment_seconds > 0.0) || segment_seconds > duration_seconds) {
        throw std::invalid_argument("meeting config: bad segment_seconds");
    }
    if (frames_per_segment < 0) {
        throw std::invalid_argument("meeting config: negative frames_per_segment");
    }
}

MeetingSample simulate_meeting(const MeetingSimConfig& config,
                               const std::vector<SpeakerModel>& speakers) {
    config.validate();
    if (static_cast<int>(speakers.size()) != config.num_speakers) {
        throw std::invalid_argument("simulate_meeting: speaker list size != num_speakers");
    }
    for (const SpeakerModel& s : speakers) {
        if (std::abs(s.centroid.norm() - 1.f) > 1e-4f) {
            throw std::invalid_argument("simulate_meeting: speaker centroid not unit norm");
        }
    }

    // Alternating turns tile [0, duration].
    std::mt19937_64 turn_rng(config.seed.derive(1).seed);
    struct SimTurn {
        int speaker;
        double onset;
        double duration;
    };
    std::vector<SimTurn> turns;
    {
        std::uniform_int_distribution<int> first(0, config.num_speakers - 1);
        std::uniform_int_distribution<int> step(1, config.num_speakers - 1);
        int current = first(turn_rng);
        double t = 0.0;
        while (t < config.duration_seconds) {
            double len = turn_length(turn_rng);
            if (config.duration_seconds - (t + len) < kMinTurnSeconds) {
                len = config.duration_seconds - t;  // absorb the remainder
            }
            turns.push_back({current, t, len});
            t += len;
            current = (current + step(turn_rng)) % config.num_speakers;
        }
    }

    // Pull onsets back over the previous turn until the overlap target is met.
    std::mt19937_64 overlap_rng(config.seed.derive(2).seed);
    {
        const double target = config.overlap_ratio * config.duration_seconds;
        std::vector<std::size_t> boundary(turns.size() > 0 ? turns.size() - 1 : 0);
        std::iota(boundary.begin(), boundary.end(), std::size_t{1});
        std::shuffle(boundary.begin(), boundary.end(), overlap_rng);

        std::vector<double> shift(turns.size(), 0.0);
        std::uniform_real_distribution<double> portion(0.3, 0.9);
        double needed = target;
        for (std::size_t b : boundary) {
            if (needed <= 1e-9) break;
            const double cap = kMaxOnsetShiftShare *
                               std::min(turns[b - 1].duration, turns[b].duration);
            shift[b] = std::min(needed, portion(overlap_rng) * cap);
            needed -= shift[b];
        }
        // Top up boundaries with remaining headroom if the first pass fell
        // short.
        for (std::size_t b : boundary) {
            if (needed <= 1e-9) break;
            const double cap = kMaxOnsetShiftShare *
                               std::min(turns[b - 1].duration, turns[b].duration);
            const double extra = std::min(needed, cap - shift[b]);
            if (extra > 0.0) {
                shift[b] += extra;
                needed -= extra;
            }
        }
        if (needed > kOverlapTolerance * config.duration_seconds) {
            throw std::runtime_error("simulate_meeting: overlap target infeasible for the "
                                     "sampled turn structure");
        }
        for (std::size_t i = 1; i < turns.size(); ++i) {
            turns[i].onset -= shift[i];
            turns[i].duration += shift[i];
        }
    }

    MeetingSample sample;
    sample.script.total_duration_seconds = config.duration_seconds;
    for (int s = 0; s < config.num_speakers; ++s) {
        sample.script.speakers.push_back("spk" + std::to_string(s));
    }
    for (const SimTurn& t : turns) {
        sample.script.turns.push_back(
            {sample.script.speakers[static_cast<std::size_t>(t.speaker)], t.onset, t.duration});
    }
    sample.script.validate();
    const double realized = sample.script.overlap_ratio();
    if (std::abs(realized - config.overlap_ratio) > kOverlapTolerance) {
        throw std::runtime_error("simulate_meeting: realized overlap " +
                                 std::to_string(realized) + " misses target " +
                                 std::to_string(config.overlap_ratio));
    }

    // Fixed-length segments over the timeline; per segment, speaker time
    // shares decide the dominant and secondary voices.
    const int num_segments =
        static_cast<int>(std::ceil(config.duration_seconds / config.segment_seconds - 1e-9));
    const int dim = static_cast<int>(speakers.front().centroid.cols());

    sample.embeddings.vectors = MatrixXfR(num_segments, dim);
    sample.embeddings.times.emplace();
    sample.dominant_speaker.reserve(static_cast<std::size_t>(num_segments));

    const bool want_frames = config.frames_per_segment > 0;
    if (want_frames) {
        sample.frames.emplace();
        sample.frames->vectors = MatrixXfR(num_segments * config.frames_per_segment, dim);
        sample.frames->times.emplace();
    }

    std::mt19937_64 emit_rng(config.seed.derive(3).seed);
    std::vector<double> share(static_cast<std::size_t>(config.num_speakers));
    for (int seg = 0; seg < num_segments; ++seg) {
        const double lo = seg * config.segment_seconds;
        const double hi = std::min(lo + config.segment_seconds, config.duration_seconds);
        std::fill(share.begin(), share.end(), 0.0);
        for (std::size_t t = 0; t < turns.size(); ++t) {
            const double a = std::max(lo, turns[t].onset);
            const double b = std::min(hi, turns[t].onset + turns[t].duration);
            if (b > a) share[static_cast<std::size_t>(turns[t].speaker)] += b - a;
        }
        int dominant = 0, secondary = -1;
        for (int s = 1; s < config.num_speakers; ++s) {
            if (share[static_cast<std::size_t>(s)] > share[static_cast<std::size_t>(dominant)]) {
                dominant = s;
            }
        }
        for (int s = 0; s < config.num_speakers; ++s) {
            if (s == dominant || share[static_cast<std::size_t>(s)] <= 0.0) continue;
            if (secondary < 0 ||
                share[static_cast<std::size_t>(s)] > share[static_cast<std::size_t>(secondary)]) {
                secondary = s;
            }
        }

        const double dom_share = share[static_cast<std::size_t>(dominant)];
        const double sec_share = secondary >= 0 ? share[static_cast<std::size_t>(secondary)] : 0.0;
        const double mix = sec_share > 0.0 ? sec_share / (dom_share + sec_share) : 0.0;

        Eigen::RowVectorXf base = speakers[static_cast<std::size_t>(dominant)].centroid;
        if (mix > 0.0) {
            base = (1.0f - static_cast<float>(mix)) * base +
                   static_cast<float>(mix) * speakers[static_cast<std::size_t>(secondary)].centroid;
            base /= base.norm();
        }
        SpeakerModel blended{base, speakers[static_cast<std::size_t>(dominant)].within_spread};
        sample.embeddings.vectors.row(seg) = sample_embedding(blended, hi - lo, emit_rng);
        sample.embeddings.segment_ids.push_back(segment_id(seg));
        sample.embeddings.times->push_back({lo, hi - lo});
        sample.dominant_speaker.push_back(dominant);

        if (want_frames) {
            MatrixXfR rows = sample_frames(
                speakers[static_cast<std::size_t>(dominant)],
                secondary >= 0 ? &speakers[static_cast<std::size_t>(secondary)] : nullptr, mix,
                config.frames_per_segment, config.seed.derive(0x46000000u + seg));
            for (int f = 0; f < config.frames_per_segment; ++f) {
                const int row = seg * config.frames_per_segment + f;
                sample.frames->vectors.row(row) = rows.row(f);
                sample.frames->segment_ids.push_back(segment_id(seg) + "_f" + std::to_string(f));
                sample.frames->times->push_back({lo, hi - lo});
            }
        }
    }

    sample.embeddings.validate();
    if (want_frames) sample.frames->validate();
    return sample;
}

ClusterTrial sample_cluster_trial(int num_speakers, int segments_per_speaker, RngSeed seed,
                                  int dim, std::optional<double> within_spread) {
    if (num_speakers < 1) throw std::invalid_argument("cluster trial: num_speakers must be >= 1");
    if (segments_per_speaker < 1) {
        throw std::invalid_argument("cluster trial: segments_per_speaker must be >= 1");
    }

    ClusterTrial trial;
    trial.speakers = sample_speakers(num_speakers, dim, 0.5, seed.derive(1), 0.42, within_spread);

    const int n = num_speakers * segments_per_speaker;
    std::mt19937_64 rng(seed.derive(2).seed);
    std::uniform_real_distribution<double> duration(2.0, 4.0);

    MatrixXfR vectors(n, dim);
    std::vector<int> labels;
    std::vector<double> durations;
    labels.reserve(static_cast<std::size_t>(n));
    durations.reserve(static_cast<std::size_t>(n));
    for (int s = 0; s < num_speakers; ++s) {
        for (int j = 0; j < segments_per_speaker; ++j) {
            const double dur = duration(rng);
            vectors.row(labels.size()) =
                sample_embedding(trial.speakers[static_cast<std::size_t>(s)], dur, rng);
            labels.push_back(s);
            durations.push_back(dur);
        }
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(seed.derive(3).seed);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    trial.embeddings.vectors = MatrixXfR(n, dim);
    trial.embeddings.times.emplace();
    double onset = 0.0;
    for (int i = 0; i < n; ++i) {
        const int src = order[static_cast<std::size_t>(i)];
        trial.embeddings.vectors.row(i) = vectors.row(src);
        trial.embeddings.segment_ids.push_back(segment_id(i));
        trial.embeddings.times->push_back({onset, durations[static_cast<std::size_t>(src)]});
        onset += durations[static_cast<std::size_t>(src)];
        trial.labels.push_back(labels[static_cast<std::size_t>(src)]);
    }
    trial.embeddings.validate();
    return trial;
}

MatrixXfR sample_frames(const SpeakerModel& primary, const SpeakerModel* secondary,
                        double mix_fraction, int num_frames, RngSeed seed) {
    if (!(mix_fraction >= 0.0 && mix_fraction <= 1.0)) {
        throw std::invalid_argument("sample_frames: mix_fraction must be in [0, 1]");
    }
    if (mix_fraction > 0.0 && secondary == nullptr) {
        throw std::invalid_argument("sample_frames: secondary speaker required when mixing");
    }
    if (num_frames < 1) throw std::invalid_argument("sample_frames: num_frames must be >= 1");

    const int primary_count =
        static_cast<int>(std::ceil((1.0 - mix_fraction) * num_frames - 1e-12));
    std::mt19937_64 rng(seed.seed);

    const int dim = static_cast<int>(primary.centroid.cols());
    MatrixXfR frames(num_frames, dim);
    for (int i = 0; i < num_frames; ++i) {
        const SpeakerModel& model = i < primary_count ? primary : *secondary;
        frames.row(i) = perturb_on_sphere(model.centroid, model.within_spread, rng);
    }

    std::vector<int> order(static_cast<std::size_t>(num_frames));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    MatrixXfR shuffled(num_frames, dim);
    for (int i = 0; i < num_frames; ++i) shuffled.row(i) = frames.row(order[static_cast<std::size_t>(i)]);
    return shuffled;
}

}  // namespace commdiar
