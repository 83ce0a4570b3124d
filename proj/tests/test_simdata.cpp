#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "commdiar/simdata.hpp"

using namespace commdiar;

namespace {

double cosine(const Eigen::RowVectorXf& a, const Eigen::RowVectorXf& b) {
    return a.cast<double>().dot(b.cast<double>()) /
           (a.cast<double>().norm() * b.cast<double>().norm());
}

// Per-speaker active time inside [lo, hi), recomputed from the script alone.
std::vector<double> segment_shares(const MeetingScript& script, double lo, double hi) {
    std::vector<double> share(script.speakers.size(), 0.0);
    for (const Turn& t : script.turns) {
        const double a = std::max(lo, t.onset);
        const double b = std::min(hi, t.onset + t.duration);
        if (b <= a) continue;
        const auto it = std::find(script.speakers.begin(), script.speakers.end(), t.speaker);
        share[static_cast<std::size_t>(it - script.speakers.begin())] += b - a;
    }
    return share;
}

std::vector<SpeakerModel> exact_speakers(int num, int dim) {
    // Orthogonal unit centroids with zero spread: every sample is exact.
    std::vector<SpeakerModel> speakers;
    for (int s = 0; s < num; ++s) {
        Eigen::RowVectorXf c = Eigen::RowVectorXf::Zero(dim);
        c(s) = 1.f;
        speakers.push_back({c, 0.0});
    }
    return speakers;
}

}  // namespace

TEST_CASE("sampled speakers satisfy the separation constraint") {
    auto one = sample_speakers(1, 256, 0.5, RngSeed(1));
    REQUIRE(one.size() == 1);
    CHECK(std::abs(one[0].centroid.norm() - 1.f) < 1e-5f);
    CHECK(one[0].within_spread == doctest::Approx(default_within_spread(256)));

    auto two = sample_speakers(2, 256, 0.0, RngSeed(2));
    CHECK(cosine(two[0].centroid, two[1].centroid) <= 0.0);

    auto eight = sample_speakers(8, 256, 0.5, RngSeed(3));
    REQUIRE(eight.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(std::abs(eight[i].centroid.norm() - 1.f) < 1e-5f);
        for (std::size_t j = i + 1; j < 8; ++j) {
            CHECK(cosine(eight[i].centroid, eight[j].centroid) <= 0.5 + 1e-6);
        }
    }
}

TEST_CASE("an impossible separation exhausts the attempt budget") {
    // Five vectors with pairwise cosine <= -0.9 cannot exist: the Gram matrix
    // would have negative eigenvalues.
    CHECK_THROWS_AS(sample_speakers(5, 3, -0.9, RngSeed(4)), std::runtime_error);
    CHECK_THROWS_AS(sample_speakers(0, 8, 0.5, RngSeed(0)), std::invalid_argument);
    CHECK_THROWS_AS(sample_speakers(2, 1, 0.5, RngSeed(0)), std::invalid_argument);
    CHECK_THROWS_AS(sample_speakers(2, 8, 1.0, RngSeed(0)), std::invalid_argument);
}

TEST_CASE("default spread lands same-speaker cosines near 0.75") {
    auto speakers = sample_speakers(4, 256, 0.5, RngSeed(7));
    std::mt19937_64 rng(99);
    double intra = 0.0, cross = 0.0;
    const int reps = 150;
    for (int r = 0; r < reps; ++r) {
        Eigen::RowVectorXf a = sample_embedding(speakers[0], 4.0, rng);
        Eigen::RowVectorXf b = sample_embedding(speakers[0], 4.0, rng);
        Eigen::RowVectorXf c = sample_embedding(speakers[1], 4.0, rng);
        intra += cosine(a, b);
        cross += cosine(a, c);
    }
    intra /= reps;
    cross /= reps;
    CHECK(intra > 0.70);
    CHECK(intra < 0.80);
    CHECK(cross > 0.0);
    CHECK(cross < 0.30);
    CHECK(intra > 2.0 * cross);
}

TEST_CASE("shorter segments scatter more") {
    auto speakers = sample_speakers(1, 128, 0.5, RngSeed(11));
    std::mt19937_64 rng(5);
    double cos_long = 0.0, cos_short = 0.0;
    const int reps = 300;
    for (int r = 0; r < reps; ++r) {
        cos_long += cosine(sample_embedding(speakers[0], 4.0, rng), speakers[0].centroid);
        cos_short += cosine(sample_embedding(speakers[0], 2.0, rng), speakers[0].centroid);
    }
    CHECK(cos_long / reps > cos_short / reps + 0.02);

    SpeakerModel still{speakers[0].centroid, 0.0};
    CHECK(sample_embedding(still, 4.0, rng) == still.centroid);
    CHECK_THROWS_AS(sample_embedding(still, 0.0, rng), std::invalid_argument);
}

TEST_CASE("meeting overlap lands within two points of the target") {
    for (double target : {0.05, 0.10, 0.30}) {
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            MeetingSimConfig config;
            config.num_speakers = 4;
            config.duration_seconds = 1800;
            config.overlap_ratio = target;
            config.seed = RngSeed(seed);
            auto speakers = sample_speakers(4, 64, 0.5, RngSeed(seed + 50));
            MeetingSample sample = simulate_meeting(config, speakers);
            const double realized = sample.script.overlap_ratio();
            CHECK(realized >= target - 0.02);
            CHECK(realized <= target + 0.02);
        }
    }
}

TEST_CASE("a two-speaker meeting tiles into labeled segments") {
    MeetingSimConfig config;
    config.num_speakers = 2;
    config.duration_seconds = 1800;
    config.overlap_ratio = 0.10;
    config.seed = RngSeed(21);
    auto speakers = sample_speakers(2, 64, 0.5, RngSeed(22));
    MeetingSample sample = simulate_meeting(config, speakers);

    CHECK(sample.embeddings.num_rows() >= 400);
    CHECK(sample.embeddings.num_rows() == sample.script.total_duration_seconds / 4.0);
    REQUIRE(sample.embeddings.times.has_value());
    REQUIRE(sample.dominant_speaker.size() ==
            static_cast<std::size_t>(sample.embeddings.num_rows()));

    // Every segment must be covered by at least one turn, and the recorded
    // dominant speaker must match a from-scratch recount of time shares.
    for (Eigen::Index seg = 0; seg < sample.embeddings.num_rows(); ++seg) {
        const SegmentTime st = (*sample.embeddings.times)[static_cast<std::size_t>(seg)];
        auto share = segment_shares(sample.script, st.onset, st.onset + st.duration);
        const double covered = *std::max_element(share.begin(), share.end());
        CHECK(covered > 0.0);
        const int dominant =
            static_cast<int>(std::max_element(share.begin(), share.end()) - share.begin());
        CHECK(sample.dominant_speaker[static_cast<std::size_t>(seg)] == dominant);
    }

    // Turns stay inside the meeting and use only known speakers.
    for (const Turn& t : sample.script.turns) {
        CHECK(t.onset >= 0.0);
        CHECK(t.onset + t.duration <= config.duration_seconds + 1e-6);
    }
}

TEST_CASE("zero-spread meetings produce exactly interpolated embeddings") {
    MeetingSimConfig config;
    config.num_speakers = 3;
    config.duration_seconds = 1800;
    config.overlap_ratio = 0.15;
    config.seed = RngSeed(33);
    auto speakers = exact_speakers(3, 16);
    MeetingSample sample = simulate_meeting(config, speakers);

    int mixed = 0;
    for (Eigen::Index seg = 0; seg < sample.embeddings.num_rows(); ++seg) {
        const SegmentTime st = (*sample.embeddings.times)[static_cast<std::size_t>(seg)];
        auto share = segment_shares(sample.script, st.onset, st.onset + st.duration);
        std::vector<std::size_t> order{0, 1, 2};
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return share[a] > share[b]; });
        const double dom = share[order[0]];
        const double sec = share[order[1]];
        const double mix = sec > 0.0 ? sec / (dom + sec) : 0.0;

        Eigen::RowVectorXf expected = speakers[order[0]].centroid;
        if (mix > 0.0) {
            expected = (1.f - static_cast<float>(mix)) * expected +
                       static_cast<float>(mix) * speakers[order[1]].centroid;
            expected /= expected.norm();
            ++mixed;
        }
        CHECK((sample.embeddings.vectors.row(seg) - expected).norm() < 1e-5f);
    }
    CHECK(mixed > 0);  // a 15% overlap meeting must contain mixed segments
}

TEST_CASE("per-segment frames follow the declared primary/secondary split") {
    MeetingSimConfig config;
    config.num_speakers = 2;
    config.duration_seconds = 1800;
    config.overlap_ratio = 0.20;
    config.frames_per_segment = 8;
    config.seed = RngSeed(41);
    auto speakers = exact_speakers(2, 8);
    MeetingSample sample = simulate_meeting(config, speakers);

    REQUIRE(sample.frames.has_value());
    const int per = config.frames_per_segment;
    CHECK(sample.frames->num_rows() == sample.embeddings.num_rows() * per);

    for (Eigen::Index seg = 0; seg < sample.embeddings.num_rows(); ++seg) {
        const SegmentTime st = (*sample.embeddings.times)[static_cast<std::size_t>(seg)];
        auto share = segment_shares(sample.script, st.onset, st.onset + st.duration);
        const int dominant = share[0] >= share[1] ? 0 : 1;
        const double dom = share[static_cast<std::size_t>(dominant)];
        const double sec = share[static_cast<std::size_t>(1 - dominant)];
        const double mix = sec > 0.0 ? sec / (dom + sec) : 0.0;
        const int expected_primary = static_cast<int>(std::ceil((1.0 - mix) * per - 1e-12));

        int from_primary = 0;
        for (int f = 0; f < per; ++f) {
            const Eigen::Index row = seg * per + f;
            const std::string& id =
                sample.frames->segment_ids[static_cast<std::size_t>(row)];
            CHECK(id == sample.embeddings.segment_ids[static_cast<std::size_t>(seg)] + "_f" +
                            std::to_string(f));
            // Zero spread: every frame IS one of the two centroids.
            if (sample.frames->vectors.row(row) ==
                speakers[static_cast<std::size_t>(dominant)].centroid) {
                ++from_primary;
            }
        }
        CHECK(from_primary == expected_primary);
    }
}

TEST_CASE("meetings are bit-reproducible per seed") {
    MeetingSimConfig config;
    config.num_speakers = 4;
    config.duration_seconds = 1800;
    config.overlap_ratio = 0.10;
    config.frames_per_segment = 4;
    config.seed = RngSeed(55);
    auto speakers = sample_speakers(4, 32, 0.5, RngSeed(56));
    MeetingSample a = simulate_meeting(config, speakers);
    MeetingSample b = simulate_meeting(config, speakers);
    CHECK(a.embeddings.vectors == b.embeddings.vectors);
    CHECK(a.frames->vectors == b.frames->vectors);
    REQUIRE(a.script.turns.size() == b.script.turns.size());
    for (std::size_t i = 0; i < a.script.turns.size(); ++i) {
        CHECK(a.script.turns[i].speaker == b.script.turns[i].speaker);
        CHECK(a.script.turns[i].onset == b.script.turns[i].onset);
        CHECK(a.script.turns[i].duration == b.script.turns[i].duration);
    }

    config.seed = RngSeed(56);
    MeetingSample c = simulate_meeting(config, speakers);
    CHECK(a.embeddings.vectors != c.embeddings.vectors);
}

TEST_CASE("meeting config validation") {
    MeetingSimConfig config;
    auto speakers = sample_speakers(4, 16, 0.5, RngSeed(1));

    config.num_speakers = 1;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.num_speakers = 11;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.num_speakers = 4;
    config.duration_seconds = 60;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.duration_seconds = 1800;
    config.overlap_ratio = 0.4;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.overlap_ratio = 0.1;
    config.validate();

    CHECK_THROWS_AS(simulate_meeting(config, {speakers[0], speakers[1]}),
                    std::invalid_argument);  // wrong speaker count
}

TEST_CASE("cluster trials ship shuffled labeled samples") {
    ClusterTrial solo = sample_cluster_trial(1, 30, RngSeed(5));
    CHECK(solo.labels == std::vector<int>(30, 0));

    ClusterTrial trial = sample_cluster_trial(4, 50, RngSeed(6));
    CHECK(trial.embeddings.num_rows() == 200);
    CHECK(trial.embeddings.dim() == 256);
    std::map<int, int> counts;
    for (int l : trial.labels) counts[l] += 1;
    REQUIRE(counts.size() == 4);
    for (const auto& [label, count] : counts) CHECK(count == 50);

    // The shuffle must actually interleave speakers.
    std::vector<int> sorted = trial.labels;
    std::sort(sorted.begin(), sorted.end());
    CHECK(trial.labels != sorted);

    REQUIRE(trial.embeddings.times.has_value());
    for (const SegmentTime& st : *trial.embeddings.times) {
        CHECK(st.duration >= 2.0);
        CHECK(st.duration <= 4.0);
    }
}

TEST_CASE("zero spread collapses same-speaker trial rows") {
    ClusterTrial trial = sample_cluster_trial(3, 10, RngSeed(9), 32, 0.0);
    for (int i = 0; i < trial.embeddings.num_rows(); ++i) {
        const int label = trial.labels[static_cast<std::size_t>(i)];
        CHECK(trial.embeddings.vectors.row(i) ==
              trial.speakers[static_cast<std::size_t>(label)].centroid);
    }
}

TEST_CASE("cluster trials are deterministic per seed") {
    ClusterTrial a = sample_cluster_trial(3, 20, RngSeed(77), 64);
    ClusterTrial b = sample_cluster_trial(3, 20, RngSeed(77), 64);
    CHECK(a.embeddings.vectors == b.embeddings.vectors);
    CHECK(a.labels == b.labels);
    ClusterTrial c = sample_cluster_trial(3, 20, RngSeed(78), 64);
    CHECK(a.embeddings.vectors != c.embeddings.vectors);
}

TEST_CASE("frame sampling splits primary and secondary exactly") {
    auto speakers = exact_speakers(2, 8);

    MatrixXfR pure = sample_frames(speakers[0], nullptr, 0.0, 12, RngSeed(1));
    for (int i = 0; i < 12; ++i) CHECK(pure.row(i) == speakers[0].centroid);

    MatrixXfR mixed = sample_frames(speakers[0], &speakers[1], 0.25, 40, RngSeed(2));
    int primary = 0, secondary = 0;
    for (int i = 0; i < 40; ++i) {
        if (mixed.row(i) == speakers[0].centroid) ++primary;
        if (mixed.row(i) == speakers[1].centroid) ++secondary;
    }
    CHECK(primary == 30);
    CHECK(secondary == 10);

    CHECK_THROWS_AS(sample_frames(speakers[0], nullptr, 0.1, 10, RngSeed(0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(sample_frames(speakers[0], &speakers[1], 1.5, 10, RngSeed(0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(sample_frames(speakers[0], nullptr, 0.0, 0, RngSeed(0)),
                    std::invalid_argument);
}

TEST_CASE("the mean of many frames approaches the speaker centroid") {
    auto speakers = sample_speakers(1, 256, 0.5, RngSeed(13));
    MatrixXfR frames = sample_frames(speakers[0], nullptr, 0.0, 2000, RngSeed(14));
    Eigen::RowVectorXf mean = frames.colwise().mean();
    CHECK(cosine(mean, speakers[0].centroid) > 0.99);

    MatrixXfR again = sample_frames(speakers[0], nullptr, 0.0, 2000, RngSeed(14));
    CHECK(frames == again);
}
