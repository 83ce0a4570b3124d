#include <doctest.h>

#include <cmath>
#include <limits>

#include "commdiar/types.hpp"

using namespace commdiar;

namespace {

EmbeddingSet small_set() {
    EmbeddingSet e;
    e.vectors = MatrixXfR(3, 2);
    e.vectors << 1.f, 0.f, 0.f, 1.f, 1.f, 1.f;
    e.segment_ids = {"s0", "s1", "s2"};
    return e;
}

}  // namespace

TEST_CASE("embedding set validation") {
    EmbeddingSet ok = small_set();
    CHECK_NOTHROW(ok.validate());

    EmbeddingSet empty;
    CHECK_THROWS_AS(empty.validate(), std::invalid_argument);

    EmbeddingSet nan_entry = small_set();
    nan_entry.vectors(1, 1) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(nan_entry.validate(), std::invalid_argument);

    EmbeddingSet dup_ids = small_set();
    dup_ids.segment_ids = {"s0", "s0", "s2"};
    CHECK_THROWS_AS(dup_ids.validate(), std::invalid_argument);

    EmbeddingSet wrong_ids = small_set();
    wrong_ids.segment_ids.pop_back();
    CHECK_THROWS_AS(wrong_ids.validate(), std::invalid_argument);

    EmbeddingSet short_times = small_set();
    short_times.times = std::vector<SegmentTime>{{0.0, 1.0}};
    CHECK_THROWS_AS(short_times.validate(), std::invalid_argument);

    EmbeddingSet bad_duration = small_set();
    bad_duration.times = std::vector<SegmentTime>{{0.0, 1.0}, {1.0, 0.0}, {2.0, 1.0}};
    CHECK_THROWS_AS(bad_duration.validate(), std::invalid_argument);
}

TEST_CASE("partition validation") {
    Partition p;
    p.assignment = {0, 1, 0, 2};
    p.num_communities = 3;
    CHECK_NOTHROW(p.validate(4));
    CHECK_THROWS_AS(p.validate(3), std::invalid_argument);  // length mismatch

    Partition out_of_range;
    out_of_range.assignment = {0, 3};
    out_of_range.num_communities = 2;
    CHECK_THROWS_AS(out_of_range.validate(2), std::invalid_argument);

    Partition empty_label;
    empty_label.assignment = {0, 0};
    empty_label.num_communities = 2;  // community 1 has no members
    CHECK_THROWS_AS(empty_label.validate(2), std::invalid_argument);
}

TEST_CASE("meeting script speech and overlap measures") {
    MeetingScript s;
    s.speakers = {"A", "B", "C"};
    s.total_duration_seconds = 20.0;
    s.turns = {{"A", 0.0, 10.0}, {"B", 5.0, 3.0}};
    CHECK_NOTHROW(s.validate());
    CHECK(s.total_speech_seconds() == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(s.overlapped_speech_seconds() == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(s.overlap_ratio() == doctest::Approx(0.3).epsilon(1e-12));

    // Three-way pile-up: union [0,6), two-or-more active on [2,5).
    MeetingScript t;
    t.speakers = {"A", "B", "C"};
    t.total_duration_seconds = 6.0;
    t.turns = {{"A", 0.0, 4.0}, {"B", 2.0, 4.0}, {"C", 3.0, 2.0}};
    CHECK(t.total_speech_seconds() == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(t.overlapped_speech_seconds() == doctest::Approx(3.0).epsilon(1e-12));

    MeetingScript silent;
    silent.speakers = {"A"};
    silent.total_duration_seconds = 5.0;
    CHECK(silent.total_speech_seconds() == 0.0);
    CHECK(silent.overlap_ratio() == 0.0);  // no speech, no overlap
}

TEST_CASE("meeting script validation") {
    MeetingScript s;
    s.speakers = {"A"};
    s.total_duration_seconds = 10.0;
    s.turns = {{"A", 0.0, 5.0}};
    CHECK_NOTHROW(s.validate());

    MeetingScript unknown = s;
    unknown.turns.push_back({"Z", 1.0, 1.0});
    CHECK_THROWS_AS(unknown.validate(), std::invalid_argument);

    MeetingScript past_end = s;
    past_end.turns.push_back({"A", 8.0, 5.0});
    CHECK_THROWS_AS(past_end.validate(), std::invalid_argument);

    MeetingScript zero_dur = s;
    zero_dur.turns.push_back({"A", 1.0, 0.0});
    CHECK_THROWS_AS(zero_dur.validate(), std::invalid_argument);
}

TEST_CASE("splitmix64 known answer") {
    // First output of the reference splitmix64 stream seeded with 0.
    CHECK(splitmix64(0x0000000000000000ULL) == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("seed derivation is deterministic and spreads") {
    RngSeed root(12345);
    CHECK(root.derive(0).seed == root.derive(0).seed);
    CHECK(root.derive(0).seed != root.derive(1).seed);
    CHECK(root.derive(1).seed != root.derive(2).seed);
    CHECK(root.derive(0).seed != RngSeed(12346).derive(0).seed);
}
