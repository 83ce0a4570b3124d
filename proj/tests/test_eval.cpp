#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "commdiar/eval.hpp"

using namespace commdiar;

namespace {

Partition make_partition(std::vector<int> labels) {
    Partition p;
    p.num_communities = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    p.assignment = std::move(labels);
    return p;
}

// All-pairs reference scorer, the quadratic way.
PairwiseScore pairwise_oracle(const std::vector<int>& pred, const std::vector<int>& truth) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (std::size_t j = i + 1; j < pred.size(); ++j) {
            const bool same_pred = pred[i] == pred[j];
            const bool same_true = truth[i] == truth[j];
            if (same_pred && same_true) ++tp;
            if (same_pred && !same_true) ++fp;
            if (!same_pred && same_true) ++fn;
        }
    }
    PairwiseScore s;
    s.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
    s.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 1.0;
    s.f = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                                       : 0.0;
    return s;
}

double brute_force_best_matching(const Eigen::MatrixXd& w) {
    const int rows = static_cast<int>(w.rows());
    const int cols = static_cast<int>(w.cols());
    std::vector<char> used(static_cast<std::size_t>(cols), 0);
    double best = 0.0;
    auto recurse = [&](auto&& self, int row, double acc) -> void {
        if (row == rows) {
            best = std::max(best, acc);
            return;
        }
        self(self, row + 1, acc);  // leave this row unmatched
        for (int c = 0; c < cols; ++c) {
            if (used[static_cast<std::size_t>(c)]) continue;
            used[static_cast<std::size_t>(c)] = 1;
            self(self, row + 1, acc + w(row, c));
            used[static_cast<std::size_t>(c)] = 0;
        }
    };
    recurse(recurse, 0, 0.0);
    return best;
}

MeetingScript two_turn_script() {
    MeetingScript s;
    s.speakers = {"A", "B"};
    s.turns = {{"A", 0.0, 10.0}, {"B", 10.0, 10.0}};
    s.total_duration_seconds = 20.0;
    return s;
}

MeetingScript random_script(std::mt19937& rng, int num_speakers) {
    MeetingScript s;
    for (int i = 0; i < num_speakers; ++i) s.speakers.push_back("r" + std::to_string(i));
    s.total_duration_seconds = 90.0;
    std::uniform_int_distribution<int> who(0, num_speakers - 1);
    std::uniform_real_distribution<double> onset(0.0, 80.0);
    std::uniform_real_distribution<double> len(1.0, 9.0);
    const int turns = std::uniform_int_distribution<int>(5, 14)(rng);
    for (int t = 0; t < turns; ++t) {
        const double o = onset(rng);
        const double l = std::min(len(rng), s.total_duration_seconds - o);
        s.turns.push_back({s.speakers[static_cast<std::size_t>(who(rng))], o, l});
    }
    return s;
}

std::vector<LabeledSegment> random_hypothesis(std::mt19937& rng, int num_speakers) {
    std::vector<LabeledSegment> segs;
    std::uniform_int_distribution<int> who(0, num_speakers - 1);
    std::uniform_real_distribution<double> onset(0.0, 80.0);
    std::uniform_real_distribution<double> len(1.0, 9.0);
    const int n = std::uniform_int_distribution<int>(4, 12)(rng);
    for (int t = 0; t < n; ++t) {
        const double o = onset(rng);
        segs.push_back({"h" + std::to_string(who(rng)), o, std::min(len(rng), 90.0 - o)});
    }
    return segs;
}

}  // namespace

TEST_CASE("count accuracy is the fraction of exact matches") {
    CHECK(count_accuracy({2, 2, 2}, {2, 2, 2}) == 1.0);
    CHECK(count_accuracy({2, 3, 4}, {2, 2, 2}) == doctest::Approx(1.0 / 3.0));
    CHECK(count_accuracy({5}, {4}) == 0.0);
    CHECK_THROWS_AS(count_accuracy({1, 2}, {1}), std::invalid_argument);
    CHECK_THROWS_AS(count_accuracy({}, {}), std::invalid_argument);
}

TEST_CASE("pairwise f-score hand examples") {
    // Truth has two classes of two; prediction lumps everything together.
    // Pairs: 6 total, TP = 2 (the two true same-class pairs), FP = 4, FN = 0.
    PairwiseScore lump = pairwise_f_score(make_partition({0, 0, 0, 0}), {0, 0, 1, 1});
    CHECK(lump.precision == doctest::Approx(1.0 / 3.0));
    CHECK(lump.recall == 1.0);
    CHECK(lump.f == doctest::Approx(0.5));

    // Identity on anything scores 1.
    PairwiseScore ident = pairwise_f_score(make_partition({1, 0, 2, 1, 0}), {5, 9, 7, 5, 9});
    CHECK(ident.f == 1.0);

    // All singletons predicted while truth has pairs: TP = 0, FN > 0.
    PairwiseScore shattered = pairwise_f_score(make_partition({0, 1, 2, 3}), {0, 0, 1, 1});
    CHECK(shattered.recall == 0.0);
    CHECK(shattered.f == 0.0);

    // All singletons on both sides: 0/0 counts as perfect agreement.
    PairwiseScore empty = pairwise_f_score(make_partition({0, 1, 2}), {4, 5, 6});
    CHECK(empty.precision == 1.0);
    CHECK(empty.recall == 1.0);
    CHECK(empty.f == 1.0);

    CHECK_THROWS_AS(pairwise_f_score(make_partition({0, 1}), {0}), std::invalid_argument);
    CHECK_THROWS_AS(pairwise_f_score(make_partition({0}), {0}), std::invalid_argument);
}

TEST_CASE("pairwise f-score matches the all-pairs oracle") {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = std::uniform_int_distribution<int>(5, 40)(rng);
        const int kp = std::uniform_int_distribution<int>(1, 6)(rng);
        const int kt = std::uniform_int_distribution<int>(1, 6)(rng);
        std::vector<int> pred, truth;
        for (int i = 0; i < n; ++i) {
            pred.push_back(std::uniform_int_distribution<int>(0, kp - 1)(rng));
            truth.push_back(std::uniform_int_distribution<int>(0, kt - 1)(rng));
        }
        PairwiseScore got = pairwise_f_score(make_partition(pred), truth);
        PairwiseScore want = pairwise_oracle(pred, truth);
        CHECK(got.precision == want.precision);
        CHECK(got.recall == want.recall);
        CHECK(got.f == want.f);
    }
}

TEST_CASE("pairwise f-score ignores predicted label names") {
    std::mt19937 rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 25;
        std::vector<int> pred, truth;
        for (int i = 0; i < n; ++i) {
            pred.push_back(std::uniform_int_distribution<int>(0, 4)(rng));
            truth.push_back(std::uniform_int_distribution<int>(0, 3)(rng));
        }
        std::vector<int> relabel{3, 0, 4, 1, 2};
        std::vector<int> renamed;
        for (int l : pred) renamed.push_back(relabel[static_cast<std::size_t>(l)]);
        PairwiseScore a = pairwise_f_score(make_partition(pred), truth);
        PairwiseScore b = pairwise_f_score(make_partition(renamed), truth);
        CHECK(a.precision == b.precision);
        CHECK(a.recall == b.recall);
        CHECK(a.f == b.f);
    }
}

TEST_CASE("hungarian assignment matches brute force on small matrices") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> w(0.0, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int rows = std::uniform_int_distribution<int>(1, 5)(rng);
        const int cols = std::uniform_int_distribution<int>(1, 5)(rng);
        Eigen::MatrixXd weight(rows, cols);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) weight(r, c) = w(rng);
        }
        std::vector<int> match = max_weight_assignment(weight);
        double total = 0.0;
        std::vector<char> seen(static_cast<std::size_t>(cols), 0);
        for (int r = 0; r < rows; ++r) {
            const int c = match[static_cast<std::size_t>(r)];
            if (c < 0) continue;
            REQUIRE(c < cols);
            REQUIRE(!seen[static_cast<std::size_t>(c)]);
            seen[static_cast<std::size_t>(c)] = 1;
            total += weight(r, c);
        }
        CHECK(total == doctest::Approx(brute_force_best_matching(weight)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(max_weight_assignment(Eigen::MatrixXd::Constant(2, 2, -1.0)),
                    std::invalid_argument);
}

TEST_CASE("a perfect hypothesis scores zero error") {
    MeetingScript ref = two_turn_script();
    std::vector<LabeledSegment> hyp = {{"x", 0.0, 10.0}, {"y", 10.0, 10.0}};
    DerBreakdown d = der(ref, hyp);
    CHECK(d.der == 0.0);
    CHECK(d.miss == 0.0);
    CHECK(d.false_alarm == 0.0);
    CHECK(d.confusion == 0.0);
}

TEST_CASE("an empty hypothesis is all miss") {
    MeetingScript ref;
    ref.speakers = {"A"};
    ref.turns = {{"A", 0.0, 10.0}};
    ref.total_duration_seconds = 10.0;
    DerBreakdown d = der(ref, {});
    CHECK(d.der == 1.0);
    CHECK(d.miss == 1.0);
    CHECK(d.false_alarm == 0.0);
    CHECK(d.confusion == 0.0);
}

TEST_CASE("one hypothesis speaker across two reference speakers is half confusion") {
    MeetingScript ref = two_turn_script();
    std::vector<LabeledSegment> hyp = {{"solo", 0.0, 20.0}};
    DerBreakdown d = der(ref, hyp);
    CHECK(d.confusion == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d.der == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d.miss == 0.0);
    CHECK(d.false_alarm == 0.0);
}

TEST_CASE("an unmatched overlap speaker counts as miss") {
    // A on [0,10], B overlapping on [5,10]; one hypothesis speaker covering
    // [0,10] maps to A. Frames in [5,10) hold two reference speakers but one
    // hypothesis speaker: 5 s of miss out of 15 s of reference speech.
    MeetingScript ref;
    ref.speakers = {"A", "B"};
    ref.turns = {{"A", 0.0, 10.0}, {"B", 5.0, 5.0}};
    ref.total_duration_seconds = 10.0;
    std::vector<LabeledSegment> hyp = {{"h", 0.0, 10.0}};
    DerBreakdown d = der(ref, hyp);
    CHECK(d.miss == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(d.false_alarm == 0.0);
    CHECK(d.confusion == 0.0);
    CHECK(d.der == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("speech beyond the reference is false alarm") {
    MeetingScript ref;
    ref.speakers = {"A"};
    ref.turns = {{"A", 0.0, 10.0}};
    ref.total_duration_seconds = 20.0;
    std::vector<LabeledSegment> hyp = {{"a", 0.0, 10.0}, {"b", 10.0, 10.0}};
    DerBreakdown d = der(ref, hyp);
    CHECK(d.false_alarm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.miss == 0.0);
    CHECK(d.confusion == 0.0);

    MeetingScript silent;
    silent.speakers = {"A"};
    silent.total_duration_seconds = 5.0;
    CHECK_THROWS_AS(der(silent, hyp), std::invalid_argument);

    std::vector<LabeledSegment> outside = {{"a", 15.0, 10.0}};
    CHECK_THROWS_AS(der(ref, outside), std::invalid_argument);
}

TEST_CASE("der is invariant to hypothesis label names") {
    std::mt19937 rng(123);
    for (int trial = 0; trial < 50; ++trial) {
        MeetingScript ref = random_script(rng, 4);
        std::vector<LabeledSegment> hyp = random_hypothesis(rng, 5);
        std::vector<LabeledSegment> renamed = hyp;
        for (LabeledSegment& seg : renamed) seg.speaker = "z" + seg.speaker;
        DerBreakdown a = der(ref, hyp);
        DerBreakdown b = der(ref, renamed);
        CHECK(a.der == b.der);
        CHECK(a.miss == b.miss);
        CHECK(a.false_alarm == b.false_alarm);
        CHECK(a.confusion == b.confusion);
        CHECK(a.der == doctest::Approx(a.miss + a.false_alarm + a.confusion).epsilon(1e-9));
    }
}

TEST_CASE("scoring a reference against its own relabeling gives zero") {
    std::mt19937 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        MeetingScript ref = random_script(rng, 3);
        std::vector<LabeledSegment> hyp;
        for (const Turn& t : ref.turns) hyp.push_back({"other_" + t.speaker, t.onset, t.duration});
        DerBreakdown d = der(ref, hyp);
        CHECK(d.der == 0.0);
    }
}

TEST_CASE("eval reports serialize with fixed field names") {
    EvalReport report;
    report.count_accuracy = 0.84;
    report.precision = 0.9;
    report.recall = 0.8;
    report.f_score = 2.0 * 0.9 * 0.8 / 1.7;
    report.der = 0.21;
    report.miss = 0.1;
    report.false_alarm = 0.05;
    report.confusion = 0.06;
    report.trials = 100;
    nlohmann::json j = nlohmann::json::parse(to_json(report));
    CHECK(j.at("count_accuracy").get<double>() == 0.84);
    CHECK(j.at("precision").get<double>() == 0.9);
    CHECK(j.at("recall").get<double>() == 0.8);
    CHECK(j.at("f_score").get<double>() == doctest::Approx(0.847).epsilon(1e-3));
    CHECK(j.at("der").get<double>() == 0.21);
    CHECK(j.at("miss").get<double>() == 0.1);
    CHECK(j.at("false_alarm").get<double>() == 0.05);
    CHECK(j.at("confusion").get<double>() == 0.06);
    CHECK(j.at("trials").get<int>() == 100);
}
