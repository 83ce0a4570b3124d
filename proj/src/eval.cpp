#include "commdiar/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace commdiar {

namespace {

constexpr double kFrameSeconds = 0.01;

std::int64_t pairs(std::int64_t n) { return n * (n - 1) / 2; }

// Square min-cost perfect assignment via shortest augmenting paths with
// potentials. 1-indexed internals; p[j] = row matched to column j.
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> match(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j) {
        if (p[static_cast<std::size_t>(j)] > 0) {
            match[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
        }
    }
    return match;
}

}  // namespace

double count_accuracy(const std::vector<int>& predicted_counts,
                      const std::vector<int>& true_counts) {
    if (predicted_counts.size() != true_counts.size()) {
        throw std::invalid_argument("count_accuracy: length mismatch");
    }
    if (predicted_counts.empty()) {
        throw std::invalid_argument("count_accuracy: no trials");
    }
    int hits = 0;
    for (std::size_t i = 0; i < predicted_counts.size(); ++i) {
        hits += predicted_counts[i] == true_counts[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(predicted_counts.size());
}

PairwiseScore pairwise_f_score(const Partition& predicted, const std::vector<int>& truth) {
    const std::size_t n = truth.size();
    if (predicted.assignment.size() != n) {
        throw std::invalid_argument("pairwise_f_score: length mismatch");
    }
    if (n < 2) throw std::invalid_argument("pairwise_f_score: need at least two segments");

    // Contingency counts give the pair totals without touching all O(n^2)
    // pairs: TP = sum C(n_ij,2), same-predicted = sum C(a_i,2), etc.
    std::map<int, std::int64_t> pred_sizes, true_sizes;
    std::map<std::pair<int, int>, std::int64_t> joint;
    for (std::size_t i = 0; i < n; ++i) {
        pred_sizes[predicted.assignment[i]] += 1;
        true_sizes[truth[i]] += 1;
        joint[{predicted.assignment[i], truth[i]}] += 1;
    }
    std::int64_t tp = 0, same_pred = 0, same_true = 0;
    for (const auto& [cell, count] : joint) tp += pairs(count);
    for (const auto& [label, count] : pred_sizes) same_pred += pairs(count);
    for (const auto& [label, count] : true_sizes) same_true += pairs(count);
    const std::int64_t fp = same_pred - tp;
    const std::int64_t fn = same_true - tp;

    PairwiseScore score;
    score.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
    score.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 1.0;
    score.f = score.precision + score.recall > 0.0
                  ? 2.0 * score.precision * score.recall / (score.precision + score.recall)
                  : 0.0;
    return score;
}

std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weight) {
    const int rows = static_cast<int>(weight.rows());
    const int cols = static_cast<int>(weight.cols());
    if (rows == 0 || cols == 0) return std::vector<int>(static_cast<std::size_t>(rows), -1);
    if ((weight.array() < 0.0).any()) {
        throw std::invalid_argument("max_weight_assignment: negative weights");
    }

    // Pad to square; the zero-cost padding models "leave unmatched".
    const int n = std::max(rows, cols);
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n, n);
    cost.topLeftCorner(rows, cols) = -weight;
    std::vector<int> match = min_cost_assignment(cost);

    match.resize(static_cast<std::size_t>(rows));
    for (int i = 0; i < rows; ++i) {
        if (match[static_cast<std::size_t>(i)] >= cols) match[static_cast<std::size_t>(i)] = -1;
    }
    return match;
}

DerBreakdown der(const MeetingScript& reference, const std::vector<LabeledSegment>& hypothesis) {
    reference.validate();
    const double duration = reference.total_duration_seconds;
    for (const LabeledSegment& seg : hypothesis) {
        if (seg.onset < 0.0 || !(seg.duration > 0.0) ||
            seg.onset + seg.duration > duration + 1e-9) {
            throw std::invalid_argument("der: hypothesis segment outside the meeting");
        }
    }

    const int num_frames = static_cast<int>(std::llround(duration / kFrameSeconds));
    const int num_ref = static_cast<int>(reference.speakers.size());

    std::map<std::string, int> hyp_index;
    for (const LabeledSegment& seg : hypothesis) {
        hyp_index.emplace(seg.speaker, static_cast<int>(hyp_index.size()));
    }
    const int num_hyp = static_cast<int>(hyp_index.size());

    // Frame activity by midpoint membership.
    auto mark = [&](std::vector<std::vector<char>>& active, int row, double onset, double dur) {
        const int first = std::max(0, static_cast<int>(std::ceil(onset / kFrameSeconds - 0.5)));
        const int last =
            std::min(num_frames - 1,
                     static_cast<int>(std::floor((onset + dur) / kFrameSeconds - 0.5)));
        for (int f = first; f <= last; ++f) active[static_cast<std::size_t>(row)][static_cast<std::size_t>(f)] = 1;
    };

    std::vector<std::vector<char>> ref_active(
        static_cast<std::size_t>(num_ref), std::vector<char>(static_cast<std::size_t>(num_frames), 0));
    std::map<std::string, int> ref_index;
    for (int s = 0; s < num_ref; ++s) ref_index[reference.speakers[static_cast<std::size_t>(s)]] = s;
    for (const Turn& t : reference.turns) {
        mark(ref_active, ref_index.at(t.speaker), t.onset, t.duration);
    }
    std::vector<std::vector<char>> hyp_active(
        static_cast<std::size_t>(num_hyp), std::vector<char>(static_cast<std::size_t>(num_frames), 0));
    for (const LabeledSegment& seg : hypothesis) {
        mark(hyp_active, hyp_index.at(seg.speaker), seg.onset, seg.duration);
    }

    std::int64_t ref_speech = 0;
    for (const auto& row : ref_active) ref_speech += std::count(row.begin(), row.end(), 1);
    if (ref_speech == 0) throw std::invalid_argument("der: reference has no speech");

    // Optimal one-to-one speaker mapping by overlap time.
    std::vector<int> matched_hyp(static_cast<std::size_t>(num_ref), -1);
    if (num_hyp > 0) {
        Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(num_ref, num_hyp);
        for (int r = 0; r < num_ref; ++r) {
            for (int h = 0; h < num_hyp; ++h) {
                std::int64_t frames = 0;
                for (int f = 0; f < num_frames; ++f) {
                    frames += ref_active[static_cast<std::size_t>(r)][static_cast<std::size_t>(f)] &
                              hyp_active[static_cast<std::size_t>(h)][static_cast<std::size_t>(f)];
                }
                overlap(r, h) = static_cast<double>(frames);
            }
        }
        matched_hyp = max_weight_assignment(overlap);
    }
    std::vector<int> hyp_to_ref(static_cast<std::size_t>(num_hyp), -1);
    for (int r = 0; r < num_ref; ++r) {
        if (matched_hyp[static_cast<std::size_t>(r)] >= 0) {
            hyp_to_ref[static_cast<std::size_t>(matched_hyp[static_cast<std::size_t>(r)])] = r;
        }
    }

    std::int64_t miss = 0, fa = 0, confusion = 0;
    for (int f = 0; f < num_frames; ++f) {
        int nref = 0, nhyp = 0, ncorrect = 0;
        for (int r = 0; r < num_ref; ++r) {
            nref += ref_active[static_cast<std::size_t>(r)][static_cast<std::size_t>(f)];
        }
        for (int h = 0; h < num_hyp; ++h) {
            const bool on = hyp_active[static_cast<std::size_t>(h)][static_cast<std::size_t>(f)];
            nhyp += on;
            const int r = hyp_to_ref[static_cast<std::size_t>(h)];
            if (on && r >= 0 &&
                ref_active[static_cast<std::size_t>(r)][static_cast<std::size_t>(f)]) {
                ++ncorrect;
            }
        }
        miss += std::max(0, nref - nhyp);
        fa += std::max(0, nhyp - nref);
        confusion += std::min(nref, nhyp) - ncorrect;
    }

    DerBreakdown out;
    const double denom = static_cast<double>(ref_speech);
    out.miss = static_cast<double>(miss) / denom;
    out.false_alarm = static_cast<double>(fa) / denom;
    out.confusion = static_cast<double>(confusion) / denom;
    out.der = static_cast<double>(miss + fa + confusion) / denom;
    return out;
}

std::string to_json(const EvalReport& report) {
    nlohmann::json j;
    j["count_accuracy"] = report.count_accuracy;
    j["precision"] = report.precision;
    j["recall"] = report.recall;
    j["f_score"] = report.f_score;
    j["der"] = report.der;
    j["miss"] = report.miss;
    j["false_alarm"] = report.false_alarm;
    j["confusion"] = report.confusion;
    j["trials"] = report.trials;
    return j.dump(2) + "\n";
}

}  // namespace commdiar
