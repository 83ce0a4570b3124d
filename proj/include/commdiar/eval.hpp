#pragma once

#include <string>
#include <vector>

#include "commdiar/io.hpp"
#include "commdiar/types.hpp"

namespace commdiar {

// Fraction of trials whose predicted speaker count matches the true count.
double count_accuracy(const std::vector<int>& predicted_counts,
                      const std::vector<int>& true_counts);

struct PairwiseScore {
    double precision = 1.0;
    double recall = 1.0;
    double f = 1.0;
};

// Clustering F1 over all unordered segment pairs: a pair is a true positive
// when both sides place it in one cluster. 0/0 counts as 1.0 for precision
// and recall (e.g. all-singleton partitions on both sides).
PairwiseScore pairwise_f_score(const Partition& predicted, const std::vector<int>& truth);

// Maximum-weight one-to-one assignment (Hungarian method, O(n^3)) on a
// rectangular nonnegative weight matrix. Returns the matched column per row,
// -1 where a row stays unmatched.
std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weight);

struct DerBreakdown {
    double der = 0.0;
    double miss = 0.0;         // fractions of reference speech time
    double false_alarm = 0.0;
    double confusion = 0.0;
};

// Diarization error rate at 10 ms frames: reference and hypothesis speakers
// are matched one-to-one by maximum overlap time, then every frame charges
// max(0, #ref - #hyp) miss, max(0, #hyp - #ref) false alarm, and
// min(#ref, #hyp) - #matched-correct confusion. Overlap regions count
// multiply; there is no forgiveness collar.
DerBreakdown der(const MeetingScript& reference, const std::vector<LabeledSegment>& hypothesis);

struct EvalReport {
    double count_accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f_score = 0.0;
    double der = 0.0;
    double miss = 0.0;
    double false_alarm = 0.0;
    double confusion = 0.0;
    int trials = 0;
};

// Fixed-field-name JSON (count_accuracy, precision, recall, f_score, der,
// miss, false_alarm, confusion, trials).
std::string to_json(const EvalReport& report);

}  // namespace commdiar
