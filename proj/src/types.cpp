#include "commdiar/types.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace commdiar {

void EmbeddingSet::validate() const {
    const auto n = vectors.rows();
    const auto d = vectors.cols();
    if (n < 1 || d < 1) {
        throw std::invalid_argument("EmbeddingSet: need N >= 1 and D >= 1, got N=" +
                                    std::to_string(n) + " D=" + std::to_string(d));
    }
    if (!vectors.allFinite()) {
        throw std::invalid_argument("EmbeddingSet: non-finite entry in embedding matrix");
    }
    if (static_cast<Eigen::Index>(segment_ids.size()) != n) {
        throw std::invalid_argument("EmbeddingSet: segment_ids length does not match row count");
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : segment_ids) {
        if (!seen.insert(id).second) {
            throw std::invalid_argument("EmbeddingSet: duplicate segment id '" + id + "'");
        }
    }
    if (times) {
        if (static_cast<Eigen::Index>(times->size()) != n) {
            throw std::invalid_argument("EmbeddingSet: times length does not match row count");
        }
        for (std::size_t i = 0; i < times->size(); ++i) {
            const auto& t = (*times)[i];
            if (!(t.duration > 0.0) || !std::isfinite(t.onset) || !std::isfinite(t.duration)) {
                throw std::invalid_argument("EmbeddingSet: invalid time at row " + std::to_string(i));
            }
        }
    }
}

void Partition::validate(std::size_t expected_nodes) const {
    if (assignment.size() != expected_nodes) {
        throw std::invalid_argument("Partition: assignment length " + std::to_string(assignment.size()) +
                                    " does not match node count " + std::to_string(expected_nodes));
    }
    if (num_communities < 1) {
        throw std::invalid_argument("Partition: num_communities must be >= 1");
    }
    std::vector<char> present(static_cast<std::size_t>(num_communities), 0);
    for (int c : assignment) {
        if (c < 0 || c >= num_communities) {
            throw std::invalid_argument("Partition: community index " + std::to_string(c) +
                                        " outside [0, " + std::to_string(num_communities) + ")");
        }
        present[static_cast<std::size_t>(c)] = 1;
    }
    if (std::find(present.begin(), present.end(), 0) != present.end()) {
        throw std::invalid_argument("Partition: empty community index present");
    }
}

namespace {

// Measure of the time where at least `min_active` turns are live.
double measure_with_multiplicity(const std::vector<Turn>& turns, int min_active) {
    std::vector<std::pair<double, int>> events;
    events.reserve(turns.size() * 2);
    for (const auto& t : turns) {
        events.emplace_back(t.onset, +1);
        events.emplace_back(t.onset + t.duration, -1);
    }
    std::sort(events.begin(), events.end());
    double total = 0.0;
    double prev = 0.0;
    int active = 0;
    for (const auto& [time, delta] : events) {
        if (active >= min_active) total += time - prev;
        prev = time;
        active += delta;
    }
    return total;
}

}  // namespace

double MeetingScript::total_speech_seconds() const { return measure_with_multiplicity(turns, 1); }

double MeetingScript::overlapped_speech_seconds() const { return measure_with_multiplicity(turns, 2); }

double MeetingScript::overlap_ratio() const {
    const double speech = total_speech_seconds();
    if (speech <= 0.0) return 0.0;
    return overlapped_speech_seconds() / speech;
}

void MeetingScript::validate() const {
    if (!(total_duration_seconds > 0.0)) {
        throw std::invalid_argument("MeetingScript: total_duration_seconds must be > 0");
    }
    std::unordered_set<std::string> known(speakers.begin(), speakers.end());
    for (std::size_t i = 0; i < turns.size(); ++i) {
        const auto& t = turns[i];
        if (!(t.duration > 0.0)) {
            throw std::invalid_argument("MeetingScript: turn " + std::to_string(i) + " has duration <= 0");
        }
        if (t.onset < 0.0 || t.onset + t.duration > total_duration_seconds + 1e-9) {
            throw std::invalid_argument("MeetingScript: turn " + std::to_string(i) +
                                        " lies outside [0, total_duration]");
        }
        if (!known.count(t.speaker)) {
            throw std::invalid_argument("MeetingScript: turn " + std::to_string(i) +
                                        " references unknown speaker '" + t.speaker + "'");
        }
    }
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RngSeed RngSeed::derive(std::uint64_t counter) const {
    return RngSeed{splitmix64(seed ^ splitmix64(counter + 1))};
}

}  // namespace commdiar
