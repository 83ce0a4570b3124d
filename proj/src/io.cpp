#include "commdiar/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace commdiar {

namespace {

constexpr std::uint32_t kRawMagic = 0x46424d45u;  // "EMBF" little-endian
constexpr std::uint32_t kRawVersion = 1u;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

float parse_float_strict(const std::string& s, const std::string& what, std::size_t row) {
    std::size_t pos = 0;
    float v;
    try {
        v = std::stof(s, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error("csv: cannot parse " + what + " at row " + std::to_string(row) +
                                 " ('" + s + "')");
    }
    if (pos != s.size()) {
        throw std::runtime_error("csv: trailing characters in " + what + " at row " + std::to_string(row));
    }
    if (!std::isfinite(v)) {
        throw std::runtime_error("csv: non-finite " + what + " at row " + std::to_string(row));
    }
    return v;
}

EmbeddingSet load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    auto header = split_csv_line(line);
    if (header.size() < 4 || header[0] != "id" || header[1] != "t0" || header[2] != "dur") {
        throw std::runtime_error("csv: malformed header in " + path +
                                 " (expected id,t0,dur,e0,...)");
    }
    for (std::size_t j = 3; j < header.size(); ++j) {
        if (header[j] != "e" + std::to_string(j - 3)) {
            throw std::runtime_error("csv: malformed header column '" + header[j] + "' in " + path);
        }
    }
    const std::size_t dim = header.size() - 3;

    std::vector<std::string> ids;
    std::vector<SegmentTime> times;
    std::vector<float> values;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw std::runtime_error("csv: row " + std::to_string(row) + " has " +
                                     std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(header.size()));
        }
        ids.push_back(fields[0]);
        SegmentTime t;
        t.onset = parse_float_strict(fields[1], "t0", row);
        t.duration = parse_float_strict(fields[2], "dur", row);
        times.push_back(t);
        for (std::size_t j = 3; j < fields.size(); ++j) {
            values.push_back(parse_float_strict(fields[j], "e" + std::to_string(j - 3), row));
        }
    }
    if (row == 0) throw std::runtime_error("csv: no data rows in " + path);

    EmbeddingSet set;
    set.vectors.resize(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(dim));
    std::memcpy(set.vectors.data(), values.data(), values.size() * sizeof(float));
    set.segment_ids = std::move(ids);

    bool any_time = false;
    for (const auto& t : times) {
        if (t.onset != 0.0 || t.duration != 0.0) { any_time = true; break; }
    }
    if (any_time) set.times = std::move(times);

    set.validate();
    return set;
}

void save_csv(const EmbeddingSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "id,t0,dur";
    for (Eigen::Index j = 0; j < set.dim(); ++j) out << ",e" << j;
    out << "\n";
    char buf[64];
    for (Eigen::Index i = 0; i < set.num_rows(); ++i) {
        out << set.segment_ids[static_cast<std::size_t>(i)];
        const SegmentTime t = set.times ? (*set.times)[static_cast<std::size_t>(i)] : SegmentTime{};
        std::snprintf(buf, sizeof(buf), ",%.6f,%.6f", t.onset, t.duration);
        out << buf;
        for (Eigen::Index j = 0; j < set.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), ",%.9g", static_cast<double>(set.vectors(i, j)));
            out << buf;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

EmbeddingSet load_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::array<std::uint32_t, 4> header{};
    in.read(reinterpret_cast<char*>(header.data()), sizeof(header));
    if (in.gcount() != sizeof(header)) throw std::runtime_error("raw-f32: truncated header in " + path);
    if (header[0] != kRawMagic) throw std::runtime_error("raw-f32: bad magic in " + path);
    if (header[1] != kRawVersion) {
        throw std::runtime_error("raw-f32: unsupported version " + std::to_string(header[1]));
    }
    const std::uint64_t n = header[2];
    const std::uint64_t d = header[3];
    if (n < 1 || d < 1) throw std::runtime_error("raw-f32: header claims empty matrix in " + path);

    EmbeddingSet set;
    set.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    const std::streamsize payload = static_cast<std::streamsize>(n * d * sizeof(float));
    in.read(reinterpret_cast<char*>(set.vectors.data()), payload);
    if (in.gcount() != payload) {
        throw std::runtime_error("raw-f32: payload truncated in " + path + " (header claims N=" +
                                 std::to_string(n) + " D=" + std::to_string(d) + ")");
    }
    char extra;
    if (in.read(&extra, 1)) throw std::runtime_error("raw-f32: trailing bytes in " + path);

    if (!set.vectors.allFinite()) {
        for (Eigen::Index i = 0; i < set.vectors.rows(); ++i) {
            if (!set.vectors.row(i).allFinite()) {
                throw std::runtime_error("raw-f32: non-finite entry at row " + std::to_string(i));
            }
        }
    }
    set.segment_ids.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) set.segment_ids.push_back("seg" + std::to_string(i));
    set.validate();
    return set;
}

void save_raw(const EmbeddingSet& set, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    const std::array<std::uint32_t, 4> header{kRawMagic, kRawVersion,
                                              static_cast<std::uint32_t>(set.num_rows()),
                                              static_cast<std::uint32_t>(set.dim())};
    out.write(reinterpret_cast<const char*>(header.data()), sizeof(header));
    out.write(reinterpret_cast<const char*>(set.vectors.data()),
              static_cast<std::streamsize>(sizeof(float)) * set.num_rows() * set.dim());
    if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace

EmbeddingSet load_embeddings(const std::string& path, EmbeddingFormat format) {
    return format == EmbeddingFormat::csv ? load_csv(path) : load_raw(path);
}

void save_embeddings(const EmbeddingSet& embeddings, const std::string& path, EmbeddingFormat format) {
    embeddings.validate();
    if (format == EmbeddingFormat::csv) {
        save_csv(embeddings, path);
    } else {
        save_raw(embeddings, path);
    }
}

EmbeddingFormat format_from_path(const std::string& path) {
    if (path.size() >= 4) {
        std::string ext = path.substr(path.size() - 4);
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".csv") return EmbeddingFormat::csv;
    }
    return EmbeddingFormat::raw_f32;
}

void save_partition_rttm(const Partition& partition, const EmbeddingSet& embeddings,
                         const std::string& path, const std::string& file_id) {
    embeddings.validate();
    partition.validate(static_cast<std::size_t>(embeddings.num_rows()));
    if (!embeddings.times) {
        throw std::invalid_argument("save_partition_rttm: embeddings carry no segment times");
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char buf[256];
    for (Eigen::Index i = 0; i < embeddings.num_rows(); ++i) {
        const auto& t = (*embeddings.times)[static_cast<std::size_t>(i)];
        std::snprintf(buf, sizeof(buf), "SPEAKER %s 1 %.3f %.3f <NA> <NA> spk%d <NA> <NA>\n",
                      file_id.c_str(), t.onset, t.duration,
                      partition.assignment[static_cast<std::size_t>(i)]);
        out << buf;
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

void save_script_rttm(const MeetingScript& script, const std::string& path,
                      const std::string& file_id) {
    script.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char buf[256];
    for (const auto& turn : script.turns) {
        std::snprintf(buf, sizeof(buf), "SPEAKER %s 1 %.3f %.3f <NA> <NA> %s <NA> <NA>\n",
                      file_id.c_str(), turn.onset, turn.duration, turn.speaker.c_str());
        out << buf;
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<LabeledSegment> load_rttm(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<LabeledSegment> segments;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == ';') continue;
        std::stringstream ss(line);
        std::vector<std::string> fields;
        std::string f;
        while (ss >> f) fields.push_back(f);
        if (fields.empty()) continue;
        if (fields[0] != "SPEAKER") continue;
        if (fields.size() < 8) {
            throw std::runtime_error("rttm: short SPEAKER line " + std::to_string(lineno) + " in " + path);
        }
        LabeledSegment seg;
        try {
            seg.onset = std::stod(fields[3]);
            seg.duration = std::stod(fields[4]);
        } catch (const std::exception&) {
            throw std::runtime_error("rttm: bad onset/duration at line " + std::to_string(lineno));
        }
        seg.speaker = fields[7];
        if (!(seg.duration > 0.0)) {
            throw std::runtime_error("rttm: non-positive duration at line " + std::to_string(lineno));
        }
        segments.push_back(seg);
    }
    return segments;
}

void save_meeting_script(const MeetingScript& script, const std::string& path) {
    script.validate();
    nlohmann::json j;
    j["speakers"] = script.speakers;
    j["total_duration_seconds"] = script.total_duration_seconds;
    auto& turns = j["turns"] = nlohmann::json::array();
    for (const auto& t : script.turns) {
        turns.push_back({{"speaker", t.speaker}, {"onset", t.onset}, {"duration", t.duration}});
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

MeetingScript load_meeting_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("script json: parse error in " + path + ": " + e.what());
    }
    MeetingScript script;
    try {
        script.speakers = j.at("speakers").get<std::vector<std::string>>();
        script.total_duration_seconds = j.at("total_duration_seconds").get<double>();
        for (const auto& t : j.at("turns")) {
            script.turns.push_back(Turn{t.at("speaker").get<std::string>(), t.at("onset").get<double>(),
                                        t.at("duration").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("script json: missing or mistyped field in " + path + ": " + e.what());
    }
    script.validate();
    return script;
}

}  // namespace commdiar
