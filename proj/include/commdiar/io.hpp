#pragma once

#include <string>
#include <vector>

#include "commdiar/types.hpp"

namespace commdiar {

enum class EmbeddingFormat { csv, raw_f32 };

// CSV: header `id,t0,dur,e0,e1,...`, one segment per row. A file whose dur
// column is all zero is read back with times absent.
// raw-f32: 16-byte header (magic "EMBF", version, N, D as 32-bit LE unsigned)
// followed by N*D little-endian float32 in row-major order. No times.
EmbeddingSet load_embeddings(const std::string& path, EmbeddingFormat format);
void save_embeddings(const EmbeddingSet& embeddings, const std::string& path, EmbeddingFormat format);

// Guess format from the extension (.csv vs anything else -> raw-f32).
EmbeddingFormat format_from_path(const std::string& path);

/// One hypothesis or reference speech segment with a speaker label.
struct LabeledSegment {
    std::string speaker;
    double onset = 0.0;
    double duration = 0.0;
};

// Writes one `SPEAKER <file-id> 1 <onset> <dur> <NA> <NA> spk<community> <NA> <NA>`
// line per segment, onset/dur with 3 decimal places. Requires times.
void save_partition_rttm(const Partition& partition, const EmbeddingSet& embeddings,
                         const std::string& path, const std::string& file_id = "meeting");

// Reference RTTM straight from a script's turns, same line format, speaker
// labels taken verbatim.
void save_script_rttm(const MeetingScript& script, const std::string& path,
                      const std::string& file_id = "meeting");

std::vector<LabeledSegment> load_rttm(const std::string& path);

void save_meeting_script(const MeetingScript& script, const std::string& path);
MeetingScript load_meeting_script(const std::string& path);

}  // namespace commdiar
