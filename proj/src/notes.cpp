#include "perfgen/notes.hpp"

#include "perfgen/common.hpp"
#include "perfgen/csv.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace perfgen::notes {

void NoteArray::finalize() {
    if (notes.empty()) throw ValidationError("score has no notes");
    std::stable_sort(notes.begin(), notes.end(), [](const ScoreNote& a, const ScoreNote& b) {
        if (a.onset_beats != b.onset_beats) return a.onset_beats < b.onset_beats;
        return a.pitch < b.pitch;
    });
    std::unordered_set<std::string> seen;
    for (const auto& n : notes) {
        if (!seen.insert(n.id).second)
            throw ValidationError("duplicate score note id '" + n.id + "'");
        if (n.onset_beats < 0.0)
            throw ValidationError("negative onset for note '" + n.id + "'");
        if (n.duration_beats <= 0.0)
            throw ValidationError("non-positive duration for note '" + n.id + "'");
        if (n.pitch < 0 || n.pitch > 127)
            throw ValidationError("pitch out of range for note '" + n.id + "'");
        if (n.voice < 1) throw ValidationError("voice must be >= 1 for note '" + n.id + "'");
    }
}

void Performance::finalize() {
    std::unordered_set<std::string> seen;
    for (const auto& n : notes) {
        if (!seen.insert(n.id).second)
            throw ValidationError("duplicate performance note id '" + n.id + "'");
        if (n.onset_sec < 0.0)
            throw ValidationError("negative onset for performed note '" + n.id + "'");
        if (n.duration_sec <= 0.0)
            throw ValidationError("non-positive duration for performed note '" + n.id + "'");
        if (n.velocity < 1 || n.velocity > 127)
            throw ValidationError("velocity out of range for performed note '" + n.id + "'");
    }
    auto by_time = [](const PedalEvent& a, const PedalEvent& b) { return a.time_sec < b.time_sec; };
    std::stable_sort(pedal_events.begin(), pedal_events.end(), by_time);
    std::stable_sort(sostenuto_events.begin(), sostenuto_events.end(), by_time);
    std::stable_sort(soft_events.begin(), soft_events.end(), by_time);
}

void Alignment::validate(const NoteArray& score) const {
    std::unordered_set<std::string> score_ids;
    for (const auto& n : score.notes) score_ids.insert(n.id);
    std::unordered_set<std::string> seen_score, seen_perf;
    for (const auto& p : pairs) {
        if (!score_ids.count(p.score_id))
            throw ValidationError("alignment references unknown score id '" + p.score_id + "'");
        if (!seen_score.insert(p.score_id).second)
            throw ValidationError("alignment lists score id '" + p.score_id + "' twice");
        if (p.perf_id && !seen_perf.insert(*p.perf_id).second)
            throw ValidationError("alignment lists performance id '" + *p.perf_id + "' twice");
    }
    if (seen_score.size() != score_ids.size())
        throw ValidationError("alignment does not cover every score note");
}

std::vector<OnsetGroup> joint_onsets(const NoteArray& score) {
    std::vector<OnsetGroup> groups;
    for (size_t i = 0; i < score.notes.size(); ++i) {
        const auto& n = score.notes[i];
        if (groups.empty() || n.onset_beats - groups.back().onset_beats > kOnsetToleranceBeats) {
            OnsetGroup g;
            g.onset_beats = n.onset_beats;
            groups.push_back(g);
        }
        groups.back().note_ids.push_back(n.id);
        groups.back().note_indices.push_back(i);
    }
    return groups;
}

NoteArray load_score(const std::string& path) {
    auto t = csv::read_file(path);
    csv::require_header(t, {"id", "onset_beats", "duration_beats", "pitch", "voice"}, path);
    NoteArray score;
    for (size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const size_t line = r + 2; // 1-based, after header
        if (row.size() != 5) {
            std::ostringstream os;
            os << path << ": parse error at row " << line << ": expected 5 fields, got "
               << row.size();
            throw ValidationError(os.str());
        }
        ScoreNote n;
        n.id = row[0].empty() ? std::to_string(r) : row[0];
        n.onset_beats = csv::parse_double(row[1], path, line);
        n.duration_beats = csv::parse_double(row[2], path, line);
        n.pitch = static_cast<int>(csv::parse_long(row[3], path, line));
        n.voice = static_cast<int>(csv::parse_long(row[4], path, line));
        if (n.duration_beats <= 0.0) {
            std::ostringstream os;
            os << path << ": non-positive duration at row " << line;
            throw ValidationError(os.str());
        }
        score.notes.push_back(std::move(n));
    }
    score.finalize();
    return score;
}

void save_score(const NoteArray& score, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(score.notes.size());
    for (const auto& n : score.notes)
        rows.push_back({n.id, csv::format_double(n.onset_beats), csv::format_double(n.duration_beats),
                        std::to_string(n.pitch), std::to_string(n.voice)});
    csv::write_file(path, {"id", "onset_beats", "duration_beats", "pitch", "voice"}, rows);
}

Alignment load_alignment(const std::string& path) {
    auto t = csv::read_file(path);
    csv::require_header(t, {"score_id", "perf_id"}, path);
    Alignment a;
    for (size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        if (row.empty() || row[0].empty()) {
            std::ostringstream os;
            os << path << ": parse error at row " << (r + 2) << ": missing score_id";
            throw ValidationError(os.str());
        }
        AlignmentPair p;
        p.score_id = row[0];
        if (row.size() > 1 && !row[1].empty()) p.perf_id = row[1];
        a.pairs.push_back(std::move(p));
    }
    return a;
}

void save_alignment(const Alignment& align, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(align.pairs.size());
    for (const auto& p : align.pairs)
        rows.push_back({p.score_id, p.perf_id ? *p.perf_id : ""});
    csv::write_file(path, {"score_id", "perf_id"}, rows);
}

} // namespace perfgen::notes
