#pragma once

#include <optional>
#include <string>
#include <vector>

namespace perfgen::notes {

struct ScoreNote {
    std::string id;
    double onset_beats = 0.0;
    double duration_beats = 0.0;
    int pitch = 0; // 0-127
    int voice = 1; // >= 1
};

/// Score-side note list, sorted by (onset_beats, pitch), ids unique.
struct NoteArray {
    std::vector<ScoreNote> notes;

    size_t size() const { return notes.size(); }

    /// Sorts and checks all invariants; throws ValidationError on violation.
    void finalize();
};

struct PerfNote {
    std::string id;
    double onset_sec = 0.0;
    double duration_sec = 0.0;
    int pitch = 60;   // 0-127; needed to emit MIDI and paint piano rolls
    int velocity = 0; // 1-127
};

struct PedalEvent {
    double time_sec = 0.0;
    int value = 0; // 0-127
};

/// Performed note events plus pedal streams. Notes keep event order;
/// pedal events are sorted by time. Only the sustain pedal (CC64) feeds
/// the performance codec; sostenuto/soft are carried for the piano-roll
/// representation.
struct Performance {
    std::vector<PerfNote> notes;
    std::vector<PedalEvent> pedal_events;     // sustain, CC64
    std::vector<PedalEvent> sostenuto_events; // CC66
    std::vector<PedalEvent> soft_events;      // CC67

    void finalize(); // sorts pedal streams, checks invariants
};

struct AlignmentPair {
    std::string score_id;
    std::optional<std::string> perf_id; // absent = deleted note
};

struct Alignment {
    std::vector<AlignmentPair> pairs;

    /// Passes iff the pairs' score_ids equal the score's id set exactly and
    /// every present perf_id is unique. Throws ValidationError otherwise.
    void validate(const NoteArray& score) const;
};

/// Score notes sharing one notated onset position.
struct OnsetGroup {
    double onset_beats = 0.0;
    std::vector<std::string> note_ids;
    std::vector<size_t> note_indices; // indices into NoteArray::notes
};

/// Tolerance under which two score onsets count as the same joint onset.
inline constexpr double kOnsetToleranceBeats = 1e-9;

/// Partitions the score into joint onsets. Groups are strictly increasing
/// by onset; every note lands in exactly one group.
std::vector<OnsetGroup> joint_onsets(const NoteArray& score);

// -- file I/O ---------------------------------------------------------------

/// Score CSV, header: id,onset_beats,duration_beats,pitch,voice.
/// Empty id fields are synthesized from the row index.
NoteArray load_score(const std::string& path);
void save_score(const NoteArray& score, const std::string& path);

/// Alignment CSV, header: score_id,perf_id (empty perf_id = unmatched).
Alignment load_alignment(const std::string& path);
void save_alignment(const Alignment& align, const std::string& path);

/// Standard MIDI File (format 0 or 1). Note ids are synthesized as
/// "p{index}" in note-on order. Unterminated note-ons are dropped;
/// the count is reported through `warnings` when non-null.
Performance load_performance(const std::string& path,
                             std::vector<std::string>* warnings = nullptr);

/// Writes a format-0 SMF at 480 ticks per quarter, fixed 120 BPM
/// (960 ticks/second). Times on that grid survive a write/read round trip
/// exactly.
void save_performance(const Performance& perf, const std::string& path);

} // namespace perfgen::notes
