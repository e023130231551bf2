#pragma once

#include "perfgen/notes.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace perfgen::codecs {

/// Dense row-major matrix of doubles, codec-sized (rows = parameters,
/// cols = notes).
struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), v(size_t(r) * c, fill) {}
    double& at(int r, int c) { return v[size_t(r) * cols + c]; }
    double at(int r, int c) const { return v[size_t(r) * cols + c]; }
};

/// Performance codec: one column per score note, five expression parameters.
/// `mask` is true where the value came from a real performed note and false
/// where it was filled for an unmatched score note.
struct PCodec {
    enum Row { kBeatPeriod = 0, kVelocity, kTiming, kArticulation, kPedal };
    static constexpr int kRows = 5;

    Mat m; // 5 x n
    std::vector<std::string> note_ids;
    std::vector<uint8_t> mask;

    int size() const { return m.cols; }
    void check() const; // throws ValidationError on invariant violation
};

/// Score codec: onset (beats), duration (beats), pitch, voice per note,
/// columns in score sort order.
struct SCodec {
    enum Row { kOnset = 0, kDuration, kPitch, kVoice };
    static constexpr int kRows = 4;

    Mat m; // 4 x n
    std::vector<std::string> note_ids;

    int size() const { return m.cols; }
};

/// Perceptual-features codec: seven mid-level features broadcast per note.
struct CCodec {
    static constexpr int kRows = 7;

    Mat m; // 7 x n
    std::vector<std::string> note_ids;

    int size() const { return m.cols; }
};

inline constexpr std::array<const char*, 7> kFeatureNames = {
    "melodiousness",    "articulation", "rhythm_complexity", "rhythm_stability",
    "dissonance",       "tonal_stability", "minorness"};

struct FeatureWindow {
    double start_sec = 0.0;
    double end_sec = 0.0;
    std::array<double, 7> values{};
};
using FeatureWindows = std::vector<FeatureWindow>;

/// Fixed-width training window over the three codecs. Columns past the real
/// note count are zero with pad_mask false.
struct Segment {
    PCodec p;
    SCodec s;
    CCodec c;
    std::vector<uint8_t> pad_mask; // true = real column
    size_t start_col = 0;          // offset into the source codecs

    int width() const { return p.size(); }
};

// -- extraction and inversion -------------------------------------------------

/// Extracts the per-note performance parameters from an aligned performance.
/// Requires at least two joint onsets with a matched note (beat period needs
/// one inter-onset interval). Performed notes absent from the alignment are
/// ignored; a note is appended to `warnings` when that happens.
PCodec extract_p_codec(const notes::NoteArray& score, const notes::Performance& perf,
                       const notes::Alignment& align,
                       std::vector<std::string>* warnings = nullptr);

/// Reconstructs performed events from (p, s). Notes come back sorted by onset
/// with ids "p{rank}"; `out_align` (optional) receives the score-id -> perf-id
/// mapping. Sustain events are emitted at note onsets where the encoded pedal
/// value changes.
notes::Performance invert_p_codec(const PCodec& p, const SCodec& s, double start_sec = 0.0,
                                  notes::Alignment* out_align = nullptr);

/// Per-column performed onset seconds implied by (p, s); the same positions
/// invert_p_codec assigns. Used to place notes inside feature windows.
std::vector<double> implied_onsets(const PCodec& p, const SCodec& s, double start_sec = 0.0);

SCodec build_s_codec(const notes::NoteArray& score);

/// Broadcasts windowed features onto notes: each note takes the mean of all
/// windows whose [start, end) contains its performed onset, or the nearest
/// window when none does.
CCodec broadcast_c_codec(const FeatureWindows& windows, const PCodec& p, const SCodec& s,
                         const std::vector<double>& perf_onsets);

// -- segmentation and augmentation --------------------------------------------

std::vector<Segment> segment(const PCodec& p, const SCodec& s, const CCodec& c, int width = 200);

/// Re-concatenates the real (pad_mask true) columns of consecutive segments.
void concat_segments(const std::vector<Segment>& segs, PCodec& p, SCodec& s, CCodec& c);

/// Convex interpolation of two interpretations of the same score segment:
/// lambda * first + (1 - lambda) * second, applied to both codec pairs.
std::pair<PCodec, CCodec> mixup(const PCodec& x1, const PCodec& x2, const CCodec& c1,
                                const CCodec& c2, double lambda);

// -- file formats --------------------------------------------------------------

void save_p_codec(const PCodec& p, const std::string& path);
PCodec load_p_codec(const std::string& path);
void save_s_codec(const SCodec& s, const std::string& path);
SCodec load_s_codec(const std::string& path);
void save_c_codec(const CCodec& c, const std::string& path);
CCodec load_c_codec(const std::string& path);
FeatureWindows load_feature_windows(const std::string& path);
void save_feature_windows(const FeatureWindows& w, const std::string& path);

} // namespace perfgen::codecs
