#include "perfgen/codecs.hpp"

#include "perfgen/common.hpp"
#include "perfgen/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace perfgen::codecs {

namespace {

/// Step function over (time, value) events: value of the last event at or
/// before t, or 0 before the first event.
int sample_step(const std::vector<notes::PedalEvent>& events, double t) {
    int value = 0;
    for (const auto& e : events) {
        if (e.time_sec > t) break;
        value = e.value;
    }
    return value;
}

int round_half_away(double x) {
    return static_cast<int>(std::llround(x)); // llround rounds halfway away from zero
}

/// Clusters the score-codec onset row into joint onsets, mirroring
/// notes::joint_onsets. Returns, per column, its group index.
std::vector<int> group_columns(const SCodec& s, std::vector<double>* group_onsets) {
    std::vector<int> of_col(s.size(), 0);
    for (int i = 0; i < s.size(); ++i) {
        const double onset = s.m.at(SCodec::kOnset, i);
        if (i == 0 || onset - group_onsets->back() > notes::kOnsetToleranceBeats) {
            group_onsets->push_back(onset);
        }
        of_col[i] = static_cast<int>(group_onsets->size()) - 1;
    }
    return of_col;
}

} // namespace

void PCodec::check() const {
    if (m.rows != kRows) throw ValidationError("p_codec must have 5 rows");
    if (note_ids.size() != size_t(m.cols) || mask.size() != size_t(m.cols))
        throw ValidationError("p_codec ids/mask size mismatch");
    for (int i = 0; i < m.cols; ++i) {
        for (int r = 0; r < kRows; ++r)
            if (!std::isfinite(m.at(r, i)))
                throw ValidationError("non-finite p_codec value at column " + std::to_string(i));
        if (m.at(kBeatPeriod, i) <= 0.0)
            throw ValidationError("non-positive beat period at column " + std::to_string(i));
        if (m.at(kArticulation, i) <= 0.0)
            throw ValidationError("non-positive articulation at column " + std::to_string(i));
        if (m.at(kVelocity, i) < 0.0 || m.at(kVelocity, i) > 1.0)
            throw ValidationError("velocity out of [0,1] at column " + std::to_string(i));
        if (m.at(kPedal, i) < 0.0 || m.at(kPedal, i) > 1.0)
            throw ValidationError("pedal out of [0,1] at column " + std::to_string(i));
    }
}

PCodec extract_p_codec(const notes::NoteArray& score, const notes::Performance& perf,
                       const notes::Alignment& align, std::vector<std::string>* warnings) {
    align.validate(score);
    const auto groups = notes::joint_onsets(score);
    const int n = static_cast<int>(score.size());

    std::unordered_map<std::string, const notes::PerfNote*> perf_by_id;
    for (const auto& pn : perf.notes) perf_by_id[pn.id] = &pn;

    std::unordered_map<std::string, int> col_of_id;
    for (int i = 0; i < n; ++i) col_of_id[score.notes[i].id] = i;

    std::vector<const notes::PerfNote*> matched(n, nullptr);
    std::unordered_set<std::string> used_perf_ids;
    for (const auto& pr : align.pairs) {
        if (!pr.perf_id) continue;
        auto it = perf_by_id.find(*pr.perf_id);
        if (it == perf_by_id.end())
            throw ValidationError("alignment references unknown performance id '" + *pr.perf_id +
                                  "'");
        matched[col_of_id.at(pr.score_id)] = it->second;
        used_perf_ids.insert(*pr.perf_id);
    }
    if (warnings && used_perf_ids.size() < perf.notes.size()) {
        std::ostringstream os;
        os << "ignoring " << (perf.notes.size() - used_perf_ids.size())
           << " performed note(s) with no score counterpart";
        warnings->push_back(os.str());
    }

    const int ng = static_cast<int>(groups.size());
    std::vector<double> mean_onset(ng, 0.0);
    std::vector<bool> has(ng, false);
    std::vector<double> group_vel01(ng, 0.0);
    for (int k = 0; k < ng; ++k) {
        double sum = 0.0, vsum = 0.0;
        int count = 0;
        for (size_t idx : groups[k].note_indices) {
            if (const auto* pn = matched[idx]) {
                sum += pn->onset_sec;
                vsum += pn->velocity / 127.0;
                ++count;
            }
        }
        if (count > 0) {
            has[k] = true;
            mean_onset[k] = sum / count;
            group_vel01[k] = vsum / count;
        }
    }

    std::vector<int> matched_groups;
    for (int k = 0; k < ng; ++k)
        if (has[k]) matched_groups.push_back(k);
    if (matched_groups.size() < 2)
        throw ValidationError("insufficient onsets for beat period");

    // beat period per group: the IOI ratio between consecutive matched joint
    // onsets, spread across the groups of that span; last span copies its
    // predecessor, leading unmatched groups take the first span's value
    std::vector<double> bp(ng, 0.0);
    for (size_t j = 0; j + 1 < matched_groups.size(); ++j) {
        const int a = matched_groups[j];
        const int b = matched_groups[j + 1];
        const double span_bp = (mean_onset[b] - mean_onset[a]) /
                               (groups[b].onset_beats - groups[a].onset_beats);
        if (span_bp <= 0.0) {
            std::ostringstream os;
            os << "non-positive beat period between joint onsets at beats "
               << groups[a].onset_beats << " and " << groups[b].onset_beats;
            throw ValidationError(os.str());
        }
        for (int k = a; k < b; ++k) bp[k] = span_bp;
    }
    for (int k = 0; k < matched_groups.front(); ++k) bp[k] = bp[matched_groups.front()];
    for (int k = matched_groups.back(); k < ng; ++k) bp[k] = bp[matched_groups.back() - 1];

    PCodec p;
    p.m = Mat(PCodec::kRows, n);
    p.note_ids.resize(n);
    p.mask.assign(n, 0);
    for (int i = 0; i < n; ++i) p.note_ids[i] = score.notes[i].id;

    double carry_pedal = 0.0;
    for (int k = 0; k < ng; ++k) {
        for (size_t idx : groups[k].note_indices) {
            const int i = static_cast<int>(idx);
            const auto& sn = score.notes[i];
            p.m.at(PCodec::kBeatPeriod, i) = bp[k];
            if (const auto* pn = matched[i]) {
                p.m.at(PCodec::kVelocity, i) = pn->velocity / 127.0;
                p.m.at(PCodec::kTiming, i) = mean_onset[k] - pn->onset_sec;
                p.m.at(PCodec::kArticulation, i) =
                    pn->duration_sec / (sn.duration_beats * bp[k]);
                p.m.at(PCodec::kPedal, i) =
                    sample_step(perf.pedal_events, pn->onset_sec) / 127.0;
                p.mask[i] = 1;
            } else {
                // filled column: neutral expression, quantized so the values
                // survive the integer MIDI round trip unchanged
                const double vel01 = has[k] ? group_vel01[k] : 0.5;
                p.m.at(PCodec::kVelocity, i) =
                    std::clamp(round_half_away(127.0 * vel01), 1, 127) / 127.0;
                p.m.at(PCodec::kTiming, i) = 0.0;
                p.m.at(PCodec::kArticulation, i) = 1.0;
                p.m.at(PCodec::kPedal, i) =
                    has[k] ? sample_step(perf.pedal_events, mean_onset[k]) / 127.0
                           : carry_pedal;
            }
            carry_pedal = p.m.at(PCodec::kPedal, i);
        }
    }
    p.check();
    return p;
}

std::vector<double> implied_onsets(const PCodec& p, const SCodec& s, double start_sec) {
    if (p.size() != s.size()) throw ValidationError("p_codec and s_codec sizes differ");
    std::vector<double> group_onsets;
    const auto of_col = group_columns(s, &group_onsets);
    const int ng = static_cast<int>(group_onsets.size());

    // shared beat period per group comes from its first column
    std::vector<double> bp(ng, 0.0);
    for (int i = s.size() - 1; i >= 0; --i) bp[of_col[i]] = p.m.at(PCodec::kBeatPeriod, i);
    std::vector<double> o_hat(ng, start_sec);
    for (int k = 0; k + 1 < ng; ++k) {
        if (bp[k] <= 0.0)
            throw ValidationError("non-positive beat_period in group " + std::to_string(k));
        o_hat[k + 1] = o_hat[k] + bp[k] * (group_onsets[k + 1] - group_onsets[k]);
    }

    std::vector<double> onsets(s.size());
    for (int i = 0; i < s.size(); ++i)
        onsets[i] = o_hat[of_col[i]] - p.m.at(PCodec::kTiming, i);
    return onsets;
}

notes::Performance invert_p_codec(const PCodec& p, const SCodec& s, double start_sec,
                                  notes::Alignment* out_align) {
    p.check();
    const auto onsets = implied_onsets(p, s, start_sec);

    const int n = p.size();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return onsets[a] < onsets[b]; });

    notes::Performance perf;
    perf.notes.resize(n);
    std::vector<std::string> id_of_col(n);
    for (int rank = 0; rank < n; ++rank) {
        const int i = order[rank];
        notes::PerfNote pn;
        pn.id = "p" + std::to_string(rank);
        pn.onset_sec = onsets[i];
        pn.duration_sec = p.m.at(PCodec::kArticulation, i) * s.m.at(SCodec::kDuration, i) *
                          p.m.at(PCodec::kBeatPeriod, i);
        pn.pitch = static_cast<int>(std::lround(s.m.at(SCodec::kPitch, i)));
        pn.velocity = std::clamp(round_half_away(127.0 * p.m.at(PCodec::kVelocity, i)), 1, 127);
        perf.notes[rank] = std::move(pn);
        id_of_col[i] = perf.notes[rank].id;
    }

    // one sustain event per onset where the encoded value changes
    int last_value = -1;
    for (int rank = 0; rank < n; ++rank) {
        const int i = order[rank];
        const int value =
            std::clamp(round_half_away(127.0 * p.m.at(PCodec::kPedal, i)), 0, 127);
        if (value != last_value) {
            perf.pedal_events.push_back({onsets[i], value});
            last_value = value;
        }
    }

    if (out_align) {
        out_align->pairs.clear();
        for (int i = 0; i < n; ++i)
            out_align->pairs.push_back({p.note_ids[i], id_of_col[i]});
    }
    perf.finalize();
    return perf;
}

SCodec build_s_codec(const notes::NoteArray& score) {
    if (score.notes.empty()) throw ValidationError("score has no notes");
    SCodec s;
    const int n = static_cast<int>(score.size());
    s.m = Mat(SCodec::kRows, n);
    s.note_ids.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto& sn = score.notes[i];
        s.note_ids[i] = sn.id;
        s.m.at(SCodec::kOnset, i) = sn.onset_beats;
        s.m.at(SCodec::kDuration, i) = sn.duration_beats;
        s.m.at(SCodec::kPitch, i) = sn.pitch;
        s.m.at(SCodec::kVoice, i) = sn.voice;
    }
    return s;
}

CCodec broadcast_c_codec(const FeatureWindows& windows, const PCodec& p, const SCodec& s,
                         const std::vector<double>& perf_onsets) {
    if (windows.empty()) throw ValidationError("feature windows are empty");
    if (p.size() != s.size() || perf_onsets.size() != size_t(p.size()))
        throw ValidationError("broadcast_c_codec: codec sizes differ");

    CCodec c;
    c.m = Mat(CCodec::kRows, p.size());
    c.note_ids = p.note_ids;
    for (int i = 0; i < p.size(); ++i) {
        const double t = perf_onsets[i];
        int covering = 0;
        std::array<double, 7> acc{};
        for (const auto& w : windows) {
            if (t >= w.start_sec && t < w.end_sec) {
                for (int r = 0; r < 7; ++r) acc[r] += w.values[r];
                ++covering;
            }
        }
        if (covering == 0) {
            // nearest window by distance to the interval
            double best = std::numeric_limits<double>::infinity();
            const FeatureWindow* nearest = &windows.front();
            for (const auto& w : windows) {
                const double d = t < w.start_sec ? w.start_sec - t
                                                 : (t >= w.end_sec ? t - w.end_sec : 0.0);
                if (d < best) {
                    best = d;
                    nearest = &w;
                }
            }
            acc = nearest->values;
            covering = 1;
        }
        for (int r = 0; r < 7; ++r) c.m.at(r, i) = acc[r] / covering;
    }
    return c;
}

std::vector<Segment> segment(const PCodec& p, const SCodec& s, const CCodec& c, int width) {
    if (width <= 0) throw ValidationError("segment width must be positive");
    const int n = p.size();
    if (s.size() != n || c.size() != n)
        throw ValidationError("segment: codec sizes differ");

    std::vector<Segment> out;
    for (int start = 0; start < n; start += width) {
        Segment seg;
        seg.start_col = static_cast<size_t>(start);
        seg.p.m = Mat(PCodec::kRows, width);
        seg.s.m = Mat(SCodec::kRows, width);
        seg.c.m = Mat(CCodec::kRows, width);
        seg.p.note_ids.assign(width, "");
        seg.p.mask.assign(width, 0);
        seg.s.note_ids.assign(width, "");
        seg.c.note_ids.assign(width, "");
        seg.pad_mask.assign(width, 0);
        for (int j = 0; j < width && start + j < n; ++j) {
            const int i = start + j;
            for (int r = 0; r < PCodec::kRows; ++r) seg.p.m.at(r, j) = p.m.at(r, i);
            for (int r = 0; r < SCodec::kRows; ++r) seg.s.m.at(r, j) = s.m.at(r, i);
            for (int r = 0; r < CCodec::kRows; ++r) seg.c.m.at(r, j) = c.m.at(r, i);
            seg.p.note_ids[j] = p.note_ids[i];
            seg.p.mask[j] = p.mask[i];
            seg.s.note_ids[j] = s.note_ids[i];
            seg.c.note_ids[j] = c.note_ids[i];
            seg.pad_mask[j] = 1;
        }
        out.push_back(std::move(seg));
    }
    return out;
}

void concat_segments(const std::vector<Segment>& segs, PCodec& p, SCodec& s, CCodec& c) {
    int n = 0;
    for (const auto& seg : segs)
        for (uint8_t real : seg.pad_mask) n += real ? 1 : 0;
    p.m = Mat(PCodec::kRows, n);
    s.m = Mat(SCodec::kRows, n);
    c.m = Mat(CCodec::kRows, n);
    p.note_ids.assign(n, "");
    p.mask.assign(n, 0);
    s.note_ids.assign(n, "");
    c.note_ids.assign(n, "");
    int i = 0;
    for (const auto& seg : segs) {
        for (int j = 0; j < seg.width(); ++j) {
            if (!seg.pad_mask[j]) continue;
            for (int r = 0; r < PCodec::kRows; ++r) p.m.at(r, i) = seg.p.m.at(r, j);
            for (int r = 0; r < SCodec::kRows; ++r) s.m.at(r, i) = seg.s.m.at(r, j);
            for (int r = 0; r < CCodec::kRows; ++r) c.m.at(r, i) = seg.c.m.at(r, j);
            p.note_ids[i] = seg.p.note_ids[j];
            p.mask[i] = seg.p.mask[j];
            s.note_ids[i] = seg.s.note_ids[j];
            c.note_ids[i] = seg.c.note_ids[j];
            ++i;
        }
    }
}

std::pair<PCodec, CCodec> mixup(const PCodec& x1, const PCodec& x2, const CCodec& c1,
                                const CCodec& c2, double lambda) {
    if (lambda < 0.0 || lambda > 1.0) throw ValidationError("mixup lambda must be in [0,1]");
    if (x1.note_ids != x2.note_ids || c1.note_ids != c2.note_ids ||
        x1.size() != c1.size())
        throw ValidationError("mixup requires two interpretations of the same score segment");

    PCodec p = x1;
    CCodec c = c1;
    for (size_t i = 0; i < p.m.v.size(); ++i)
        p.m.v[i] = lambda * x1.m.v[i] + (1.0 - lambda) * x2.m.v[i];
    for (size_t i = 0; i < c.m.v.size(); ++i)
        c.m.v[i] = lambda * c1.m.v[i] + (1.0 - lambda) * c2.m.v[i];
    for (size_t i = 0; i < p.mask.size(); ++i) p.mask[i] = x1.mask[i] && x2.mask[i];
    return {std::move(p), std::move(c)};
}

// -- CSV ------------------------------------------------------------------------

void save_p_codec(const PCodec& p, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < p.size(); ++i)
        rows.push_back({p.note_ids[i], csv::format_double(p.m.at(0, i)),
                        csv::format_double(p.m.at(1, i)), csv::format_double(p.m.at(2, i)),
                        csv::format_double(p.m.at(3, i)), csv::format_double(p.m.at(4, i)),
                        p.mask[i] ? "1" : "0"});
    csv::write_file(path,
                    {"note_id", "beat_period", "velocity", "timing", "articulation", "pedal",
                     "mask"},
                    rows);
}

PCodec load_p_codec(const std::string& path) {
    auto t = csv::read_file(path);
    csv::require_header(
        t, {"note_id", "beat_period", "velocity", "timing", "articulation", "pedal", "mask"},
        path);
    PCodec p;
    const int n = static_cast<int>(t.rows.size());
    p.m = Mat(PCodec::kRows, n);
    p.note_ids.resize(n);
    p.mask.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto& row = t.rows[i];
        const size_t line = i + 2;
        if (row.size() != 7)
            throw ValidationError(path + ": wrong field count at row " + std::to_string(line));
        p.note_ids[i] = row[0];
        for (int r = 0; r < 5; ++r) p.m.at(r, i) = csv::parse_double(row[r + 1], path, line);
        p.mask[i] = csv::parse_long(row[6], path, line) != 0;
    }
    p.check();
    return p;
}

void save_s_codec(const SCodec& s, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < s.size(); ++i)
        rows.push_back({s.note_ids[i], csv::format_double(s.m.at(0, i)),
                        csv::format_double(s.m.at(1, i)), csv::format_double(s.m.at(2, i)),
                        csv::format_double(s.m.at(3, i))});
    csv::write_file(path, {"note_id", "onset_beats", "duration_beats", "pitch", "voice"}, rows);
}

SCodec load_s_codec(const std::string& path) {
    auto t = csv::read_file(path);
    csv::require_header(t, {"note_id", "onset_beats", "duration_beats", "pitch", "voice"}, path);
    SCodec s;
    const int n = static_cast<int>(t.rows.size());
    s.m = Mat(SCodec::kRows, n);
    s.note_ids.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto& row = t.rows[i];
        const size_t line = i + 2;
        if (row.size() != 5)
            throw ValidationError(path + ": wrong field count at row " + std::to_string(line));
        s.note_ids[i] = row[0];
        for (int r = 0; r < 4; ++r) s.m.at(r, i) = csv::parse_double(row[r + 1], path, line);
    }
    return s;
}

void save_c_codec(const CCodec& c, const std::string& path) {
    std::vector<std::string> header{"note_id"};
    for (const char* f : kFeatureNames) header.push_back(f);
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < c.size(); ++i) {
        std::vector<std::string> row{c.note_ids[i]};
        for (int r = 0; r < 7; ++r) row.push_back(csv::format_double(c.m.at(r, i)));
        rows.push_back(std::move(row));
    }
    csv::write_file(path, header, rows);
}

CCodec load_c_codec(const std::string& path) {
    auto t = csv::read_file(path);
    std::vector<std::string> header{"note_id"};
    for (const char* f : kFeatureNames) header.push_back(f);
    csv::require_header(t, header, path);
    CCodec c;
    const int n = static_cast<int>(t.rows.size());
    c.m = Mat(CCodec::kRows, n);
    c.note_ids.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto& row = t.rows[i];
        const size_t line = i + 2;
        if (row.size() != 8)
            throw ValidationError(path + ": wrong field count at row " + std::to_string(line));
        c.note_ids[i] = row[0];
        for (int r = 0; r < 7; ++r) c.m.at(r, i) = csv::parse_double(row[r + 1], path, line);
    }
    return c;
}

FeatureWindows load_feature_windows(const std::string& path) {
    auto t = csv::read_file(path);
    std::vector<std::string> header{"start_sec", "end_sec"};
    for (const char* f : kFeatureNames) header.push_back(f);
    csv::require_header(t, header, path);
    FeatureWindows w;
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const size_t line = i + 2;
        if (row.size() != 9)
            throw ValidationError(path + ": wrong field count at row " + std::to_string(line));
        FeatureWindow fw;
        fw.start_sec = csv::parse_double(row[0], path, line);
        fw.end_sec = csv::parse_double(row[1], path, line);
        for (int r = 0; r < 7; ++r) fw.values[r] = csv::parse_double(row[r + 2], path, line);
        w.push_back(fw);
    }
    std::stable_sort(w.begin(), w.end(),
                     [](const FeatureWindow& a, const FeatureWindow& b) {
                         return a.start_sec < b.start_sec;
                     });
    return w;
}

void save_feature_windows(const FeatureWindows& w, const std::string& path) {
    std::vector<std::string> header{"start_sec", "end_sec"};
    for (const char* f : kFeatureNames) header.push_back(f);
    std::vector<std::vector<std::string>> rows;
    for (const auto& fw : w) {
        std::vector<std::string> row{csv::format_double(fw.start_sec),
                                     csv::format_double(fw.end_sec)};
        for (int r = 0; r < 7; ++r) row.push_back(csv::format_double(fw.values[r]));
        rows.push_back(std::move(row));
    }
    csv::write_file(path, header, rows);
}

} // namespace perfgen::codecs
