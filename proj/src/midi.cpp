#include "perfgen/common.hpp"
#include "perfgen/notes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace perfgen::notes {

namespace {

constexpr int kWritePpq = 480;      // ticks per quarter
constexpr int kWriteTempo = 500000; // us per quarter (120 BPM)
constexpr double kWriteTicksPerSec = kWritePpq * 1e6 / kWriteTempo; // 960

struct RawEvent {
    int64_t tick = 0;
    int kind = 0; // 0 = tempo/cc, 1 = note-off, 2 = note-on
    int channel = 0;
    int data1 = 0; // pitch or controller (or -1 for tempo)
    int data2 = 0; // velocity or controller value
    int tempo_us = 0;
};

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ValidationError("cannot open MIDI file: " + path);
        bytes_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }

    Performance parse(std::vector<std::string>* warnings) {
        if (bytes_.size() < 14 || read_str(0, 4) != "MThd")
            throw ValidationError(path_ + ": not a Standard MIDI File (missing MThd)");
        const uint32_t hlen = read_u32(4);
        const int format = read_u16(8);
        const int ntrks = read_u16(10);
        const int division = read_u16(12);
        if (format != 0 && format != 1)
            throw ValidationError(path_ + ": unsupported MIDI format " + std::to_string(format));
        if (division & 0x8000)
            throw ValidationError(path_ + ": SMPTE time division is not supported");
        if (division == 0) throw ValidationError(path_ + ": zero time division");

        size_t pos = 8 + hlen;
        std::vector<RawEvent> events;
        for (int trk = 0; trk < ntrks; ++trk) {
            if (pos + 8 > bytes_.size())
                throw ValidationError(path_ + ": truncated track header");
            if (read_str(pos, 4) != "MTrk")
                throw ValidationError(path_ + ": bad track chunk magic");
            const uint32_t tlen = read_u32(pos + 4);
            const size_t begin = pos + 8;
            const size_t end = begin + tlen;
            if (end > bytes_.size()) throw ValidationError(path_ + ": truncated track data");
            parse_track(begin, end, events);
            pos = end;
        }

        // merge tracks on absolute tick; offs sort before ons at equal ticks
        std::stable_sort(events.begin(), events.end(), [](const RawEvent& a, const RawEvent& b) {
            if (a.tick != b.tick) return a.tick < b.tick;
            return a.kind < b.kind;
        });
        return build(events, division, warnings);
    }

private:
    void parse_track(size_t pos, size_t end, std::vector<RawEvent>& events) {
        int64_t tick = 0;
        uint8_t running = 0;
        while (pos < end) {
            tick += read_vlq(pos, end);
            if (pos >= end) break;
            uint8_t status = bytes_[pos];
            if (status & 0x80) {
                ++pos;
            } else {
                if (!(running & 0x80))
                    throw ValidationError(path_ + ": running status without prior status byte");
                status = running;
            }
            if (status == 0xFF) { // meta
                if (pos >= end) throw ValidationError(path_ + ": truncated meta event");
                const uint8_t type = bytes_[pos++];
                const uint32_t len = read_vlq(pos, end);
                if (pos + len > end) throw ValidationError(path_ + ": truncated meta payload");
                if (type == 0x51 && len == 3) {
                    RawEvent e;
                    e.tick = tick;
                    e.kind = 0;
                    e.data1 = -1;
                    e.tempo_us = (bytes_[pos] << 16) | (bytes_[pos + 1] << 8) | bytes_[pos + 2];
                    events.push_back(e);
                }
                pos += len;
                running = 0;
            } else if (status == 0xF0 || status == 0xF7) { // sysex
                const uint32_t len = read_vlq(pos, end);
                if (pos + len > end) throw ValidationError(path_ + ": truncated sysex");
                pos += len;
                running = 0;
            } else {
                running = status;
                const int type = status & 0xF0;
                const int nargs = (type == 0xC0 || type == 0xD0) ? 1 : 2;
                if (pos + nargs > end) throw ValidationError(path_ + ": truncated channel event");
                const int d1 = bytes_[pos];
                const int d2 = nargs == 2 ? bytes_[pos + 1] : 0;
                pos += nargs;
                RawEvent e;
                e.tick = tick;
                e.channel = status & 0x0F;
                e.data1 = d1;
                e.data2 = d2;
                if (type == 0x90 && d2 > 0) {
                    e.kind = 2;
                    events.push_back(e);
                } else if (type == 0x80 || (type == 0x90 && d2 == 0)) {
                    e.kind = 1; // note-on with velocity 0 acts as a note-off
                    events.push_back(e);
                } else if (type == 0xB0 && (d1 == 64 || d1 == 66 || d1 == 67)) {
                    e.kind = 0;
                    events.push_back(e);
                }
            }
        }
    }

    Performance build(const std::vector<RawEvent>& events, int division,
                      std::vector<std::string>* warnings) {
        std::vector<std::pair<int64_t, int>> tempi{{0, 500000}};
        for (const auto& e : events)
            if (e.kind == 0 && e.data1 == -1) tempi.emplace_back(e.tick, e.tempo_us);
        std::stable_sort(tempi.begin(), tempi.end(),
                         [](auto& a, auto& b) { return a.first < b.first; });

        auto tick_to_sec = [&](int64_t tick) {
            double sec = 0.0;
            int64_t prev_tick = 0;
            int tempo = 500000;
            for (const auto& [tt, us] : tempi) {
                if (tt >= tick) break;
                if (tt > prev_tick) {
                    sec += static_cast<double>(tt - prev_tick) * tempo / (1e6 * division);
                    prev_tick = tt;
                }
                tempo = us;
            }
            sec += static_cast<double>(tick - prev_tick) * tempo / (1e6 * division);
            return sec;
        };

        Performance perf;
        std::map<std::pair<int, int>, std::deque<size_t>> open; // (channel,pitch) -> note idx FIFO
        size_t dropped = 0;
        for (const auto& e : events) {
            if (e.kind == 2) {
                PerfNote n;
                n.onset_sec = tick_to_sec(e.tick);
                n.duration_sec = -1.0; // open
                n.pitch = e.data1;
                n.velocity = e.data2;
                open[{e.channel, e.data1}].push_back(perf.notes.size());
                perf.notes.push_back(n);
            } else if (e.kind == 1) {
                auto it = open.find({e.channel, e.data1});
                if (it == open.end() || it->second.empty()) continue; // stray note-off
                const size_t idx = it->second.front();
                it->second.pop_front();
                perf.notes[idx].duration_sec = tick_to_sec(e.tick) - perf.notes[idx].onset_sec;
            } else if (e.data1 >= 0) {
                PedalEvent p{tick_to_sec(e.tick), e.data2};
                if (e.data1 == 64) perf.pedal_events.push_back(p);
                else if (e.data1 == 66) perf.sostenuto_events.push_back(p);
                else perf.soft_events.push_back(p);
            }
        }
        std::vector<PerfNote> kept;
        kept.reserve(perf.notes.size());
        for (auto& n : perf.notes) {
            if (n.duration_sec > 0.0) kept.push_back(std::move(n));
            else ++dropped;
        }
        if (dropped && warnings) {
            std::ostringstream os;
            os << path_ << ": dropped " << dropped << " unterminated or zero-length note(s)";
            warnings->push_back(os.str());
        }
        for (size_t i = 0; i < kept.size(); ++i) kept[i].id = "p" + std::to_string(i);
        perf.notes = std::move(kept);
        perf.finalize();
        return perf;
    }

    std::string read_str(size_t pos, size_t n) const {
        return std::string(bytes_.begin() + pos, bytes_.begin() + pos + n);
    }
    uint32_t read_u32(size_t pos) const {
        return (uint32_t(bytes_[pos]) << 24) | (uint32_t(bytes_[pos + 1]) << 16) |
               (uint32_t(bytes_[pos + 2]) << 8) | bytes_[pos + 3];
    }
    uint16_t read_u16(size_t pos) const {
        return (uint16_t(bytes_[pos]) << 8) | bytes_[pos + 1];
    }
    uint32_t read_vlq(size_t& pos, size_t end) {
        uint32_t v = 0;
        for (int i = 0; i < 5; ++i) {
            if (pos >= end) throw ValidationError(path_ + ": truncated variable-length quantity");
            const uint8_t c = bytes_[pos++];
            v = (v << 7) | (c & 0x7F);
            if (!(c & 0x80)) return v;
        }
        throw ValidationError(path_ + ": overlong variable-length quantity");
    }

    std::string path_;
    std::vector<uint8_t> bytes_;
};

void write_vlq(std::vector<uint8_t>& out, uint32_t v) {
    uint8_t stack[5];
    int n = 0;
    stack[n++] = v & 0x7F;
    v >>= 7;
    while (v) {
        stack[n++] = 0x80 | (v & 0x7F);
        v >>= 7;
    }
    while (n) out.push_back(stack[--n]);
}

} // namespace

Performance load_performance(const std::string& path, std::vector<std::string>* warnings) {
    Reader r(path);
    return r.parse(warnings);
}

void save_performance(const Performance& perf, const std::string& path) {
    struct Out {
        int64_t tick;
        int kind; // 0 = cc, 1 = off, 2 = on
        uint8_t status, d1, d2;
    };
    std::vector<Out> evs;
    auto to_tick = [](double sec) {
        return static_cast<int64_t>(std::llround(sec * kWriteTicksPerSec));
    };
    auto clamp7 = [](int v) { return std::min(127, std::max(0, v)); };

    auto push_cc = [&](const std::vector<PedalEvent>& stream, uint8_t controller) {
        for (const auto& p : stream)
            evs.push_back({to_tick(p.time_sec), 0, 0xB0, controller,
                           static_cast<uint8_t>(clamp7(p.value))});
    };
    push_cc(perf.pedal_events, 64);
    push_cc(perf.sostenuto_events, 66);
    push_cc(perf.soft_events, 67);

    for (const auto& n : perf.notes) {
        const int64_t on = to_tick(n.onset_sec);
        int64_t off = to_tick(n.onset_sec + n.duration_sec);
        if (off <= on) off = on + 1; // keep the note readable on round trip
        const uint8_t pitch = static_cast<uint8_t>(clamp7(n.pitch));
        const uint8_t vel = static_cast<uint8_t>(std::min(127, std::max(1, n.velocity)));
        evs.push_back({on, 2, 0x90, pitch, vel});
        evs.push_back({off, 1, 0x80, pitch, 0});
    }

    // stable: same-tick note-ons keep the caller's note order, so reloaded
    // "p{index}" ids match the order notes were handed in
    std::stable_sort(evs.begin(), evs.end(), [](const Out& a, const Out& b) {
        if (a.tick != b.tick) return a.tick < b.tick;
        return a.kind < b.kind;
    });

    std::vector<uint8_t> track;
    write_vlq(track, 0);
    track.insert(track.end(), {0xFF, 0x51, 0x03});
    track.push_back((kWriteTempo >> 16) & 0xFF);
    track.push_back((kWriteTempo >> 8) & 0xFF);
    track.push_back(kWriteTempo & 0xFF);

    int64_t prev = 0;
    for (const auto& e : evs) {
        write_vlq(track, static_cast<uint32_t>(e.tick - prev));
        prev = e.tick;
        track.push_back(e.status);
        track.push_back(e.d1);
        track.push_back(e.d2);
    }
    write_vlq(track, 0);
    track.insert(track.end(), {0xFF, 0x2F, 0x00});

    std::ofstream outf(path, std::ios::binary);
    if (!outf) throw ValidationError("cannot write MIDI file: " + path);
    auto u32 = [&](uint32_t v) {
        char b[4] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
        outf.write(b, 4);
    };
    auto u16 = [&](uint16_t v) {
        char b[2] = {char(v >> 8), char(v)};
        outf.write(b, 2);
    };
    outf.write("MThd", 4);
    u32(6);
    u16(0);
    u16(1);
    u16(kWritePpq);
    outf.write("MTrk", 4);
    u32(static_cast<uint32_t>(track.size()));
    outf.write(reinterpret_cast<const char*>(track.data()), track.size());
    if (!outf) throw ValidationError("write failed: " + path);
}

} // namespace perfgen::notes
