#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "perfgen/common.hpp"
#include "perfgen/csv.hpp"
#include "perfgen/notes.hpp"
#include "testutil.hpp"

#include <cstdint>
#include <fstream>

using namespace perfgen;
using namespace perfgen::notes;

namespace {

void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

// minimal format-0 file: 480 ppq, default tempo, events = (delta, bytes...)
std::vector<uint8_t> midi_file(const std::vector<uint8_t>& track_events) {
    std::vector<uint8_t> b = {'M', 'T', 'h', 'd', 0, 0, 0, 6, 0, 0, 0, 1, 0x01, 0xE0};
    std::vector<uint8_t> track = track_events;
    track.insert(track.end(), {0x00, 0xFF, 0x2F, 0x00});
    b.insert(b.end(), {'M', 'T', 'r', 'k'});
    const uint32_t len = static_cast<uint32_t>(track.size());
    b.push_back(len >> 24);
    b.push_back(len >> 16);
    b.push_back(len >> 8);
    b.push_back(len);
    b.insert(b.end(), track.begin(), track.end());
    return b;
}

} // namespace

TEST_CASE("score CSV: chord loads and groups to one onset") {
    testutil::TempDir tmp("notes");
    const auto path = tmp.file("score.csv");
    std::ofstream(path) << "id,onset_beats,duration_beats,pitch,voice\n"
                           "a,0,1,60,1\n"
                           "b,0,1,64,1\n"
                           "c,0,1,67,1\n"
                           "d,0,1,72,1\n";
    auto score = load_score(path);
    CHECK(score.size() == 4);
    auto groups = joint_onsets(score);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].note_ids.size() == 4);
}

TEST_CASE("score CSV: rows out of order come back sorted by (onset, pitch)") {
    testutil::TempDir tmp("notes");
    const auto path = tmp.file("score.csv");
    std::ofstream(path) << "id,onset_beats,duration_beats,pitch,voice\n"
                           "x,2,1,60,1\n"
                           "y,0,1,72,1\n"
                           "z,0,1,60,1\n";
    auto score = load_score(path);
    CHECK(score.notes[0].id == "z");
    CHECK(score.notes[1].id == "y");
    CHECK(score.notes[2].id == "x");
}

TEST_CASE("score CSV: zero duration is rejected with the row number") {
    testutil::TempDir tmp("notes");
    const auto path = tmp.file("score.csv");
    std::ofstream(path) << "id,onset_beats,duration_beats,pitch,voice\n"
                           "a,0,1,60,1\n"
                           "b,1,0,62,1\n";
    CHECK_THROWS_WITH_AS(load_score(path), doctest::Contains("non-positive duration at row 3"),
                         ValidationError);
}

TEST_CASE("score CSV: duplicate ids rejected") {
    testutil::TempDir tmp("notes");
    const auto path = tmp.file("score.csv");
    std::ofstream(path) << "id,onset_beats,duration_beats,pitch,voice\n"
                           "a,0,1,60,1\n"
                           "a,1,1,62,1\n";
    CHECK_THROWS_AS(load_score(path), ValidationError);
}

TEST_CASE("joint_onsets partitions") {
    NoteArray score;
    for (int i = 0; i < 3; ++i)
        score.notes.push_back({"a" + std::to_string(i), 0.0, 1.0, 60 + i, 1});
    for (int i = 0; i < 2; ++i)
        score.notes.push_back({"b" + std::to_string(i), 1.0, 1.0, 60 + i, 1});
    score.finalize();
    auto groups = joint_onsets(score);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].note_ids.size() == 3);
    CHECK(groups[1].note_ids.size() == 2);

    SUBCASE("all-distinct onsets give singletons") {
        NoteArray s2;
        for (int i = 0; i < 5; ++i)
            s2.notes.push_back({"n" + std::to_string(i), i * 0.5, 1.0, 60, 1});
        s2.finalize();
        CHECK(joint_onsets(s2).size() == 5);
    }
    SUBCASE("sub-tolerance offsets merge") {
        NoteArray s2;
        s2.notes.push_back({"n0", 0.0, 1.0, 60, 1});
        s2.notes.push_back({"n1", 1e-12, 1.0, 64, 1});
        s2.finalize();
        CHECK(joint_onsets(s2).size() == 1);
    }
}

TEST_CASE("joint_onsets is a partition on random scores") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto score = testutil::make_score(rng, 5 + int(rng.uniform_int(0, 60)));
        auto groups = joint_onsets(score);
        size_t total = 0;
        double prev = -1.0;
        for (const auto& g : groups) {
            CHECK(g.onset_beats > prev);
            prev = g.onset_beats;
            total += g.note_ids.size();
        }
        CHECK(total == score.size());
    }
}

TEST_CASE("alignment validation") {
    NoteArray score;
    score.notes.push_back({"a", 0.0, 1.0, 60, 1});
    score.notes.push_back({"b", 1.0, 1.0, 62, 1});
    score.finalize();

    Alignment ok;
    ok.pairs = {{"a", "p0"}, {"b", std::nullopt}};
    CHECK_NOTHROW(ok.validate(score));

    Alignment missing;
    missing.pairs = {{"a", "p0"}};
    CHECK_THROWS_AS(missing.validate(score), ValidationError);

    Alignment dup;
    dup.pairs = {{"a", "p0"}, {"b", "p0"}};
    CHECK_THROWS_AS(dup.validate(score), ValidationError);

    Alignment unknown;
    unknown.pairs = {{"a", "p0"}, {"q", "p1"}};
    CHECK_THROWS_AS(unknown.validate(score), ValidationError);
}

TEST_CASE("MIDI: one note pairs into onset/duration/velocity") {
    testutil::TempDir tmp("midi");
    const auto path = tmp.file("one.mid");
    // C4 on at tick 0 vel 64, off at tick 960 (1.0 s at 480ppq/120bpm)
    write_bytes(path, midi_file({0x00, 0x90, 60, 64, 0x87, 0x40, 0x80, 60, 0}));
    auto perf = load_performance(path);
    REQUIRE(perf.notes.size() == 1);
    CHECK(perf.notes[0].onset_sec == doctest::Approx(0.0));
    CHECK(perf.notes[0].duration_sec == doctest::Approx(1.0));
    CHECK(perf.notes[0].velocity == 64);
    CHECK(perf.notes[0].pitch == 60);
    CHECK(perf.notes[0].id == "p0");
}

TEST_CASE("MIDI: CC64 becomes a pedal event") {
    testutil::TempDir tmp("midi");
    const auto path = tmp.file("cc.mid");
    // CC64=127 at tick 480 (0.5 s); one note so the file is non-trivial
    write_bytes(path, midi_file({0x00, 0x90, 60, 64, 0x83, 0x60, 0xB0, 64, 127, 0x83, 0x60,
                                 0x80, 60, 0}));
    auto perf = load_performance(path);
    REQUIRE(perf.pedal_events.size() == 1);
    CHECK(perf.pedal_events[0].time_sec == doctest::Approx(0.5));
    CHECK(perf.pedal_events[0].value == 127);
}

TEST_CASE("MIDI: note-on with velocity 0 acts as note-off (running status)") {
    testutil::TempDir tmp("midi");
    const auto path = tmp.file("vel0.mid");
    // 0x90 60 64, then running-status (no status byte) 60 0 after 960 ticks
    write_bytes(path, midi_file({0x00, 0x90, 60, 64, 0x87, 0x40, 60, 0}));
    auto perf = load_performance(path);
    REQUIRE(perf.notes.size() == 1);
    CHECK(perf.notes[0].duration_sec == doctest::Approx(1.0));
}

TEST_CASE("MIDI: unterminated note is dropped with a warning") {
    testutil::TempDir tmp("midi");
    const auto path = tmp.file("open.mid");
    write_bytes(path, midi_file({0x00, 0x90, 60, 64, 0x00, 0x90, 62, 70, 0x87, 0x40, 0x80, 62, 0}));
    std::vector<std::string> warnings;
    auto perf = load_performance(path, &warnings);
    REQUIRE(perf.notes.size() == 1);
    CHECK(perf.notes[0].pitch == 62);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("dropped 1") != std::string::npos);
}

TEST_CASE("MIDI: tempo change shifts seconds") {
    testutil::TempDir tmp("midi");
    const auto path = tmp.file("tempo.mid");
    // tempo 1s/quarter from tick 0; note on at tick 480 => 1.0 s
    write_bytes(path, midi_file({0x00, 0xFF, 0x51, 0x03, 0x0F, 0x42, 0x40, 0x83, 0x60, 0x90, 60,
                                 64, 0x83, 0x60, 0x80, 60, 0}));
    auto perf = load_performance(path);
    REQUIRE(perf.notes.size() == 1);
    CHECK(perf.notes[0].onset_sec == doctest::Approx(1.0));
}

TEST_CASE("MIDI: malformed files raise") {
    testutil::TempDir tmp("midi");
    const auto bad = tmp.file("bad.mid");
    write_bytes(bad, {'n', 'o', 't', 'm', 'i', 'd', 'i'});
    CHECK_THROWS_AS(load_performance(bad), ValidationError);

    const auto trunc = tmp.file("trunc.mid");
    auto full = midi_file({0x00, 0x90, 60, 64, 0x87, 0x40, 0x80, 60, 0});
    full.resize(full.size() - 4);
    write_bytes(trunc, full);
    CHECK_THROWS_AS(load_performance(trunc), ValidationError);
}

TEST_CASE("load-serialize-load identity on score and performance") {
    Rng rng(42);
    testutil::TempDir tmp("roundtrip");
    for (int trial = 0; trial < 10; ++trial) {
        auto score = testutil::make_score(rng, 5 + int(rng.uniform_int(0, 40)));
        const auto spath = tmp.file("s.csv");
        save_score(score, spath);
        auto score2 = load_score(spath);
        REQUIRE(score2.size() == score.size());
        for (size_t i = 0; i < score.size(); ++i) {
            CHECK(score2.notes[i].id == score.notes[i].id);
            CHECK(score2.notes[i].onset_beats == score.notes[i].onset_beats);
            CHECK(score2.notes[i].duration_beats == score.notes[i].duration_beats);
            CHECK(score2.notes[i].pitch == score.notes[i].pitch);
            CHECK(score2.notes[i].voice == score.notes[i].voice);
        }

        auto pair = testutil::make_performance(rng, score, 0.0);
        const auto mpath = tmp.file("p.mid");
        save_performance(pair.perf, mpath);
        auto perf2 = load_performance(mpath);
        REQUIRE(perf2.notes.size() == pair.perf.notes.size());
        for (size_t i = 0; i < perf2.notes.size(); ++i) {
            CHECK(perf2.notes[i].id == pair.perf.notes[i].id);
            CHECK(perf2.notes[i].onset_sec ==
                  doctest::Approx(pair.perf.notes[i].onset_sec).epsilon(1e-12));
            CHECK(perf2.notes[i].duration_sec ==
                  doctest::Approx(pair.perf.notes[i].duration_sec).epsilon(1e-12));
            CHECK(perf2.notes[i].velocity == pair.perf.notes[i].velocity);
            CHECK(perf2.notes[i].pitch == pair.perf.notes[i].pitch);
        }
        REQUIRE(perf2.pedal_events.size() == pair.perf.pedal_events.size());
        for (size_t i = 0; i < perf2.pedal_events.size(); ++i) {
            CHECK(perf2.pedal_events[i].time_sec ==
                  doctest::Approx(pair.perf.pedal_events[i].time_sec).epsilon(1e-12));
            CHECK(perf2.pedal_events[i].value == pair.perf.pedal_events[i].value);
        }
    }
}

TEST_CASE("alignment CSV round trip") {
    testutil::TempDir tmp("align");
    Alignment a;
    a.pairs = {{"a", "p0"}, {"b", std::nullopt}, {"c", "p1"}};
    const auto path = tmp.file("a.csv");
    save_alignment(a, path);
    auto b = load_alignment(path);
    REQUIRE(b.pairs.size() == 3);
    CHECK(b.pairs[0].perf_id == "p0");
    CHECK(!b.pairs[1].perf_id);
    CHECK(b.pairs[2].perf_id == "p1");
}
