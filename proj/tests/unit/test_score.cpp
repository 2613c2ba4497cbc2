#include "svs/score.hpp"

#include "support/test_util.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <sstream>

using namespace svs;
using testutil::random_matrix;

#ifndef SVS_SOURCE_DIR
#define SVS_SOURCE_DIR "."
#endif

namespace {

Score single_note_score() {
  std::istringstream is("tempo 120\nkey 0\nnote C4 1 a\n");
  return parse_score(is, "inline");
}

// evenly split alignment used by several cases
StateAlignment even_alignment(const Score& score, std::size_t frames_per_state, int states = 5) {
  StateAlignment align;
  align.states_per_phoneme = states;
  std::size_t cursor = 0;
  auto phonemes = phoneme_sequence(score);
  for (std::size_t p = 0; p < phonemes.size(); ++p)
    for (int s = 1; s <= states; ++s) {
      align.entries.push_back({p, s, cursor, cursor + frames_per_state});
      cursor += frames_per_state;
    }
  return align;
}

}  // namespace

TEST_CASE("parse_score: single note", "[score]") {
  Score s = single_note_score();
  REQUIRE(s.notes.size() == 1);
  CHECK(s.notes[0].pitch == 60);
  CHECK(s.notes[0].beats == 1.0);
  CHECK(s.notes[0].phonemes == std::vector<std::string>{"a"});
  // 1 beat at 120 bpm is half a second
  CHECK(s.notes[0].beats * s.seconds_per_beat() == Catch::Approx(0.5));
}

TEST_CASE("parse_score: pitch names and accidentals", "[score]") {
  std::istringstream is("tempo 100\nnote A4 1 a\nnote F#3 1 i\nnote Bb5 1 u\nnote 72 1 e\n");
  Score s = parse_score(is, "inline");
  CHECK(s.notes[0].pitch == 69);
  CHECK(s.notes[1].pitch == 54);
  CHECK(s.notes[2].pitch == 82);
  CHECK(s.notes[3].pitch == 72);
  CHECK(note_frequency_hz(69) == Catch::Approx(440.0));
}

TEST_CASE("parse_score: errors carry line numbers", "[score]") {
  std::istringstream bad_dur("tempo 120\nnote C4 0 a\n");
  try {
    parse_score(bad_dur, "bad");
    FAIL("expected a duration error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("bad:2") != std::string::npos);
  }
  std::istringstream bad_tok("tempo 120\nnotes C4 1 a\n");
  CHECK_THROWS_AS(parse_score(bad_tok, "bad"), Error);
  std::istringstream no_tempo("note C4 1 a\n");
  CHECK_THROWS_AS(parse_score(no_tempo, "bad"), Error);
}

TEST_CASE("demo score fixture parses with its key preserved", "[score]") {
  Score s = parse_score_file(std::filesystem::path(SVS_SOURCE_DIR) / "data" / "demo.score");
  REQUIRE(s.notes.size() == 3);
  CHECK(s.key == 7);
  CHECK(s.notes[1].is_rest());
  CHECK(s.notes[2].phonemes.size() == 2);
}

TEST_CASE("score round trip through format_score", "[score]") {
  std::istringstream is("tempo 95\nkey 3\nnote C4 0.5 a\nnote R 1\nnote D#4 2 k o\n");
  Score s = parse_score(is, "inline");
  std::istringstream round(format_score(s));
  Score s2 = parse_score(round, "round");
  REQUIRE(s2.notes.size() == s.notes.size());
  CHECK(s2.key == s.key);
  CHECK(s2.notes[2].pitch == s.notes[2].pitch);
  CHECK(s2.notes[2].beats == s.notes[2].beats);
}

TEST_CASE("note_logf0_track: rest interpolation ramps between anchors", "[score]") {
  // A4 for 10 frames, rest for 4 frames, A5 for 10 frames
  std::istringstream is("tempo 120\nnote A4 1 a\nnote R 1\nnote A5 1 a\n");
  Score s = parse_score(is, "inline");
  StateAlignment align;
  align.states_per_phoneme = 1;
  align.entries = {{0, 1, 0, 10}, {1, 1, 10, 14}, {2, 1, 14, 24}};
  auto track = note_logf0_track(s, align);
  const double lo = std::log(440.0), hi = std::log(880.0);
  for (std::size_t t = 0; t < 10; ++t) CHECK(track[t] == Catch::Approx(lo));
  for (std::size_t t = 14; t < 24; ++t) CHECK(track[t] == Catch::Approx(hi));
  // anchors at frames 9 and 14: interpolated values at fractions j/5
  for (std::size_t t = 10; t < 14; ++t)
    CHECK(track[t] == Catch::Approx(lo + (hi - lo) * static_cast<double>(t - 9) / 5.0));
  // continuity: no jump exceeds one interpolation step
  for (std::size_t t = 1; t < 24; ++t)
    CHECK(std::abs(track[t] - track[t - 1]) <= (hi - lo) / 5.0 + 1e-12);
}

TEST_CASE("note_logf0_track: single note and leading rests", "[score]") {
  Score s = single_note_score();
  StateAlignment align = even_alignment(s, 4);
  auto track = note_logf0_track(s, align);
  for (double v : track) CHECK(v == Catch::Approx(std::log(note_frequency_hz(60))));

  std::istringstream is("tempo 120\nnote R 1\nnote A4 1 a\n");
  Score s2 = parse_score(is, "inline");
  StateAlignment align2;
  align2.states_per_phoneme = 1;
  align2.entries = {{0, 1, 0, 6}, {1, 1, 6, 12}};
  auto track2 = note_logf0_track(s2, align2);
  for (std::size_t t = 0; t < 6; ++t) CHECK(track2[t] == Catch::Approx(std::log(440.0)));

  std::istringstream all_rest("tempo 120\nnote R 1\nnote R 1\n");
  Score s3 = parse_score(all_rest, "inline");
  StateAlignment align3;
  align3.states_per_phoneme = 1;
  align3.entries = {{0, 1, 0, 6}, {1, 1, 6, 12}};
  CHECK_THROWS_AS(note_logf0_track(s3, align3), Error);
}

TEST_CASE("encode_context_features: one-hot blocks", "[score]") {
  ContextConfig cfg;
  cfg.inventory = {"sil", "a", "i", "u", "e", "o", "k", "s", "t", "n"};
  cfg.states_per_phoneme = 5;
  Score s = single_note_score();
  StateAlignment align = even_alignment(s, 4);
  Matrix feats = encode_context_features(s, align, cfg);
  REQUIRE(feats.rows() == 5);
  REQUIRE(feats.cols() == cfg.dim());

  // state 3 row: phoneme /a/ current one-hot and state-index bit set
  const std::size_t P = cfg.inventory.size();
  const double* row = feats.row(2);
  CHECK(row[P + 1] == 1.0);          // cur_ph_a
  CHECK(row[3 * P + 2] == 1.0);      // state_3
  CHECK(row[3 * P + 5 + 0] == 1.0);  // key_0
  // no prev/next phoneme: those blocks stay zero
  for (std::size_t i = 0; i < P; ++i) {
    CHECK(row[i] == 0.0);
    CHECK(row[2 * P + i] == 0.0);
  }

  // adjacent states of one phoneme differ only in the state-index block
  for (std::size_t c = 0; c < feats.cols(); ++c) {
    const bool state_block = c >= 3 * P && c < 3 * P + 5;
    if (!state_block) CHECK(feats(0, c) == feats(1, c));
  }

  ContextConfig bad = cfg;
  bad.inventory = {"sil", "x"};
  try {
    encode_context_features(s, align, bad);
    FAIL("expected an unknown-phoneme error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("'a'") != std::string::npos);
  }
}

TEST_CASE("full-scale context layout reproduces the production dimensions", "[score]") {
  ContextConfig cfg = ContextConfig::full_scale();
  CHECK(cfg.binary_dim() == 724);
  CHECK(cfg.numerical_dim() == 122);
  CHECK(cfg.dim() == 846);
  CHECK(cfg.feature_names().size() == 846);

  // instantiate on a real score to confirm the row width
  std::istringstream is("tempo 120\nnote C4 1 p0 p1\n");
  Score s = parse_score(is, "inline");
  StateAlignment align = even_alignment(s, 3);
  Matrix feats = encode_context_features(s, align, cfg);
  CHECK(feats.cols() == 846);
}

TEST_CASE("position features", "[score]") {
  Score s = single_note_score();

  // 4-frame state: relative positions 0, 1/3, 2/3, 1
  StateAlignment align = even_alignment(s, 4);
  Matrix pos = position_features(align);
  CHECK(pos(0, 2) == 0.0);
  CHECK(pos(1, 2) == Catch::Approx(1.0 / 3));
  CHECK(pos(2, 2) == Catch::Approx(2.0 / 3));
  CHECK(pos(3, 2) == 1.0);

  // 1-frame state: forward = backward = 0, relative position 0
  StateAlignment one = even_alignment(s, 1);
  Matrix pos1 = position_features(one);
  CHECK(pos1(0, 0) == 0.0);
  CHECK(pos1(0, 1) == 0.0);
  CHECK(pos1(0, 2) == 0.0);

  // 10-frame state, frame 2: forward 2, backward 7, duration 10
  StateAlignment ten = even_alignment(s, 10);
  Matrix pos10 = position_features(ten);
  CHECK(pos10(2, 0) == 2.0);
  CHECK(pos10(2, 1) == 7.0);
  CHECK(pos10(2, 3) == 10.0);
}

TEST_CASE("position properties over random alignments", "[score]") {
  Rng rng(333);
  Score s = single_note_score();
  for (int iter = 0; iter < 25; ++iter) {
    StateAlignment align;
    align.states_per_phoneme = 5;
    std::size_t cursor = 0;
    for (std::size_t p = 0; p < 1; ++p)
      for (int st = 1; st <= 5; ++st) {
        const std::size_t len = 1 + rng() % 12;
        align.entries.push_back({p, st, cursor, cursor + len});
        cursor += len;
      }
    Matrix pos = position_features(align);
    REQUIRE(pos.rows() == align.total_frames());
    for (std::size_t i = 0; i < align.entries.size(); ++i) {
      const auto& e = align.entries[i];
      for (std::size_t t = e.begin; t < e.end; ++t) {
        CHECK(pos(t, 2) >= 0.0);
        CHECK(pos(t, 2) <= 1.0);
        CHECK(pos(t, 4) >= 0.0);
        CHECK(pos(t, 4) <= 1.0);
        CHECK(pos(t, 0) + pos(t, 1) == Catch::Approx(pos(t, 3) - 1.0));
      }
    }
  }
}

TEST_CASE("expand_to_frames", "[score]") {
  Score s = single_note_score();

  // 2 states of 3 frames each (use a 2-state-per-phoneme alignment)
  StateAlignment align;
  align.states_per_phoneme = 2;
  align.entries = {{0, 1, 0, 3}, {0, 2, 3, 6}};
  Matrix states(2, 2);
  states(0, 0) = 1.0;
  states(0, 1) = 2.0;
  states(1, 0) = 3.0;
  states(1, 1) = 4.0;
  Matrix pos = position_features(align);
  Matrix out = expand_to_frames(states, align, pos);
  REQUIRE(out.rows() == 6);
  REQUIRE(out.cols() == 2 + kPositionDim);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(out(t, 0) == 1.0);
    CHECK(out(t, 1) == 2.0);
  }
  for (std::size_t t = 3; t < 6; ++t) CHECK(out(t, 0) == 3.0);
  // state block identical across a state's rows while positions differ
  CHECK(out(0, 2) != out(1, 2));

  // empty alignment gives an empty matrix
  StateAlignment empty;
  Matrix none = expand_to_frames(Matrix(0, 4), empty, Matrix(0, 0));
  CHECK(none.rows() == 0);

  // count mismatch is an error
  CHECK_THROWS_AS(expand_to_frames(Matrix(3, 2), align, pos), Error);
}

TEST_CASE("expand row count equals alignment frames for random alignments", "[score]") {
  Rng rng(433);
  for (int iter = 0; iter < 20; ++iter) {
    StateAlignment align;
    align.states_per_phoneme = 3;
    const std::size_t phonemes = 1 + rng() % 6;
    std::size_t cursor = 0;
    for (std::size_t p = 0; p < phonemes; ++p)
      for (int st = 1; st <= 3; ++st) {
        const std::size_t len = 1 + rng() % 9;
        align.entries.push_back({p, st, cursor, cursor + len});
        cursor += len;
      }
    Matrix states = random_matrix(rng, align.entries.size(), 4);
    Matrix out = expand_to_frames(states, align, Matrix(align.total_frames(), 0));
    CHECK(out.rows() == align.total_frames());
  }
}

TEST_CASE("normalization: examples and identities", "[score]") {
  Matrix col(3, 1);
  col(0, 0) = 2.0;
  col(1, 0) = 4.0;
  col(2, 0) = 6.0;
  NormalizationStats unit = fit_normalization(std::span<const Matrix>(&col, 1), 0.0, 1.0);
  Matrix n = normalize(col, unit);
  CHECK(n(0, 0) == 0.0);
  CHECK(n(1, 0) == 0.5);
  CHECK(n(2, 0) == 1.0);

  NormalizationStats paper = fit_normalization(std::span<const Matrix>(&col, 1), 0.01, 0.99);
  Matrix n2 = normalize(col, paper);
  CHECK(n2(0, 0) == Catch::Approx(0.01));
  CHECK(n2(1, 0) == Catch::Approx(0.50));
  CHECK(n2(2, 0) == Catch::Approx(0.99));

  Matrix constant(3, 1, 5.0);
  NormalizationStats cs = fit_normalization(std::span<const Matrix>(&constant, 1), 0.0, 1.0);
  Matrix cn = normalize(constant, cs);
  for (std::size_t t = 0; t < 3; ++t) CHECK(cn(t, 0) == 0.5);
  // denormalize maps the constant column back to its original value
  Matrix cd = denormalize(cn, cs);
  for (std::size_t t = 0; t < 3; ++t) CHECK(cd(t, 0) == 5.0);

  // identities on the fitted range, random non-constant data
  Rng rng(533);
  Matrix data = random_matrix(rng, 40, 6, -3.0, 9.0);
  NormalizationStats stats = fit_normalization(std::span<const Matrix>(&data, 1), 0.01, 0.99);
  Matrix back = denormalize(normalize(data, stats), stats);
  for (std::size_t r = 0; r < data.rows(); ++r)
    for (std::size_t c = 0; c < data.cols(); ++c)
      CHECK(back(r, c) == Catch::Approx(data(r, c)).epsilon(1e-12).margin(1e-12));
  Matrix norm = normalize(data, stats);
  Matrix round2 = normalize(denormalize(norm, stats), stats);
  for (std::size_t r = 0; r < data.rows(); ++r)
    for (std::size_t c = 0; c < data.cols(); ++c)
      CHECK(round2(r, c) == Catch::Approx(norm(r, c)).epsilon(1e-12).margin(1e-12));
}

TEST_CASE("alignment validation catches structural errors", "[score]") {
  Score s = single_note_score();
  auto phonemes = phoneme_sequence(s);
  StateAlignment gap;
  gap.states_per_phoneme = 1;
  gap.entries = {{0, 1, 0, 3}};
  CHECK_THROWS_AS(gap.validate(phonemes.size() + 1), Error);

  StateAlignment overlap;
  overlap.states_per_phoneme = 5;
  overlap.entries = {{0, 1, 0, 3}, {0, 2, 2, 6}, {0, 3, 6, 7}, {0, 4, 7, 8}, {0, 5, 8, 9}};
  CHECK_THROWS_AS(overlap.validate(phonemes.size()), Error);
}

TEST_CASE("frame features assemble context, log-f0, and positions", "[score]") {
  ContextConfig cfg;
  cfg.inventory = {"sil", "a"};
  cfg.states_per_phoneme = 5;
  Score s = single_note_score();
  StateAlignment align = even_alignment(s, 4);
  FrameFeatures ff = build_frame_features(s, align, cfg);
  REQUIRE(ff.values.rows() == 20);
  REQUIRE(ff.values.cols() == cfg.dim() + 1 + kPositionDim);
  CHECK(ff.ffnn_dim == cfg.dim() + 1);
  CHECK(ff.names.size() == ff.values.cols());
  CHECK(ff.names[cfg.dim()] == "note_lf0");
  // the lf0 column carries the note's log frequency
  CHECK(ff.values(7, cfg.dim()) == Catch::Approx(std::log(note_frequency_hz(60))));
  // state-level inputs: one row per state, mean lf0 appended
  REQUIRE(ff.state_values.rows() == 5);
  CHECK(ff.state_values(2, cfg.dim()) == Catch::Approx(std::log(note_frequency_hz(60))));
}
