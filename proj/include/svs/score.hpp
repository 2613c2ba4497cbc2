#pragma once

// Musical scores and the state-level feature pipeline: score parsing,
// note-pitch tracks with rest interpolation, categorical/numerical context
// encoding, frame-position features, frame expansion, and min-max
// normalization.
//
// Score file format (one statement per line, '#' starts a comment):
//
//   tempo 120
//   key 0
//   note C4 1.0 a
//   note R 0.5
//   note A4 2.0 k a
//
// A note is `note <pitch> <beats> [phonemes...]`, where <pitch> is a name
// (C4, F#3, Bb5) or a MIDI number, and `R` marks a rest. Rests carry no
// phonemes; every pitched note needs at least one.

#include "svs/common.hpp"

#include <map>
#include <optional>

namespace svs {

inline constexpr int kRestPitch = -1;
inline const std::string kSilencePhoneme = "sil";

struct Note {
  int pitch = kRestPitch;  // MIDI semitone number, kRestPitch for rests
  double beats = 0.0;
  std::vector<std::string> phonemes;

  bool is_rest() const { return pitch == kRestPitch; }
};

struct Score {
  std::vector<Note> notes;
  double tempo = 120.0;  // beats per minute
  int key = 0;           // 0..11

  void validate() const {
    require(tempo > 0.0, "score: tempo must be positive");
    require(key >= 0 && key < 12, "score: key must lie in 0..11");
    require(!notes.empty(), "score: no notes");
    for (std::size_t i = 0; i < notes.size(); ++i) {
      const Note& n = notes[i];
      require(n.beats > 0.0, "score: note " + std::to_string(i) + " has nonpositive duration");
      if (!n.is_rest())
        require(!n.phonemes.empty(),
                "score: pitched note " + std::to_string(i) + " has no phonemes");
    }
  }

  double seconds_per_beat() const { return 60.0 / tempo; }
};

inline double note_frequency_hz(int midi_pitch) {
  return 440.0 * std::pow(2.0, (midi_pitch - 69) / 12.0);
}

// "C4" / "F#3" / "Bb5" / plain MIDI number -> semitone number; "R" -> rest.
inline int parse_pitch(const std::string& token, const std::string& context) {
  if (token == "R" || token == "REST") return kRestPitch;
  if (!token.empty() && (std::isdigit(static_cast<unsigned char>(token[0])) || token[0] == '-'))
    return static_cast<int>(parse_long(token, context));
  static const std::map<char, int> base = {{'C', 0}, {'D', 2}, {'E', 4}, {'F', 5},
                                           {'G', 7}, {'A', 9}, {'B', 11}};
  auto it = token.empty() ? base.end() : base.find(token[0]);
  if (it == base.end()) fail(context + ": unknown pitch '" + token + "'");
  std::size_t i = 1;
  int accidental = 0;
  if (i < token.size() && (token[i] == '#' || token[i] == 'b')) {
    accidental = token[i] == '#' ? 1 : -1;
    ++i;
  }
  if (i >= token.size()) fail(context + ": pitch '" + token + "' is missing an octave");
  long octave = parse_long(token.substr(i), context + ": pitch '" + token + "'");
  return static_cast<int>(12 * (octave + 1) + it->second + accidental);
}

inline Score parse_score(std::istream& is, const std::string& name) {
  Score score;
  bool saw_tempo = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string context = name + ":" + std::to_string(lineno);
    line = strip_comment(line);
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "tempo") {
      require(tok.size() == 2, context + ": expected 'tempo <bpm>'");
      score.tempo = parse_double(tok[1], context + ": tempo");
      if (score.tempo <= 0.0) fail(context + ": tempo must be positive");
      saw_tempo = true;
    } else if (tok[0] == "key") {
      require(tok.size() == 2, context + ": expected 'key <0-11>'");
      long k = parse_long(tok[1], context + ": key");
      if (k < 0 || k > 11) fail(context + ": key must lie in 0..11");
      score.key = static_cast<int>(k);
    } else if (tok[0] == "note") {
      require(tok.size() >= 3, context + ": expected 'note <pitch> <beats> [phonemes...]'");
      Note n;
      n.pitch = parse_pitch(tok[1], context);
      n.beats = parse_double(tok[2], context + ": duration");
      if (n.beats <= 0.0) fail(context + ": note duration must be positive");
      for (std::size_t i = 3; i < tok.size(); ++i) n.phonemes.push_back(tok[i]);
      if (n.is_rest() && !n.phonemes.empty())
        fail(context + ": rests carry no phonemes");
      if (!n.is_rest() && n.phonemes.empty())
        fail(context + ": pitched note needs at least one phoneme");
      score.notes.push_back(std::move(n));
    } else {
      fail(context + ": unknown statement '" + tok[0] + "'");
    }
  }
  if (!saw_tempo) fail(name + ": missing tempo header");
  score.validate();
  return score;
}

inline Score parse_score_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail("cannot open score file " + path.string());
  return parse_score(is, path.filename().string());
}

inline std::string format_score(const Score& score) {
  std::string out = "tempo " + fmt_double(score.tempo) + "\nkey " +
                    std::to_string(score.key) + "\n";
  static const char* names[] = {"C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"};
  for (const Note& n : score.notes) {
    if (n.is_rest()) {
      out += "note R " + fmt_double(n.beats) + "\n";
    } else {
      out += "note " + std::string(names[n.pitch % 12]) + std::to_string(n.pitch / 12 - 1) +
             " " + fmt_double(n.beats);
      for (const auto& p : n.phonemes) out += " " + p;
      out += "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Flattened phoneme sequence and state alignments.

struct PhonemeEvent {
  std::string symbol;      // kSilencePhoneme for rests
  std::size_t note_index;  // owning note in the score
};

inline std::vector<PhonemeEvent> phoneme_sequence(const Score& score) {
  std::vector<PhonemeEvent> seq;
  for (std::size_t i = 0; i < score.notes.size(); ++i) {
    const Note& n = score.notes[i];
    if (n.is_rest())
      seq.push_back({kSilencePhoneme, i});
    else
      for (const auto& p : n.phonemes) seq.push_back({p, i});
  }
  return seq;
}

struct AlignEntry {
  std::size_t phoneme = 0;  // index into the phoneme sequence
  int state = 1;            // 1..S, left-to-right
  std::size_t begin = 0;    // first frame
  std::size_t end = 0;      // one past the last frame
};

struct StateAlignment {
  std::vector<AlignEntry> entries;
  double frame_shift = 0.005;  // seconds
  int states_per_phoneme = 5;

  std::size_t total_frames() const { return entries.empty() ? 0 : entries.back().end; }

  void validate(std::size_t phoneme_count) const {
    require(frame_shift > 0.0, "alignment: frame shift must be positive");
    require(states_per_phoneme >= 1, "alignment: need at least one state per phoneme");
    require(entries.size() == phoneme_count * static_cast<std::size_t>(states_per_phoneme),
            "alignment: entry count does not match phonemes x states");
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const AlignEntry& e = entries[i];
      require(e.begin == cursor, "alignment: entries must be contiguous at index " +
                                     std::to_string(i));
      require(e.end > e.begin, "alignment: empty state at index " + std::to_string(i));
      require(e.phoneme == i / static_cast<std::size_t>(states_per_phoneme),
              "alignment: phoneme index out of order at " + std::to_string(i));
      require(e.state == static_cast<int>(i % static_cast<std::size_t>(states_per_phoneme)) + 1,
              "alignment: state index must cycle 1..S at " + std::to_string(i));
      cursor = e.end;
    }
  }
};

// Text format: header lines then one `state` line per entry.
inline std::string format_alignment(const StateAlignment& align) {
  std::string out = "frame_shift " + fmt_double(align.frame_shift) + "\nstates_per_phoneme " +
                    std::to_string(align.states_per_phoneme) + "\n";
  for (const AlignEntry& e : align.entries)
    out += "state " + std::to_string(e.phoneme) + " " + std::to_string(e.state) + " " +
           std::to_string(e.begin) + " " + std::to_string(e.end) + "\n";
  return out;
}

inline StateAlignment parse_alignment(std::istream& is, const std::string& name) {
  StateAlignment align;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string context = name + ":" + std::to_string(lineno);
    line = strip_comment(line);
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "frame_shift") {
      require(tok.size() == 2, context + ": expected 'frame_shift <seconds>'");
      align.frame_shift = parse_double(tok[1], context);
    } else if (tok[0] == "states_per_phoneme") {
      require(tok.size() == 2, context + ": expected 'states_per_phoneme <n>'");
      align.states_per_phoneme = static_cast<int>(parse_long(tok[1], context));
    } else if (tok[0] == "state") {
      require(tok.size() == 5, context + ": expected 'state <phoneme> <state> <begin> <end>'");
      AlignEntry e;
      e.phoneme = static_cast<std::size_t>(parse_long(tok[1], context));
      e.state = static_cast<int>(parse_long(tok[2], context));
      e.begin = static_cast<std::size_t>(parse_long(tok[3], context));
      e.end = static_cast<std::size_t>(parse_long(tok[4], context));
      align.entries.push_back(e);
    } else {
      fail(context + ": unknown statement '" + tok[0] + "'");
    }
  }
  return align;
}

inline StateAlignment parse_alignment_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail("cannot open alignment file " + path.string());
  return parse_alignment(is, path.filename().string());
}

// ---------------------------------------------------------------------------
// Note log-F0 track.

// Per-frame natural-log note pitch. Frames under pitched notes carry the
// note's log frequency; rest frames interpolate linearly between the
// neighboring pitched frames, and leading/trailing rests hold the nearest
// pitched value.
inline std::vector<double> note_logf0_track(const Score& score, const StateAlignment& align) {
  auto phonemes = phoneme_sequence(score);
  align.validate(phonemes.size());
  const std::size_t T = align.total_frames();
  std::vector<double> track(T, 0.0);
  std::vector<bool> pitched(T, false);
  for (const AlignEntry& e : align.entries) {
    const Note& note = score.notes[phonemes[e.phoneme].note_index];
    if (note.is_rest()) continue;
    const double lf0 = std::log(note_frequency_hz(note.pitch));
    for (std::size_t t = e.begin; t < e.end; ++t) {
      track[t] = lf0;
      pitched[t] = true;
    }
  }
  bool any = std::find(pitched.begin(), pitched.end(), true) != pitched.end();
  require(any, "note_logf0_track: all-rest score has no pitch anchor");

  std::size_t t = 0;
  while (t < T) {
    if (pitched[t]) {
      ++t;
      continue;
    }
    std::size_t gap_begin = t;
    while (t < T && !pitched[t]) ++t;
    std::size_t gap_end = t;  // first pitched frame after the gap, or T
    const bool has_left = gap_begin > 0;
    const bool has_right = gap_end < T;
    if (has_left && has_right) {
      const double v0 = track[gap_begin - 1];
      const double v1 = track[gap_end];
      const double span = static_cast<double>(gap_end - (gap_begin - 1));
      for (std::size_t f = gap_begin; f < gap_end; ++f)
        track[f] = v0 + (v1 - v0) * static_cast<double>(f - (gap_begin - 1)) / span;
    } else if (has_left) {
      for (std::size_t f = gap_begin; f < gap_end; ++f) track[f] = track[gap_begin - 1];
    } else {
      for (std::size_t f = gap_begin; f < gap_end; ++f) track[f] = track[gap_end];
    }
  }
  return track;
}

// ---------------------------------------------------------------------------
// Context features.

struct ContextConfig {
  std::vector<std::string> inventory;  // known phoneme symbols, incl. "sil"
  int states_per_phoneme = 5;
  int key_size = 12;
  int extra_binary = 0;     // reserved all-zero block, for dimension parity
  int extra_numerical = 0;  // with large production layouts

  std::size_t inventory_index(const std::string& symbol) const {
    for (std::size_t i = 0; i < inventory.size(); ++i)
      if (inventory[i] == symbol) return i;
    fail("unknown phoneme symbol '" + symbol + "'");
  }

  std::size_t binary_dim() const {
    return 3 * inventory.size() + static_cast<std::size_t>(states_per_phoneme) +
           static_cast<std::size_t>(key_size) + static_cast<std::size_t>(extra_binary);
  }
  std::size_t numerical_dim() const { return 4 + static_cast<std::size_t>(extra_numerical); }
  std::size_t dim() const { return binary_dim() + numerical_dim(); }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> names;
    names.reserve(dim());
    for (const char* pos : {"prev", "cur", "next"})
      for (const auto& p : inventory) names.push_back(std::string(pos) + "_ph_" + p);
    for (int s = 1; s <= states_per_phoneme; ++s) names.push_back("state_" + std::to_string(s));
    for (int k = 0; k < key_size; ++k) names.push_back("key_" + std::to_string(k));
    for (int i = 0; i < extra_binary; ++i) names.push_back("bin_extra_" + std::to_string(i));
    names.push_back("note_pitch");
    names.push_back("note_dur_frames");
    names.push_back("note_phone_count");
    names.push_back("phone_index_in_note");
    for (int i = 0; i < extra_numerical; ++i) names.push_back("num_extra_" + std::to_string(i));
    return names;
  }

  // Dimension layout matching a full production feature set: 724 binary
  // plus 122 numerical context features.
  static ContextConfig full_scale() {
    ContextConfig cfg;
    cfg.inventory.resize(200);
    for (int i = 0; i < 200; ++i) cfg.inventory[i] = "p" + std::to_string(i);
    cfg.states_per_phoneme = 5;
    cfg.key_size = 12;
    cfg.extra_binary = 724 - (3 * 200 + 5 + 12);
    cfg.extra_numerical = 122 - 4;
    return cfg;
  }
};

// One vector per alignment entry: one-hot blocks for previous/current/next
// phoneme, state index, and key; numerical block for note pitch, note
// duration in frames, phoneme count in the note, and position in the note.
inline Matrix encode_context_features(const Score& score, const StateAlignment& align,
                                      const ContextConfig& cfg) {
  auto phonemes = phoneme_sequence(score);
  align.validate(phonemes.size());
  require(cfg.states_per_phoneme == align.states_per_phoneme,
          "context config states_per_phoneme does not match the alignment");

  // note frame extents, from the alignment
  std::vector<std::size_t> note_frames(score.notes.size(), 0);
  for (const AlignEntry& e : align.entries)
    note_frames[phonemes[e.phoneme].note_index] += e.end - e.begin;

  const std::size_t P = cfg.inventory.size();
  Matrix out(align.entries.size(), cfg.dim());
  for (std::size_t i = 0; i < align.entries.size(); ++i) {
    const AlignEntry& e = align.entries[i];
    double* row = out.row(i);
    const std::size_t ph = e.phoneme;
    // prev/cur/next phoneme one-hots; missing neighbors stay all-zero
    if (ph > 0) row[cfg.inventory_index(phonemes[ph - 1].symbol)] = 1.0;
    row[P + cfg.inventory_index(phonemes[ph].symbol)] = 1.0;
    if (ph + 1 < phonemes.size())
      row[2 * P + cfg.inventory_index(phonemes[ph + 1].symbol)] = 1.0;
    row[3 * P + static_cast<std::size_t>(e.state - 1)] = 1.0;
    row[3 * P + static_cast<std::size_t>(cfg.states_per_phoneme) +
        static_cast<std::size_t>(score.key)] = 1.0;

    const std::size_t note_idx = phonemes[ph].note_index;
    const Note& note = score.notes[note_idx];
    double* num = row + cfg.binary_dim();
    num[0] = note.is_rest() ? 0.0 : static_cast<double>(note.pitch);
    num[1] = static_cast<double>(note_frames[note_idx]);
    num[2] = note.is_rest() ? 0.0 : static_cast<double>(note.phonemes.size());
    // index of this phoneme within its note
    std::size_t idx_in_note = 0;
    for (std::size_t q = ph; q > 0 && phonemes[q - 1].note_index == note_idx; --q)
      ++idx_in_note;
    num[3] = static_cast<double>(idx_in_note);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Position features.

inline constexpr std::size_t kPositionDim = 5;

inline std::vector<std::string> position_feature_names() {
  return {"pos_forward", "pos_backward", "pos_rel_state", "pos_state_dur", "pos_rel_phone"};
}

// Per frame: forward/backward frame index within the state, relative
// position in the state, state duration, and relative position within the
// phoneme. One-frame spans use relative position 0 (the 0/0 -> 0 rule).
inline Matrix position_features(const StateAlignment& align) {
  const std::size_t T = align.total_frames();
  Matrix out(T, kPositionDim);
  const std::size_t S = static_cast<std::size_t>(align.states_per_phoneme);
  for (std::size_t i = 0; i < align.entries.size(); ++i) {
    const AlignEntry& e = align.entries[i];
    const std::size_t first = i - (i % S);
    const std::size_t ph_begin = align.entries[first].begin;
    const std::size_t ph_end = align.entries[first + S - 1].end;
    const double state_dur = static_cast<double>(e.end - e.begin);
    const double ph_dur = static_cast<double>(ph_end - ph_begin);
    for (std::size_t t = e.begin; t < e.end; ++t) {
      const double fwd = static_cast<double>(t - e.begin);
      out(t, 0) = fwd;
      out(t, 1) = static_cast<double>(e.end - 1 - t);
      out(t, 2) = state_dur > 1.0 ? fwd / (state_dur - 1.0) : 0.0;
      out(t, 3) = state_dur;
      out(t, 4) = ph_dur > 1.0 ? static_cast<double>(t - ph_begin) / (ph_dur - 1.0) : 0.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Frame expansion.

// Repeats each state vector across its frame span and appends the per-frame
// columns (note log-F0, position features, ...) on the right.
inline Matrix expand_to_frames(const Matrix& state_vectors, const StateAlignment& align,
                               const Matrix& frame_columns) {
  require(state_vectors.rows() == align.entries.size(),
          "expand_to_frames: one state vector per alignment entry required");
  const std::size_t T = align.total_frames();
  require(frame_columns.rows() == T || frame_columns.cols() == 0,
          "expand_to_frames: frame column row count mismatch");
  Matrix out(T, state_vectors.cols() + frame_columns.cols());
  for (std::size_t i = 0; i < align.entries.size(); ++i) {
    const AlignEntry& e = align.entries[i];
    for (std::size_t t = e.begin; t < e.end; ++t)
      std::copy(state_vectors.row(i), state_vectors.row(i) + state_vectors.cols(), out.row(t));
  }
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t c = 0; c < frame_columns.cols(); ++c)
      out(t, state_vectors.cols() + c) = frame_columns(t, c);
  return out;
}

// ---------------------------------------------------------------------------
// Min-max normalization.

struct NormalizationStats {
  std::vector<double> min, max;
  double lo = 0.0, hi = 1.0;

  std::size_t dim() const { return min.size(); }

  void validate() const {
    require(min.size() == max.size(), "normalization stats: min/max size mismatch");
    require(lo < hi, "normalization stats: target range is empty");
    for (std::size_t d = 0; d < min.size(); ++d)
      require(max[d] >= min[d], "normalization stats: max < min at column " + std::to_string(d));
  }
};

inline NormalizationStats slice_stats(const NormalizationStats& stats, std::size_t begin,
                                      std::size_t count) {
  require(begin + count <= stats.dim(), "slice_stats: out of range");
  NormalizationStats out;
  out.lo = stats.lo;
  out.hi = stats.hi;
  out.min.assign(stats.min.begin() + begin, stats.min.begin() + begin + count);
  out.max.assign(stats.max.begin() + begin, stats.max.begin() + begin + count);
  return out;
}

inline NormalizationStats fit_normalization(std::span<const Matrix> mats, double lo, double hi) {
  require(lo < hi, "fit_normalization: target range is empty");
  require(!mats.empty(), "fit_normalization: no matrices");
  const std::size_t D = mats.front().cols();
  NormalizationStats stats;
  stats.lo = lo;
  stats.hi = hi;
  stats.min.assign(D, std::numeric_limits<double>::infinity());
  stats.max.assign(D, -std::numeric_limits<double>::infinity());
  bool any = false;
  for (const Matrix& m : mats) {
    require(m.cols() == D, "fit_normalization: column count mismatch");
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t d = 0; d < D; ++d) {
        stats.min[d] = std::min(stats.min[d], m(r, d));
        stats.max[d] = std::max(stats.max[d], m(r, d));
        any = true;
      }
  }
  require(any, "fit_normalization: no rows");
  return stats;
}

// Affine map per column into [lo, hi], clamped so unseen out-of-range values
// stay inside the target range. Constant columns map to the midpoint.
inline Matrix normalize(const Matrix& m, const NormalizationStats& stats) {
  stats.validate();
  require(m.cols() == stats.dim(), "normalize: column count mismatch");
  Matrix out(m.rows(), m.cols());
  for (std::size_t d = 0; d < m.cols(); ++d) {
    const double span = stats.max[d] - stats.min[d];
    if (span == 0.0) {
      const double mid = 0.5 * (stats.lo + stats.hi);
      for (std::size_t r = 0; r < m.rows(); ++r) out(r, d) = mid;
      continue;
    }
    const double scale = (stats.hi - stats.lo) / span;
    for (std::size_t r = 0; r < m.rows(); ++r)
      out(r, d) = std::clamp(stats.lo + (m(r, d) - stats.min[d]) * scale, stats.lo, stats.hi);
  }
  return out;
}

inline Matrix denormalize(const Matrix& m, const NormalizationStats& stats) {
  stats.validate();
  require(m.cols() == stats.dim(), "denormalize: column count mismatch");
  Matrix out(m.rows(), m.cols());
  for (std::size_t d = 0; d < m.cols(); ++d) {
    const double span = stats.max[d] - stats.min[d];
    if (span == 0.0) {
      for (std::size_t r = 0; r < m.rows(); ++r) out(r, d) = stats.min[d];
      continue;
    }
    const double scale = span / (stats.hi - stats.lo);
    for (std::size_t r = 0; r < m.rows(); ++r)
      out(r, d) = stats.min[d] + (m(r, d) - stats.lo) * scale;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assembled frame-level inputs.

// Column order: binary context ++ numerical context ++ note log-F0 ++
// position features. The network's frame-wise part consumes everything up
// to (and including) note log-F0; position features feed the segment part.
struct FrameFeatures {
  Matrix values;                   // T x dim, unnormalized
  std::vector<std::string> names;  // per column
  std::size_t ffnn_dim = 0;        // columns consumed by the frame-wise part
  Matrix state_values;             // N x ffnn_dim state-level inputs
};

inline FrameFeatures build_frame_features(const Score& score, const StateAlignment& align,
                                          const ContextConfig& cfg) {
  FrameFeatures ff;
  Matrix context = encode_context_features(score, align, cfg);
  Matrix positions = position_features(align);
  std::vector<double> lf0 = note_logf0_track(score, align);
  const std::size_t T = align.total_frames();

  Matrix frame_cols(T, 1 + kPositionDim);
  for (std::size_t t = 0; t < T; ++t) {
    frame_cols(t, 0) = lf0[t];
    for (std::size_t c = 0; c < kPositionDim; ++c) frame_cols(t, 1 + c) = positions(t, c);
  }
  ff.values = expand_to_frames(context, align, frame_cols);
  ff.ffnn_dim = context.cols() + 1;

  ff.names = cfg.feature_names();
  ff.names.push_back("note_lf0");
  for (const auto& n : position_feature_names()) ff.names.push_back(n);

  // state-level inputs: context plus the mean note log-F0 over each state
  ff.state_values = Matrix(context.rows(), ff.ffnn_dim);
  for (std::size_t i = 0; i < align.entries.size(); ++i) {
    const AlignEntry& e = align.entries[i];
    std::copy(context.row(i), context.row(i) + context.cols(), ff.state_values.row(i));
    double mean = 0.0;
    for (std::size_t t = e.begin; t < e.end; ++t) mean += lf0[t];
    ff.state_values(i, context.cols()) = mean / static_cast<double>(e.end - e.begin);
  }
  return ff;
}

}  // namespace svs
