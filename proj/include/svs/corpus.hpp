#pragma once

// Deterministic synthetic singing corpus: seeded score generation, a
// synthetic state-level aligner standing in for forced alignment, and an
// oracle that maps (score, alignment) to ground-truth acoustic features
// with learnable structure.
//
// Oracle recipe (all rngs derive from mix_seed, so the corpus is
// byte-identical under a fixed seed):
//   * each inventory phoneme p has a fixed template: mel-cepstrum entries
//     c(m) ~ U(-0.8, 0.8) / (1 + m), aperiodicity ~ U(0.02, 0.2); silence
//     uses a fixed quiet template (c0 = -2, higher terms 0, aperiodicity 1)
//   * per-frame template tracks (piecewise constant over phoneme spans) are
//     smoothed with the one-pole filter y[t] = l*y[t-1] + (1-l)*x[t],
//     y[0] = x[0], l = exp(-frame_shift / smoothing_time)
//   * log-F0 is the note track; pitched notes at least vibrato_min_duration
//     long add a sinusoid of amp_cents ~ U(20, 45), freq ~ U(4.5, 6.5):
//     lf0 += amp * sin(phase) * ln 2 / 1200, phase accumulated per note
//   * voiced flag marks frames of pitched notes; vibrato amp/freq channels
//     carry their values on vibrato frames and 0 elsewhere
//   * finally every non-flag channel gains seeded frame-level jitter,
//     jitter * sigma_c * N(0,1) drawn frame-major from
//     Rng(mix_seed(song_seed, 0xA100)) with per-channel sigma 0.03 for
//     mel-cepstra, 0.01 for log-F0 and aperiodicity, 0.5 (cents) for
//     vibrato amplitude, and 0.05 (Hz) for vibrato frequency -- the
//     measurement-noise analog that keeps residual variances realistic

#include "svs/acoustic.hpp"
#include "svs/score.hpp"

#include <cstdio>
#include <numbers>

namespace svs {

struct CorpusConfig {
  std::uint64_t seed = 42;
  int songs = 16;
  int notes_per_song = 20;
  int phoneme_inventory = 10;  // pitched phonemes; silence is added on top
  double tempo_min = 90.0, tempo_max = 140.0;
  int states_per_phoneme = 5;
  double frame_shift = 0.005;
  double sample_rate = 16000.0;
  AcousticLayout layout;
  double smoothing_time = 0.02;       // seconds
  double rest_probability = 0.1;
  double vibrato_min_duration = 0.8;  // seconds
  double duration_sigma = 0.4;        // log-normal spread of state durations
  double holdout_fraction = 0.2;      // trailing songs form the test split
  double jitter = 1.0;                // frame-level jitter scale; 0 disables

  void validate() const {
    require(songs >= 1 && notes_per_song >= 1, "corpus: need songs and notes");
    require(phoneme_inventory >= 2, "corpus: inventory too small");
    require(states_per_phoneme >= 1, "corpus: need at least one state");
    require(frame_shift > 0.0 && sample_rate > 0.0, "corpus: bad timing config");
    require(tempo_min > 0.0 && tempo_max >= tempo_min, "corpus: bad tempo range");
    require(smoothing_time > 0.0, "corpus: smoothing time must be positive");
    require(holdout_fraction >= 0.0 && holdout_fraction < 1.0, "corpus: bad holdout fraction");
  }

  int train_songs() const {
    if (holdout_fraction <= 0.0 || songs < 2) return songs;
    int held = static_cast<int>(std::llround(songs * holdout_fraction));
    held = std::clamp(held, 1, songs - 1);
    return songs - held;
  }
};

inline std::vector<std::string> default_phoneme_inventory(int n) {
  static const char* table[] = {"a", "i", "u", "e", "o", "k", "s", "t", "n", "h",
                                "m", "y", "r", "w", "g", "z", "j", "d", "b", "p"};
  std::vector<std::string> inv;
  inv.push_back(kSilencePhoneme);
  for (int i = 0; i < n; ++i) {
    if (i < static_cast<int>(std::size(table)))
      inv.push_back(table[i]);
    else
      inv.push_back("p" + std::to_string(i));
  }
  return inv;
}

// ---------------------------------------------------------------------------
// Random scores.

inline Score random_score(const CorpusConfig& cfg, int song_index) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, 0x5000 + static_cast<std::uint64_t>(song_index)));
  auto inventory = default_phoneme_inventory(cfg.phoneme_inventory);
  Score score;
  score.tempo = std::floor(uniform(rng, cfg.tempo_min, cfg.tempo_max));
  score.key = static_cast<int>(rng() % 12);
  static const double beat_choices[] = {0.5, 0.5, 1.0, 1.0, 1.5};
  int pitch = 57 + static_cast<int>(rng() % 12);
  for (int i = 0; i < cfg.notes_per_song; ++i) {
    Note n;
    n.beats = beat_choices[rng() % std::size(beat_choices)];
    const bool rest = i != 0 && uniform(rng, 0.0, 1.0) < cfg.rest_probability;
    if (!rest) {
      pitch = std::clamp(pitch + static_cast<int>(rng() % 9) - 4, 48, 76);
      n.pitch = pitch;
      const int phones = 1 + static_cast<int>(rng() % 4 != 0);  // mostly two per note
      for (int p = 0; p < phones; ++p)
        n.phonemes.push_back(inventory[1 + rng() % (inventory.size() - 1)]);
    }
    score.notes.push_back(std::move(n));
  }
  score.validate();
  return score;
}

// ---------------------------------------------------------------------------
// Synthetic aligner.

namespace detail {

// Splits `total` into `parts` pieces proportional to seeded log-normal
// weights, each at least `minimum`, largest-remainder rounding.
inline std::vector<std::size_t> split_frames(std::size_t total, std::size_t parts,
                                             double sigma, std::size_t minimum, Rng& rng) {
  require(parts >= 1, "split_frames: no parts");
  require(total >= parts * minimum, "split_frames: span too short for its parts");
  std::normal_distribution<double> gauss(0.0, sigma);
  std::vector<double> weights(parts);
  double sum = 0.0;
  for (double& w : weights) {
    w = std::exp(gauss(rng));
    sum += w;
  }
  const std::size_t spread = total - parts * minimum;
  std::vector<std::size_t> out(parts, minimum);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < parts; ++i) {
    const double exact = spread * weights[i] / sum;
    const std::size_t whole = static_cast<std::size_t>(std::floor(exact));
    out[i] += whole;
    assigned += whole;
    remainders.push_back({exact - whole, i});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; i < spread - assigned; ++i) out[remainders[i].second] += 1;
  return out;
}

}  // namespace detail

// State-level alignment with note boundaries at the quantized beat grid and
// log-normal state durations inside each phoneme.
inline StateAlignment synthesize_alignment(const Score& score, const CorpusConfig& cfg,
                                           std::uint64_t seed) {
  score.validate();
  Rng rng(mix_seed(seed, 0x6000));
  auto phonemes = phoneme_sequence(score);
  StateAlignment align;
  align.frame_shift = cfg.frame_shift;
  align.states_per_phoneme = cfg.states_per_phoneme;
  const std::size_t S = static_cast<std::size_t>(cfg.states_per_phoneme);

  // cumulative beat positions -> frame boundaries, so rounding never drifts
  std::vector<std::size_t> note_bounds(score.notes.size() + 1, 0);
  double beats = 0.0;
  for (std::size_t i = 0; i < score.notes.size(); ++i) {
    beats += score.notes[i].beats;
    note_bounds[i + 1] = static_cast<std::size_t>(
        std::llround(beats * score.seconds_per_beat() / cfg.frame_shift));
    require(note_bounds[i + 1] > note_bounds[i],
            "alignment: note " + std::to_string(i) + " shorter than one frame");
  }

  std::size_t ph = 0;
  for (std::size_t i = 0; i < score.notes.size(); ++i) {
    std::size_t count = score.notes[i].is_rest() ? 1 : score.notes[i].phonemes.size();
    const std::size_t note_frames = note_bounds[i + 1] - note_bounds[i];
    auto per_phoneme =
        detail::split_frames(note_frames, count, cfg.duration_sigma, S, rng);
    std::size_t cursor = note_bounds[i];
    for (std::size_t p = 0; p < count; ++p) {
      auto per_state = detail::split_frames(per_phoneme[p], S, cfg.duration_sigma, 1, rng);
      for (std::size_t s = 0; s < S; ++s) {
        AlignEntry e;
        e.phoneme = ph;
        e.state = static_cast<int>(s) + 1;
        e.begin = cursor;
        e.end = cursor + per_state[s];
        align.entries.push_back(e);
        cursor = e.end;
      }
      ++ph;
    }
  }
  align.validate(phonemes.size());
  return align;
}

// ---------------------------------------------------------------------------
// Oracle acoustic features.

struct PhonemeTemplate {
  std::vector<double> mcep;
  double aperiodicity = 0.0;
};

inline PhonemeTemplate phoneme_template(const CorpusConfig& cfg, const std::string& symbol,
                                        std::size_t inventory_index) {
  PhonemeTemplate t;
  t.mcep.resize(cfg.layout.mcep_count());
  if (symbol == kSilencePhoneme) {
    t.mcep[0] = -2.0;
    t.aperiodicity = 1.0;
    return t;
  }
  Rng rng(mix_seed(cfg.seed, 0x7000 + inventory_index));
  for (std::size_t m = 0; m < t.mcep.size(); ++m)
    t.mcep[m] = uniform(rng, -0.8, 0.8) / (1.0 + static_cast<double>(m));
  t.aperiodicity = uniform(rng, 0.02, 0.2);
  return t;
}

inline AcousticSequence oracle_features(const Score& score, const StateAlignment& align,
                                        const CorpusConfig& cfg, std::uint64_t song_seed) {
  cfg.validate();
  auto phonemes = phoneme_sequence(score);
  align.validate(phonemes.size());
  auto inventory = default_phoneme_inventory(cfg.phoneme_inventory);
  const std::size_t T = align.total_frames();
  const AcousticLayout& lay = cfg.layout;

  AcousticSequence seq;
  seq.layout = lay;
  seq.frame_shift = cfg.frame_shift;
  seq.sample_rate = cfg.sample_rate;
  seq.frames = Matrix(T, lay.dim());

  // templates, piecewise constant over phoneme spans
  std::vector<PhonemeTemplate> templates(inventory.size());
  for (std::size_t i = 0; i < inventory.size(); ++i)
    templates[i] = phoneme_template(cfg, inventory[i], i);
  auto inv_index = [&](const std::string& sym) {
    for (std::size_t i = 0; i < inventory.size(); ++i)
      if (inventory[i] == sym) return i;
    fail("oracle: phoneme '" + sym + "' not in the corpus inventory");
  };

  Matrix raw(T, lay.mcep_count() + 1);  // mcep tracks ++ aperiodicity
  const std::size_t S = static_cast<std::size_t>(align.states_per_phoneme);
  for (std::size_t i = 0; i < align.entries.size(); i += S) {
    const AlignEntry& first = align.entries[i];
    const std::size_t begin = first.begin;
    const std::size_t end = align.entries[i + S - 1].end;
    const PhonemeTemplate& t = templates[inv_index(phonemes[first.phoneme].symbol)];
    for (std::size_t f = begin; f < end; ++f) {
      for (std::size_t m = 0; m < t.mcep.size(); ++m) raw(f, m) = t.mcep[m];
      raw(f, t.mcep.size()) = t.aperiodicity;
    }
  }
  // one-pole coarticulation smoothing
  const double lambda = std::exp(-cfg.frame_shift / cfg.smoothing_time);
  for (std::size_t c = 0; c < raw.cols(); ++c) {
    double y = raw(0, c);
    for (std::size_t f = 1; f < T; ++f) {
      y = lambda * y + (1.0 - lambda) * raw(f, c);
      raw(f, c) = y;
    }
  }
  for (std::size_t f = 0; f < T; ++f) {
    for (std::size_t m = 0; m < lay.mcep_count(); ++m) seq.frames(f, lay.mcep_begin() + m) = raw(f, m);
    for (int b = 0; b < lay.aperiodicity_bands; ++b)
      seq.frames(f, lay.bap_begin() + static_cast<std::size_t>(b)) = raw(f, lay.mcep_count());
  }

  // pitch, voicing, vibrato
  std::vector<double> lf0 = note_logf0_track(score, align);
  Rng vib_rng(mix_seed(song_seed, 0x8000));
  std::vector<double> note_amp(score.notes.size(), 0.0);
  std::vector<double> note_freq(score.notes.size(), 0.0);
  for (std::size_t n = 0; n < score.notes.size(); ++n) {
    const double dur = score.notes[n].beats * score.seconds_per_beat();
    // draws happen for every pitched note so vibrato eligibility does not
    // shift the stream consumed by later notes
    const double amp = uniform(vib_rng, 20.0, 45.0);
    const double freq = uniform(vib_rng, 4.5, 6.5);
    if (!score.notes[n].is_rest() && dur >= cfg.vibrato_min_duration) {
      note_amp[n] = amp;
      note_freq[n] = freq;
    }
  }
  std::vector<std::size_t> frame_note(T, 0);
  for (const AlignEntry& e : align.entries)
    for (std::size_t f = e.begin; f < e.end; ++f)
      frame_note[f] = phonemes[e.phoneme].note_index;

  double phase = 0.0;
  std::size_t prev_note = static_cast<std::size_t>(-1);
  for (std::size_t f = 0; f < T; ++f) {
    const std::size_t n = frame_note[f];
    const bool voiced = !score.notes[n].is_rest();
    const bool vibrato = voiced && note_amp[n] > 0.0;
    if (n != prev_note) phase = 0.0;
    prev_note = n;
    double v = lf0[f];
    if (vibrato) {
      v += note_amp[n] * std::sin(phase) * std::numbers::ln2 / 1200.0;
      phase += 2.0 * std::numbers::pi * note_freq[n] * cfg.frame_shift;
    }
    seq.frames(f, lay.lf0_index()) = v;
    seq.frames(f, lay.vuv_index()) = voiced ? 1.0 : 0.0;
    seq.frames(f, lay.vib_amp_index()) = vibrato ? note_amp[n] : 0.0;
    seq.frames(f, lay.vib_freq_index()) = vibrato ? note_freq[n] : 0.0;
    seq.frames(f, lay.vib_flag_index()) = vibrato ? 1.0 : 0.0;
  }

  // frame-level jitter on every non-flag channel, per the documented sigmas
  if (cfg.jitter > 0.0) {
    std::vector<double> sigma(lay.dim(), 0.0);
    for (std::size_t m = 0; m < lay.mcep_count(); ++m) sigma[lay.mcep_begin() + m] = 0.03;
    sigma[lay.lf0_index()] = 0.01;
    for (int b = 0; b < lay.aperiodicity_bands; ++b)
      sigma[lay.bap_begin() + static_cast<std::size_t>(b)] = 0.01;
    sigma[lay.vib_amp_index()] = 0.5;
    sigma[lay.vib_freq_index()] = 0.05;
    Rng jit_rng(mix_seed(song_seed, 0xA100));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t f = 0; f < T; ++f)
      for (std::size_t d = 0; d < lay.dim(); ++d) {
        if (sigma[d] == 0.0) continue;
        seq.frames(f, d) += cfg.jitter * sigma[d] * gauss(jit_rng);
      }
  }
  seq.validate();
  return seq;
}

// ---------------------------------------------------------------------------
// On-disk corpus.

struct ManifestEntry {
  int index = 0;
  bool train = true;
  std::string score_path, align_path, feature_path;
  std::size_t frames = 0;
};

struct Manifest {
  std::uint64_t seed = 0;
  double frame_shift = 0.005;
  double sample_rate = 16000.0;
  int states_per_phoneme = 5;
  std::vector<std::string> inventory;
  AcousticLayout layout;
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> split(bool train) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries)
      if (e.train == train) out.push_back(&e);
    return out;
  }
};

inline std::string format_manifest(const Manifest& m) {
  std::string out = "version 1\nseed " + std::to_string(m.seed) + "\nframe_shift " +
                    fmt_double(m.frame_shift) + "\nsample_rate " + fmt_double(m.sample_rate) +
                    "\nstates_per_phoneme " + std::to_string(m.states_per_phoneme) +
                    "\nmcep_order " + std::to_string(m.layout.mcep_order) +
                    "\naperiodicity_bands " + std::to_string(m.layout.aperiodicity_bands) +
                    "\ninventory";
  for (const auto& p : m.inventory) out += " " + p;
  out += "\n";
  for (const auto& e : m.entries) {
    out += "song " + std::to_string(e.index) + (e.train ? " train " : " test ") + e.score_path +
           " " + e.align_path + " " + e.feature_path + " " + std::to_string(e.frames) + "\n";
  }
  return out;
}

inline Manifest parse_manifest(std::istream& is, const std::string& name) {
  Manifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string context = name + ":" + std::to_string(lineno);
    auto tok = split_ws(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok[0] == "version") {
      require(tok.size() == 2 && tok[1] == "1", context + ": unsupported manifest version");
    } else if (tok[0] == "seed") {
      m.seed = static_cast<std::uint64_t>(parse_long(tok[1], context));
    } else if (tok[0] == "frame_shift") {
      m.frame_shift = parse_double(tok[1], context);
    } else if (tok[0] == "sample_rate") {
      m.sample_rate = parse_double(tok[1], context);
    } else if (tok[0] == "states_per_phoneme") {
      m.states_per_phoneme = static_cast<int>(parse_long(tok[1], context));
    } else if (tok[0] == "mcep_order") {
      m.layout.mcep_order = static_cast<int>(parse_long(tok[1], context));
    } else if (tok[0] == "aperiodicity_bands") {
      m.layout.aperiodicity_bands = static_cast<int>(parse_long(tok[1], context));
    } else if (tok[0] == "inventory") {
      m.inventory.assign(tok.begin() + 1, tok.end());
    } else if (tok[0] == "song") {
      require(tok.size() == 7, context + ": expected 'song <idx> <split> <score> <align> <feat> <frames>'");
      ManifestEntry e;
      e.index = static_cast<int>(parse_long(tok[1], context));
      require(tok[2] == "train" || tok[2] == "test", context + ": split must be train|test");
      e.train = tok[2] == "train";
      e.score_path = tok[3];
      e.align_path = tok[4];
      e.feature_path = tok[5];
      e.frames = static_cast<std::size_t>(parse_long(tok[6], context));
      m.entries.push_back(std::move(e));
    } else {
      fail(context + ": unknown statement '" + tok[0] + "'");
    }
  }
  require(!m.entries.empty(), name + ": manifest lists no songs");
  return m;
}

inline Manifest read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.txt";
  std::ifstream is(path);
  if (!is) fail("cannot open corpus manifest " + path.string());
  return parse_manifest(is, path.filename().string());
}

// Generates scores, alignments, and oracle features for every song and
// writes the corpus under `out_dir`. Byte-identical for a fixed config.
inline Manifest generate_corpus(const CorpusConfig& cfg, const std::filesystem::path& out_dir,
                                int threads = 1) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "songs");

  Manifest manifest;
  manifest.seed = cfg.seed;
  manifest.frame_shift = cfg.frame_shift;
  manifest.sample_rate = cfg.sample_rate;
  manifest.states_per_phoneme = cfg.states_per_phoneme;
  manifest.inventory = default_phoneme_inventory(cfg.phoneme_inventory);
  manifest.layout = cfg.layout;
  manifest.entries.resize(static_cast<std::size_t>(cfg.songs));

  parallel_for(static_cast<std::size_t>(cfg.songs), threads, [&](std::size_t i) {
    char tag[16];
    std::snprintf(tag, sizeof(tag), "song%03zu", i);
    const std::uint64_t song_seed = mix_seed(cfg.seed, 0x9000 + i);
    Score score = random_score(cfg, static_cast<int>(i));
    StateAlignment align = synthesize_alignment(score, cfg, song_seed);
    AcousticSequence oracle = oracle_features(score, align, cfg, song_seed);

    FeatureFile ff;
    ff.channel_names = cfg.layout.channel_names();
    ff.data = oracle.frames;
    ff.frame_shift = cfg.frame_shift;
    ff.sample_rate = cfg.sample_rate;

    ManifestEntry& e = manifest.entries[i];
    e.index = static_cast<int>(i);
    e.train = static_cast<int>(i) < cfg.train_songs();
    e.score_path = std::string("songs/") + tag + ".score";
    e.align_path = std::string("songs/") + tag + ".align";
    e.feature_path = std::string("songs/") + tag + ".feat";
    e.frames = align.total_frames();

    write_file_atomic(out_dir / e.score_path, format_score(score));
    write_file_atomic(out_dir / e.align_path, format_alignment(align));
    write_features(out_dir / e.feature_path, ff);
  });

  write_file_atomic(out_dir / "manifest.txt", format_manifest(manifest));
  return manifest;
}

}  // namespace svs
