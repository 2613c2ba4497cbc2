#pragma once

// Acoustic feature layout, per-frame static sequences, and the binary
// feature file format shared by the corpus tools and the CLI.
//
// Feature file layout (little-endian):
//   "SVSF" | u32 version | u32 frames | u32 channels
//   f64 frame_shift | f64 sample_rate
//   channels x (u32 length + name bytes)
//   frames x channels x f32, frame-major

#include "svs/common.hpp"

namespace svs {

// Static acoustic channels, in order: mel-cepstrum c(0..M), continuous
// log-F0, voiced flag, band aperiodicity, vibrato amplitude (cents),
// vibrato frequency (Hz), vibrato flag.
struct AcousticLayout {
  int mcep_order = 9;  // highest cepstral index; c0..c(order)
  int aperiodicity_bands = 1;

  std::size_t mcep_count() const { return static_cast<std::size_t>(mcep_order) + 1; }
  std::size_t dim() const { return mcep_count() + 2 + aperiodicity_bands + 3; }

  std::size_t mcep_begin() const { return 0; }
  std::size_t lf0_index() const { return mcep_count(); }
  std::size_t vuv_index() const { return mcep_count() + 1; }
  std::size_t bap_begin() const { return mcep_count() + 2; }
  std::size_t vib_amp_index() const { return bap_begin() + aperiodicity_bands; }
  std::size_t vib_freq_index() const { return vib_amp_index() + 1; }
  std::size_t vib_flag_index() const { return vib_amp_index() + 2; }

  std::vector<std::string> channel_names() const {
    std::vector<std::string> names;
    for (std::size_t m = 0; m < mcep_count(); ++m) names.push_back("mcep" + std::to_string(m));
    names.push_back("lf0");
    names.push_back("vuv");
    for (int b = 0; b < aperiodicity_bands; ++b) names.push_back("bap" + std::to_string(b));
    names.push_back("vib_amp");
    names.push_back("vib_freq");
    names.push_back("vib_flag");
    return names;
  }

  std::vector<std::size_t> flag_indices() const { return {vuv_index(), vib_flag_index()}; }

  // The channels a small dedicated network head regenerates for interactive
  // edits: c0, log-F0, vibrato amplitude and frequency.
  std::vector<std::size_t> editable_indices() const {
    return {mcep_begin(), lf0_index(), vib_amp_index(), vib_freq_index()};
  }
};

struct AcousticSequence {
  AcousticLayout layout;
  Matrix frames;  // T x layout.dim(), raw (denormalized) units
  double frame_shift = 0.005;
  double sample_rate = 16000.0;

  std::size_t frame_count() const { return frames.rows(); }

  void validate() const {
    require(frames.cols() == layout.dim(), "acoustic sequence: channel count mismatch");
    for (double v : frames.values())
      require(std::isfinite(v), "acoustic sequence: non-finite value");
  }
};

// ---------------------------------------------------------------------------
// Feature files.

struct FeatureFile {
  std::vector<std::string> channel_names;
  Matrix data;  // frames x channels
  double frame_shift = 0.0;
  double sample_rate = 0.0;

  std::size_t channel_index(const std::string& name) const {
    for (std::size_t c = 0; c < channel_names.size(); ++c)
      if (channel_names[c] == name) return c;
    fail("feature file has no channel named '" + name + "'");
  }
};

inline constexpr char kFeatureMagic[4] = {'S', 'V', 'S', 'F'};
inline constexpr std::uint32_t kFeatureVersion = 1;

inline std::string encode_features(const FeatureFile& ff) {
  require(ff.channel_names.size() == ff.data.cols(),
          "feature file: channel name count mismatch");
  ByteWriter w;
  w.raw(kFeatureMagic, 4);
  w.u32(kFeatureVersion);
  w.u32(static_cast<std::uint32_t>(ff.data.rows()));
  w.u32(static_cast<std::uint32_t>(ff.data.cols()));
  w.f64(ff.frame_shift);
  w.f64(ff.sample_rate);
  for (const auto& name : ff.channel_names) w.str(name);
  for (std::size_t r = 0; r < ff.data.rows(); ++r)
    for (std::size_t c = 0; c < ff.data.cols(); ++c)
      w.f32(static_cast<float>(ff.data(r, c)));
  return w.buffer();
}

inline FeatureFile decode_features(std::string_view bytes, const std::string& name) {
  ByteReader r(bytes, name);
  r.need(4);
  char magic[4];
  std::memcpy(magic, bytes.data(), 4);
  if (std::memcmp(magic, kFeatureMagic, 4) != 0) fail(name + ": bad feature file magic");
  ByteReader body(bytes.substr(4), name);
  const std::uint32_t version = body.u32();
  if (version != kFeatureVersion)
    fail(name + ": unsupported feature file version " + std::to_string(version));
  FeatureFile ff;
  const std::uint32_t frames = body.u32();
  const std::uint32_t channels = body.u32();
  ff.frame_shift = body.f64();
  ff.sample_rate = body.f64();
  for (std::uint32_t c = 0; c < channels; ++c) ff.channel_names.push_back(body.str());
  const std::size_t expected = static_cast<std::size_t>(frames) * channels * 4;
  if (body.remaining() != expected)
    fail(name + ": truncated feature body (expected " + std::to_string(expected) +
         " bytes, have " + std::to_string(body.remaining()) + ")");
  ff.data = Matrix(frames, channels);
  for (std::uint32_t fr = 0; fr < frames; ++fr)
    for (std::uint32_t c = 0; c < channels; ++c) ff.data(fr, c) = body.f32();
  return ff;
}

inline void write_features(const std::filesystem::path& path, const FeatureFile& ff) {
  write_file_atomic(path, encode_features(ff));
}

inline FeatureFile read_features(const std::filesystem::path& path) {
  return decode_features(read_file(path), path.filename().string());
}

}  // namespace svs
