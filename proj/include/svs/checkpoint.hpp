#pragma once

// Versioned binary checkpoint: header (magic, version, model/context/layout
// configuration, window set, per-slot parameter counts), then the parameter
// payload as little-endian 32-bit floats, then normalization stats and the
// tied covariance.

#include "svs/acoustic.hpp"
#include "svs/model.hpp"
#include "svs/score.hpp"
#include "svs/trajloss.hpp"

#include <memory>

namespace svs {

struct TrainedModel {
  ModelConfig config;
  ContextConfig context;
  AcousticLayout layout;
  double frame_shift = 0.005;
  double sample_rate = 16000.0;
  WindowSet windows;
  NormalizationStats input_stats;    // all feature columns, 0.00..1.00
  NormalizationStats static_stats;   // D static channels, 0.01..0.99
  NormalizationStats dynamic_stats;  // W*D windowed channels, 0.01..0.99
  // Trajectory-loss units for proposed models (normalized statics); raw
  // feature units for the baseline, where it feeds MLPG directly.
  TiedCovariance covariance;
  std::shared_ptr<Model> model;
};

inline constexpr char kCheckpointMagic[4] = {'S', 'V', 'S', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void write_stats(ByteWriter& w, const NormalizationStats& s) {
  w.u32(static_cast<std::uint32_t>(s.dim()));
  w.f64(s.lo);
  w.f64(s.hi);
  for (double v : s.min) w.f64(v);
  for (double v : s.max) w.f64(v);
}

inline NormalizationStats read_stats(ByteReader& r) {
  NormalizationStats s;
  const std::uint32_t n = r.u32();
  s.lo = r.f64();
  s.hi = r.f64();
  s.min.resize(n);
  s.max.resize(n);
  for (auto& v : s.min) v = r.f64();
  for (auto& v : s.max) v = r.f64();
  return s;
}

}  // namespace detail

inline std::string encode_checkpoint(const TrainedModel& tm) {
  require(tm.model != nullptr, "checkpoint: no model");
  ByteWriter w;
  w.raw(kCheckpointMagic, 4);
  w.u32(kCheckpointVersion);

  const ModelConfig& c = tm.config;
  w.u32(c.kind == ModelKind::Baseline ? 0 : 1);
  w.u32(c.mode == DriveMode::FrameDriven ? 0 : 1);
  w.u32(static_cast<std::uint32_t>(c.input_dim));
  w.u32(static_cast<std::uint32_t>(c.position_dim));
  w.u32(static_cast<std::uint32_t>(c.static_dim));
  w.u32(static_cast<std::uint32_t>(c.ffnn_layers));
  w.u32(static_cast<std::uint32_t>(c.ffnn_width));
  w.f64(c.dropout_p);
  w.u32(static_cast<std::uint32_t>(c.cnn_channels));
  w.u32(static_cast<std::uint32_t>(c.residual_blocks));
  w.u32(static_cast<std::uint32_t>(c.filter_size));
  w.u32(static_cast<std::uint32_t>(c.window_count));
  w.u32(c.split.enabled ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(c.split.head1_channels));
  w.u32(static_cast<std::uint32_t>(c.split.head1_blocks));
  w.u32(static_cast<std::uint32_t>(c.split.head1_dims.size()));
  for (std::size_t d : c.split.head1_dims) w.u32(static_cast<std::uint32_t>(d));

  w.u32(static_cast<std::uint32_t>(tm.context.inventory.size()));
  for (const auto& p : tm.context.inventory) w.str(p);
  w.u32(static_cast<std::uint32_t>(tm.context.states_per_phoneme));
  w.u32(static_cast<std::uint32_t>(tm.context.key_size));
  w.u32(static_cast<std::uint32_t>(tm.context.extra_binary));
  w.u32(static_cast<std::uint32_t>(tm.context.extra_numerical));

  w.u32(static_cast<std::uint32_t>(tm.layout.mcep_order));
  w.u32(static_cast<std::uint32_t>(tm.layout.aperiodicity_bands));
  w.f64(tm.frame_shift);
  w.f64(tm.sample_rate);

  w.u32(static_cast<std::uint32_t>(tm.windows.count()));
  for (const Window& win : tm.windows.windows) {
    w.u32(static_cast<std::uint32_t>(win.halfwidth));
    for (double t : win.taps) w.f64(t);
  }

  const auto& slots = tm.model->params().slots;
  w.u32(static_cast<std::uint32_t>(slots.size()));
  for (const auto& s : slots) w.u32(static_cast<std::uint32_t>(s.size()));
  for (const auto& s : slots)
    for (double v : s) w.f32(static_cast<float>(v));

  detail::write_stats(w, tm.input_stats);
  detail::write_stats(w, tm.static_stats);
  detail::write_stats(w, tm.dynamic_stats);

  w.u32(static_cast<std::uint32_t>(tm.covariance.variance.size()));
  w.f64(tm.covariance.floor);
  for (double v : tm.covariance.variance) w.f64(v);
  return w.buffer();
}

inline TrainedModel decode_checkpoint(std::string_view bytes, const std::string& name) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    fail(name + ": bad checkpoint magic");
  ByteReader r(bytes.substr(4), name);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    fail(name + ": unsupported checkpoint version " + std::to_string(version));

  TrainedModel tm;
  ModelConfig& c = tm.config;
  c.kind = r.u32() == 0 ? ModelKind::Baseline : ModelKind::Proposed;
  c.mode = r.u32() == 0 ? DriveMode::FrameDriven : DriveMode::StateDriven;
  c.input_dim = static_cast<int>(r.u32());
  c.position_dim = static_cast<int>(r.u32());
  c.static_dim = static_cast<int>(r.u32());
  c.ffnn_layers = static_cast<int>(r.u32());
  c.ffnn_width = static_cast<int>(r.u32());
  c.dropout_p = r.f64();
  c.cnn_channels = static_cast<int>(r.u32());
  c.residual_blocks = static_cast<int>(r.u32());
  c.filter_size = static_cast<int>(r.u32());
  c.window_count = static_cast<int>(r.u32());
  c.split.enabled = r.u32() != 0;
  c.split.head1_channels = static_cast<int>(r.u32());
  c.split.head1_blocks = static_cast<int>(r.u32());
  const std::uint32_t ndims = r.u32();
  c.split.head1_dims.resize(ndims);
  for (auto& d : c.split.head1_dims) d = r.u32();

  const std::uint32_t ninv = r.u32();
  tm.context.inventory.resize(ninv);
  for (auto& p : tm.context.inventory) p = r.str();
  tm.context.states_per_phoneme = static_cast<int>(r.u32());
  tm.context.key_size = static_cast<int>(r.u32());
  tm.context.extra_binary = static_cast<int>(r.u32());
  tm.context.extra_numerical = static_cast<int>(r.u32());

  tm.layout.mcep_order = static_cast<int>(r.u32());
  tm.layout.aperiodicity_bands = static_cast<int>(r.u32());
  tm.frame_shift = r.f64();
  tm.sample_rate = r.f64();

  const std::uint32_t nwin = r.u32();
  tm.windows.windows.resize(nwin);
  for (auto& win : tm.windows.windows) {
    win.halfwidth = static_cast<int>(r.u32());
    win.taps.resize(2 * win.halfwidth + 1);
    for (auto& t : win.taps) t = r.f64();
  }
  tm.windows.validate();

  tm.model = std::make_shared<Model>(c);
  auto& slots = tm.model->params().slots;
  const std::uint32_t nslots = r.u32();
  require(nslots == slots.size(), name + ": checkpoint/config mismatch (slot count)");
  std::vector<std::uint32_t> counts(nslots);
  for (auto& n : counts) n = r.u32();
  for (std::size_t s = 0; s < slots.size(); ++s) {
    require(counts[s] == slots[s].size(),
            name + ": checkpoint/config mismatch (slot " + std::to_string(s) + " size)");
    for (auto& v : slots[s]) v = static_cast<double>(r.f32());
  }

  tm.input_stats = detail::read_stats(r);
  tm.static_stats = detail::read_stats(r);
  tm.dynamic_stats = detail::read_stats(r);

  const std::uint32_t ncov = r.u32();
  tm.covariance.floor = r.f64();
  tm.covariance.variance.resize(ncov);
  for (auto& v : tm.covariance.variance) v = r.f64();

  require(r.remaining() == 0, name + ": trailing bytes after checkpoint payload");
  return tm;
}

inline void save_checkpoint(const std::filesystem::path& path, const TrainedModel& tm) {
  write_file_atomic(path, encode_checkpoint(tm));
}

inline TrainedModel load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path), path.filename().string());
}

}  // namespace svs
