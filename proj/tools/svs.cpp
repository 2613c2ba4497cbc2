// Command-line front end: corpus generation, statistics, training,
// synthesis to features and WAV, standalone MLPG runs, MAC/time
// benchmarking, and trajectory dumps.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include "svs/checkpoint.hpp"
#include "svs/corpus.hpp"
#include "svs/generate.hpp"
#include "svs/mlpg.hpp"
#include "svs/train.hpp"
#include "svs/vocoder.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>

namespace {

using namespace svs;

DriveMode parse_drive_mode(const std::string& mode) {
  if (mode == "frame") return DriveMode::FrameDriven;
  if (mode == "state") return DriveMode::StateDriven;
  fail("unknown drive mode '" + mode + "' (expected frame|state)");
}

// Structured-text model config: `key value` lines layered on top of a preset.
ModelConfig parse_model_config_file(const std::filesystem::path& path, int input_dim,
                                    int static_dim, const AcousticLayout& layout) {
  std::ifstream is(path);
  if (!is) fail("cannot open model config " + path.string());
  ModelConfig cfg = model_preset("medium", input_dim, static_dim, layout.editable_indices());
  std::string line;
  std::size_t lineno = 0;
  auto channel_index = [&](const std::string& name) {
    auto names = layout.channel_names();
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    fail(path.string() + ": unknown acoustic channel '" + name + "'");
  };
  while (std::getline(is, line)) {
    ++lineno;
    const std::string context = path.filename().string() + ":" + std::to_string(lineno);
    line = strip_comment(line);
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    const std::string& key = tok[0];
    if (key == "preset") {
      cfg = model_preset(tok.at(1), input_dim, static_dim, layout.editable_indices());
    } else if (key == "ffnn_layers") {
      cfg.ffnn_layers = static_cast<int>(parse_long(tok.at(1), context));
    } else if (key == "ffnn_width") {
      cfg.ffnn_width = static_cast<int>(parse_long(tok.at(1), context));
    } else if (key == "dropout") {
      cfg.dropout_p = parse_double(tok.at(1), context);
    } else if (key == "cnn_channels") {
      cfg.cnn_channels = static_cast<int>(parse_long(tok.at(1), context));
    } else if (key == "residual_blocks") {
      cfg.residual_blocks = static_cast<int>(parse_long(tok.at(1), context));
    } else if (key == "filter_size") {
      cfg.filter_size = static_cast<int>(parse_long(tok.at(1), context));
    } else if (key == "split") {
      require(tok.at(1) == "on" || tok.at(1) == "off", context + ": split must be on|off");
      cfg.split.enabled = tok[1] == "on";
      if (cfg.split.enabled && cfg.split.head1_dims.empty())
        cfg.split.head1_dims = layout.editable_indices();
    } else if (key == "split_channels") {
      cfg.split.enabled = true;
      cfg.split.head1_dims.clear();
      for (std::size_t i = 1; i < tok.size(); ++i)
        cfg.split.head1_dims.push_back(channel_index(tok[i]));
    } else if (key == "split_cnn_channels") {
      cfg.split.head1_channels = static_cast<int>(parse_long(tok.at(1), context));
    } else if (key == "split_blocks") {
      cfg.split.head1_blocks = static_cast<int>(parse_long(tok.at(1), context));
    } else {
      fail(context + ": unknown model config key '" + key + "'");
    }
  }
  return cfg;
}

StateAlignment alignment_for_score(const Score& score, const std::string& align_path,
                                   const TrainedModel& tm, std::uint64_t seed) {
  if (!align_path.empty()) {
    StateAlignment align = parse_alignment_file(align_path);
    align.validate(phoneme_sequence(score).size());
    return align;
  }
  CorpusConfig cc;
  cc.states_per_phoneme = tm.context.states_per_phoneme;
  cc.frame_shift = tm.frame_shift;
  return synthesize_alignment(score, cc, seed);
}

int run(int argc, char** argv) {
  CLI::App app{"CNN-based singing-voice acoustic modeling toolkit"};
  app.require_subcommand(1);
  int threads = default_thread_count();
  app.add_option("--threads", threads, "worker threads (default: SVS_THREADS or 1)");

  // ---- gen-corpus ----
  auto* gen = app.add_subcommand("gen-corpus", "generate the synthetic corpus");
  std::string gen_out;
  CorpusConfig corpus_cfg;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", corpus_cfg.seed, "corpus seed");
  gen->add_option("--songs", corpus_cfg.songs, "song count");
  gen->add_option("--notes", corpus_cfg.notes_per_song, "notes per song");
  gen->add_option("--inventory", corpus_cfg.phoneme_inventory, "pitched phoneme count");
  gen->add_option("--states", corpus_cfg.states_per_phoneme, "states per phoneme");
  gen->add_option("--frame-shift", corpus_cfg.frame_shift, "frame shift in seconds");
  gen->add_option("--sample-rate", corpus_cfg.sample_rate, "sample rate in Hz");
  gen->add_option("--holdout", corpus_cfg.holdout_fraction, "held-out song fraction");

  // ---- stats ----
  auto* stats = app.add_subcommand("stats", "print corpus statistics");
  std::string stats_dir;
  stats->add_option("--corpus", stats_dir, "corpus directory")->required();

  // ---- train ----
  auto* train = app.add_subcommand("train", "train a model");
  std::string train_dir, train_out, train_mode = "frame", train_preset = "medium";
  std::string train_config, train_log;
  TrainOptions train_opts;
  train->add_option("--corpus", train_dir, "corpus directory")->required();
  train->add_option("--out", train_out, "checkpoint path")->required();
  train->add_option("--mode", train_mode, "baseline|frame|state (default frame)");
  train->add_option("--preset", train_preset, "small|medium|large (default medium)");
  train->add_option("--config", train_config, "model config file (overrides preset)");
  train->add_option("--epochs", train_opts.epochs, "training epochs (default 30)");
  train->add_option("--seed", train_opts.seed, "training seed");
  train->add_option("--lr", train_opts.adam.lr, "Adam learning rate (default 1e-3)");
  train->add_option("--segment", train_opts.seg_len, "training segment length (default 2000)");
  train->add_option("--log", train_log, "metrics log path (default <out>.log)");

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "synthesize a score to features and WAV");
  std::string sy_ckpt, sy_score, sy_align, sy_wav, sy_feats, sy_mode;
  double sy_rate = 0.0;
  std::uint64_t sy_seed = 1;
  GenerateOptions sy_opts;
  synth->add_option("--checkpoint", sy_ckpt, "trained checkpoint")->required();
  synth->add_option("--score", sy_score, "score file")->required();
  synth->add_option("--align", sy_align, "state alignment file (default: synthetic aligner)");
  synth->add_option("--out-wav", sy_wav, "output WAV path");
  synth->add_option("--out-feats", sy_feats, "output feature file path");
  synth->add_option("--mode", sy_mode, "frame|state (proposed checkpoints only)");
  synth->add_option("--sample-rate", sy_rate, "16000 or 48000 (default: checkpoint rate)")
      ->check(CLI::IsMember({0.0, 16000.0, 48000.0}));
  synth->add_option("--segment", sy_opts.seg_len, "segment length (default 2000)");
  synth->add_option("--overlap", sy_opts.overlap, "cross-fade overlap (default 100)");
  synth->add_option("--seed", sy_seed, "vocoder noise seed");

  // ---- mlpg-run ----
  auto* mlpgc = app.add_subcommand("mlpg-run", "run MLPG over a mean feature file");
  std::string mr_in, mr_out, mr_ckpt;
  int mr_static_dim = 0;
  mlpgc->add_option("--input", mr_in, "feature file of static+dynamic means")->required();
  mlpgc->add_option("--output", mr_out, "output feature file of statics")->required();
  mlpgc->add_option("--checkpoint", mr_ckpt, "checkpoint supplying the tied covariance");
  mlpgc->add_option("--static-dim", mr_static_dim, "static dimension (default: channels/3)");

  // ---- bench ----
  auto* bench = app.add_subcommand("bench", "MAC and wall-time comparison, frame vs state");
  std::string bench_dir, bench_presets = "small,medium,large";
  std::uint64_t bench_seed = 1;
  bench->add_option("--corpus", bench_dir, "corpus directory")->required();
  bench->add_option("--presets", bench_presets, "comma-separated preset list");
  bench->add_option("--seed", bench_seed, "parameter init seed");

  // ---- dump-traj ----
  auto* dump = app.add_subcommand("dump-traj", "dump one channel as (frame, value) text");
  std::string dt_in, dt_channel, dt_out;
  dump->add_option("--input", dt_in, "feature file")->required();
  dump->add_option("--channel", dt_channel, "channel name, e.g. mcep0")->required();
  dump->add_option("--out", dt_out, "output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  if (gen->parsed()) {
    Manifest m = generate_corpus(corpus_cfg, gen_out, threads);
    std::size_t total = 0;
    for (const auto& e : m.entries) total += e.frames;
    std::cout << "wrote " << m.entries.size() << " songs, " << total << " frames to " << gen_out
              << "\n";
    return 0;
  }

  if (stats->parsed()) {
    Manifest m = read_manifest(stats_dir);
    std::size_t total = 0, train_frames = 0, test_frames = 0, states = 0;
    for (const auto& e : m.entries) {
      FeatureFile ff = read_features(std::filesystem::path(stats_dir) / e.feature_path);
      require(ff.data.rows() == e.frames,
              e.feature_path + ": frame count differs from manifest");
      StateAlignment align =
          parse_alignment_file(std::filesystem::path(stats_dir) / e.align_path);
      total += e.frames;
      states += align.entries.size();
      (e.train ? train_frames : test_frames) += e.frames;
    }
    std::cout << "songs " << m.entries.size() << "\nframes " << total << " (train "
              << train_frames << ", test " << test_frames << ")\nstates " << states
              << "\nframes_per_state " << fmt_double(static_cast<double>(total) / states)
              << "\n";
    return 0;
  }

  if (train->parsed()) {
    Manifest manifest = read_manifest(train_dir);
    ModelConfig arch;
    {
      // dimensions are finalized inside train_model; presets only need
      // plausible placeholders to validate
      const AcousticLayout& layout = manifest.layout;
      const int static_dim = static_cast<int>(layout.dim());
      if (!train_config.empty())
        arch = parse_model_config_file(train_config, 1, static_dim, layout);
      else
        arch = model_preset(train_preset, 1, static_dim, layout.editable_indices());
    }
    if (train_mode == "baseline") {
      arch.kind = ModelKind::Baseline;
      arch.split.enabled = false;
    } else {
      arch.kind = ModelKind::Proposed;
      arch.mode = parse_drive_mode(train_mode);
    }
    std::vector<std::string> log;
    TrainedModel tm = train_model(train_dir, manifest, arch, train_opts, &log);
    GenerateOptions eval_opts;
    eval_opts.threads = threads;
    HoldoutMetrics hm = evaluate_holdout(tm, train_dir, manifest,
                                         arch.kind == ModelKind::Baseline
                                             ? DriveMode::FrameDriven
                                             : arch.mode,
                                         eval_opts);
    log.push_back("holdout rmse " + fmt_double(hm.rmse) + " msd_pred " +
                  fmt_double(hm.msd_pred) + " msd_reference " + fmt_double(hm.msd_reference));
    save_checkpoint(train_out, tm);
    std::string log_text;
    for (const auto& line : log) log_text += line + "\n";
    write_file_atomic(train_log.empty() ? train_out + ".log" : train_log, log_text);
    std::cout << log.back() << "\ncheckpoint " << train_out << "\n";
    return 0;
  }

  if (synth->parsed()) {
    require(!sy_wav.empty() || !sy_feats.empty(),
            "synth: need --out-wav and/or --out-feats");
    TrainedModel tm = load_checkpoint(sy_ckpt);
    Score score = parse_score_file(sy_score);
    StateAlignment align = alignment_for_score(score, sy_align, tm, sy_seed);
    const bool baseline = tm.config.kind == ModelKind::Baseline;
    DriveMode mode = tm.config.mode;
    if (!sy_mode.empty()) {
      require(!baseline, "synth: --mode applies to proposed checkpoints only");
      mode = parse_drive_mode(sy_mode);
    }
    sy_opts.threads = threads;
    AcousticSequence seq = synthesize_features(score, align, tm, mode, baseline, sy_opts);
    if (sy_rate > 0.0) seq.sample_rate = sy_rate;
    if (!sy_feats.empty()) {
      FeatureFile ff;
      ff.channel_names = seq.layout.channel_names();
      ff.data = seq.frames;
      ff.frame_shift = seq.frame_shift;
      ff.sample_rate = seq.sample_rate;
      write_features(sy_feats, ff);
    }
    if (!sy_wav.empty()) {
      std::vector<double> wave = vocoder::synthesize_waveform(seq, sy_seed);
      vocoder::write_wav(sy_wav, wave, static_cast<int>(seq.sample_rate));
    }
    std::cout << "synthesized " << seq.frame_count() << " frames\n";
    return 0;
  }

  if (mlpgc->parsed()) {
    FeatureFile in = read_features(mr_in);
    const std::size_t width = in.data.cols();
    WindowSet windows = default_windows();
    std::size_t D = mr_static_dim > 0 ? static_cast<std::size_t>(mr_static_dim)
                                      : width / windows.count();
    require(D * windows.count() == width,
            "mlpg-run: channel count must equal windows x static dim");
    mlpg::GaussianSequence seq;
    seq.means = in.data;
    seq.variances = Matrix(in.data.rows(), width, 1.0);
    if (!mr_ckpt.empty()) {
      TrainedModel tm = load_checkpoint(mr_ckpt);
      require(tm.covariance.variance.size() == width,
              "mlpg-run: checkpoint covariance width mismatch");
      windows = tm.windows;
      for (std::size_t t = 0; t < seq.variances.rows(); ++t)
        for (std::size_t d = 0; d < width; ++d)
          seq.variances(t, d) = tm.covariance.variance[d];
    }
    Matrix statics = mlpg::generate(seq, windows);
    FeatureFile out;
    out.frame_shift = in.frame_shift;
    out.sample_rate = in.sample_rate;
    out.channel_names.assign(in.channel_names.begin(), in.channel_names.begin() + D);
    out.data = std::move(statics);
    write_features(mr_out, out);
    std::cout << "mlpg: " << out.data.rows() << " frames, " << D << " channels\n";
    return 0;
  }

  if (bench->parsed()) {
    Manifest manifest = read_manifest(bench_dir);
    // frames/states ratio of the whole corpus
    std::size_t frames = 0, states = 0;
    for (const auto& e : manifest.entries) {
      StateAlignment align =
          parse_alignment_file(std::filesystem::path(bench_dir) / e.align_path);
      frames += e.frames;
      states += align.entries.size();
    }
    const double fps = 1.0 / manifest.frame_shift;
    // MACs per second of output features: frames_s frames of CNN work and
    // states_s FFNN evaluations
    const std::uint64_t frames_s = static_cast<std::uint64_t>(std::llround(fps));
    require(frames_s % 4 == 0, "bench: frames per second must divide by 4");
    const double states_per_frame = static_cast<double>(states) / frames;

    // a context config to size the FFNN input like a trained model's
    ContextConfig ctx;
    ctx.inventory = manifest.inventory;
    ctx.states_per_phoneme = manifest.states_per_phoneme;
    const int input_dim = static_cast<int>(ctx.dim()) + 1;
    const int static_dim = static_cast<int>(manifest.layout.dim());

    // wall-time probe input: one second of synthetic feature data
    const std::size_t probe_T = frames_s;
    const std::size_t probe_states =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(probe_T * states_per_frame)));

    std::cout << "corpus frames " << frames << ", states " << states << ", frames_per_state "
              << fmt_double(static_cast<double>(frames) / states) << "\n";
    std::cout << "config mode macs_per_s ffnn_macs_per_s cnn_macs_per_s head1_macs_per_s "
                 "ffnn_invocations_per_s wall_ms_per_s reduction\n";

    std::string preset;
    std::stringstream presets(bench_presets);
    while (std::getline(presets, preset, ',')) {
      ModelConfig cfg =
          model_preset(preset, input_dim, static_dim, manifest.layout.editable_indices());
      Model model(cfg);
      Rng rng(mix_seed(bench_seed, 7));
      model.init_params(rng);

      const std::uint64_t states_s =
          static_cast<std::uint64_t>(std::llround(frames_s * states_per_frame));
      const std::uint64_t macs_frame = model.macs_frame_mode(frames_s);
      const std::uint64_t macs_state = model.macs_state_mode(frames_s, states_s);

      // probe tensors
      Rng data_rng(mix_seed(bench_seed, 8));
      SequenceTensor ffnn_in(static_cast<std::size_t>(cfg.input_dim), probe_T);
      for (auto& v : ffnn_in.v) v = uniform(data_rng, 0.0, 1.0);
      SequenceTensor positions(static_cast<std::size_t>(cfg.position_dim), probe_T);
      for (auto& v : positions.v) v = uniform(data_rng, 0.0, 1.0);
      SequenceTensor state_in(static_cast<std::size_t>(cfg.input_dim), probe_states);
      for (auto& v : state_in.v) v = uniform(data_rng, 0.0, 1.0);
      std::vector<StateSpan> spans;
      for (std::size_t s = 0; s < probe_states; ++s) {
        const std::size_t b = s * probe_T / probe_states;
        const std::size_t e = (s + 1) * probe_T / probe_states;
        spans.push_back({s, b, e});
      }

      for (const char* mode : {"frame", "state"}) {
        const bool is_state = std::string(mode) == "state";
        model.reset_ffnn_invocations();
        const auto t0 = std::chrono::steady_clock::now();
        int reps = 0;
        double elapsed = 0.0;
        do {
          if (is_state)
            model.forward_state(state_in, spans, positions, false, nullptr, nullptr);
          else
            model.forward_frame(ffnn_in, positions, false, nullptr, nullptr);
          ++reps;
          elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        } while (elapsed < 0.2);
        const double wall_ms = 1000.0 * elapsed / reps;
        const std::uint64_t invocations = model.ffnn_invocations() / reps;
        const std::uint64_t macs = is_state ? macs_state : macs_frame;
        const double reduction =
            is_state ? 100.0 * (1.0 - static_cast<double>(macs_state) / macs_frame) : 0.0;
        std::cout << preset << " " << mode << " " << macs << " "
                  << model.macs_ffnn(is_state ? states_s : frames_s) << " "
                  << model.macs_cnn(frames_s) << " "
                  << (cfg.split.enabled ? std::to_string(model.macs_head1(frames_s)) : "-")
                  << " " << invocations << " " << fmt_double(wall_ms) << " "
                  << (is_state ? fmt_double(reduction) + "%" : "-") << "\n";
      }
    }
    return 0;
  }

  if (dump->parsed()) {
    FeatureFile in = read_features(dt_in);
    const std::size_t c = in.channel_index(dt_channel);
    std::string text;
    for (std::size_t t = 0; t < in.data.rows(); ++t)
      text += std::to_string(t) + "\t" + fmt_double(in.data(t, c)) + "\n";
    if (dt_out.empty())
      std::cout << text;
    else
      write_file_atomic(dt_out, text);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::ParseError&) {
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
