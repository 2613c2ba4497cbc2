#include "svs/generate.hpp"

#include "support/test_util.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace svs;
using testutil::random_matrix;
using testutil::random_tensor;

TEST_CASE("plan_segments: roll-off, single segment, coverage", "[generate]") {
  SegmentPlan plan = plan_segments(3900, 2000, 100);
  REQUIRE(plan.segments.size() == 2);
  CHECK(plan.segments[0].start == 0);
  CHECK(plan.segments[0].length == 2000);
  CHECK(plan.segments[1].start == 1900);
  CHECK(plan.segments[1].length == 2000);

  SegmentPlan one = plan_segments(1500, 2000, 100);
  REQUIRE(one.segments.size() == 1);
  CHECK(one.segments[0].start == 0);
  CHECK(one.segments[0].length == 1500);  // already a multiple of 4

  SegmentPlan padded = plan_segments(10, 2000, 100);
  CHECK(padded.segments[0].length == 12);

  SegmentPlan three = plan_segments(4100, 2000, 100);
  REQUIRE(three.segments.size() == 3);
  // exhaustive coverage: every frame in at least one segment
  std::vector<int> cover(4100, 0);
  for (const Segment& s : three.segments)
    for (std::size_t f = s.start; f < s.covered_end(4100); ++f) cover[f] += 1;
  for (int c : cover) CHECK(c >= 1);

  CHECK_THROWS_AS(plan_segments(0, 2000, 100), Error);
  CHECK_THROWS_AS(plan_segments(100, 2001, 100), Error);
  CHECK_THROWS_AS(plan_segments(100, 2000, 2000), Error);
  CHECK_THROWS_AS(plan_segments(100, 2000, 13), Error);
}

TEST_CASE("blend weights sum to one at every frame", "[generate]") {
  Rng rng(661);
  for (int iter = 0; iter < 40; ++iter) {
    const std::size_t seg = 4 * (2 + rng() % 30);
    const std::size_t ov = 4 * (rng() % (seg / 4));
    const std::size_t T = 1 + rng() % 400;
    SegmentPlan plan = plan_segments(T, seg, ov);
    auto weights = blend_weights(plan);
    REQUIRE(weights.size() == T);
    for (std::size_t f = 0; f < T; ++f) {
      double sum = 0.0;
      for (const auto& [si, w] : weights[f]) {
        sum += w;
        CHECK(w >= 0.0);
        CHECK(w <= 1.0);
      }
      CHECK(sum == 1.0);  // exactly, by construction
      if (weights[f].size() == 1) CHECK(weights[f][0].second == 1.0);
    }
  }
}

TEST_CASE("crossfade: constant segments stay constant, ramp is midpoint-offset", "[generate]") {
  SegmentPlan plan = plan_segments(12, 8, 4);
  REQUIRE(plan.segments.size() == 2);

  std::vector<Matrix> constant{Matrix(8, 2, 3.0), Matrix(8, 2, 3.0)};
  Matrix blended = crossfade_assemble(constant, plan);
  for (std::size_t f = 0; f < 12; ++f)
    for (std::size_t d = 0; d < 2; ++d) CHECK(blended(f, d) == Catch::Approx(3.0).margin(1e-12));

  // segment A all zeros, B all ones, overlap 4 -> 0.125 0.375 0.625 0.875
  std::vector<Matrix> ab{Matrix(8, 1, 0.0), Matrix(8, 1, 1.0)};
  Matrix faded = crossfade_assemble(ab, plan);
  CHECK(faded(4, 0) == Catch::Approx(0.125));
  CHECK(faded(5, 0) == Catch::Approx(0.375));
  CHECK(faded(6, 0) == Catch::Approx(0.625));
  CHECK(faded(7, 0) == Catch::Approx(0.875));
  // outside the overlap: verbatim copies
  CHECK(faded(3, 0) == 0.0);
  CHECK(faded(8, 0) == 1.0);
}

TEST_CASE("assembly copies non-overlap frames bit for bit", "[generate]") {
  Rng rng(662);
  SegmentPlan plan = plan_segments(500, 200, 40);
  std::vector<Matrix> outputs;
  for (const Segment& s : plan.segments) outputs.push_back(random_matrix(rng, s.length, 3));
  Matrix out = crossfade_assemble(outputs, plan);
  auto weights = blend_weights(plan);
  for (std::size_t f = 0; f < 500; ++f) {
    if (weights[f].size() != 1) continue;
    const auto [si, w] = weights[f][0];
    const Segment& s = plan.segments[si];
    for (std::size_t d = 0; d < 3; ++d) CHECK(out(f, d) == outputs[si](f - s.start, d));
  }
}

namespace {

ModelConfig probe_config() {
  ModelConfig cfg;
  cfg.kind = ModelKind::Proposed;
  cfg.input_dim = 4;
  cfg.position_dim = 5;
  cfg.static_dim = 3;
  cfg.ffnn_layers = 2;
  cfg.ffnn_width = 6;
  cfg.dropout_p = 0.0;
  cfg.cnn_channels = 6;
  cfg.residual_blocks = 1;
  return cfg;
}

}  // namespace

TEST_CASE("multi-segment inference equals single-segment inference inside the field",
          "[generate]") {
  ModelConfig cfg = probe_config();
  Model model(cfg);
  Rng rng(663);
  model.init_params(rng);

  const std::size_t T = 600;
  SequenceInputs in;
  in.ffnn_dim = 4;
  in.features = random_matrix(rng, T, 9, 0.0, 1.0);

  SegmentPlan whole = plan_segments(T, 600, 0);
  SegmentPlan pieces = plan_segments(T, 200, 40);
  REQUIRE(pieces.segments.size() >= 3);
  Matrix full = infer_segments(model, in, whole, DriveMode::FrameDriven, 1);
  Matrix assembled = infer_segments(model, in, pieces, DriveMode::FrameDriven, 2);

  const long hw = (model.receptive_field() - 1) / 2;
  auto weights = blend_weights(pieces);
  std::size_t compared = 0;
  for (std::size_t f = 0; f < T; ++f) {
    bool inside_all = true;
    for (const auto& [si, w] : weights[f]) {
      const Segment& s = pieces.segments[si];
      const long lo = static_cast<long>(f) - hw;
      const long hi = static_cast<long>(f) + hw;
      if (lo < static_cast<long>(s.start) ||
          hi >= static_cast<long>(s.covered_end(T)))
        inside_all = false;
    }
    if (!inside_all) continue;
    ++compared;
    for (std::size_t d = 0; d < 3; ++d)
      REQUIRE(assembled(f, d) == Catch::Approx(full(f, d)).margin(1e-10));
  }
  CHECK(compared > T / 2);
}

TEST_CASE("state-driven segment inference matches the whole-song run", "[generate]") {
  ModelConfig cfg = probe_config();
  Model model(cfg);
  Rng rng(664);
  model.init_params(rng);

  const std::size_t T = 480;
  SequenceInputs in;
  in.ffnn_dim = 4;
  in.features = random_matrix(rng, T, 9, 0.0, 1.0);
  // random spans tiling [0, T)
  std::size_t cursor = 0, idx = 0;
  while (cursor < T) {
    std::size_t len = 3 + rng() % 12;
    if (cursor + len > T) len = T - cursor;
    in.spans.push_back({idx++, cursor, cursor + len});
    cursor += len;
  }
  in.state_features = random_matrix(rng, in.spans.size(), 4, 0.0, 1.0);

  SegmentPlan whole = plan_segments(T, 480, 0);
  SegmentPlan pieces = plan_segments(T, 160, 40);
  Matrix full = infer_segments(model, in, whole, DriveMode::StateDriven, 1);
  Matrix assembled = infer_segments(model, in, pieces, DriveMode::StateDriven, 2);

  const long hw = (model.receptive_field() - 1) / 2;
  auto weights = blend_weights(pieces);
  for (std::size_t f = 0; f < T; ++f) {
    bool inside_all = true;
    for (const auto& [si, w] : weights[f]) {
      const Segment& s = pieces.segments[si];
      if (static_cast<long>(f) - hw < static_cast<long>(s.start) ||
          static_cast<long>(f) + hw >= static_cast<long>(s.covered_end(T)))
        inside_all = false;
    }
    if (!inside_all) continue;
    for (std::size_t d = 0; d < 3; ++d)
      REQUIRE(assembled(f, d) == Catch::Approx(full(f, d)).margin(1e-10));
  }
}
