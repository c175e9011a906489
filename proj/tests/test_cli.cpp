// Copyright 2026 The uwpose Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "uwpose/cli.hpp"
#include "uwpose/error.hpp"
#include "uwpose/io.hpp"
#include "uwpose/mesh.hpp"
#include "uwpose/pipeline.hpp"
#include "uwpose/synth.hpp"

using namespace uwpose;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "uwpose");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "uwpose_cli_tests" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

// Tiny everything: the chain has to finish in seconds.
const char* kTinyConfig = R"({
  "seed": 3,
  "camera": {"fx": 150, "fy": 150, "cx": 80, "cy": 60, "width": 160, "height": 120},
  "objects": [{"id": "cube", "mesh": "builtin:cube",
               "train": {"iterations": 2, "batch_size": 4, "latent_dim": 16},
               "train_views": 8, "grid": {"views": 8, "inplane": 2}, "crop": {"size": 32}}],
  "generator": {"frames": 3, "depth_min": 500, "depth_max": 1000},
  "background_count": 2,
  "bench_iterations": 3
})";

fs::path write_tiny_config(const fs::path& dir) {
  const fs::path p = dir / "tiny.json";
  std::ofstream(p) << kTinyConfig;
  return p;
}

PipelineConfig tiny_pipeline_config() {
  return config_from_json(nlohmann::json::parse(kTinyConfig), ".");
}

}  // namespace

TEST(Cli, SubcommandHelpExitsZero) {
  const auto r = run({"eval-pose", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(contains(r.out, "--dataset"));
}

TEST(Cli, UsageErrorsExitOne) {
  const auto unknown = run({"frobnicate"});
  EXPECT_EQ(unknown.code, 1);
  EXPECT_TRUE(contains(unknown.err, "eval-pose"));  // usage lists the subcommands
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"eval-pose"}).code, 1);  // --dataset is required
  EXPECT_EQ(run({"gen", "--frames", "many"}).code, 1);
  const fs::path d = fresh_dir("usage");
  EXPECT_EQ(run({"--out", d.string(), "estimate", "--dataset", d.string(), "--models", d.string(),
                 "--detections", "oracle"})
                .code,
            1);
}

TEST(Cli, MissingConfigIsDataError) {
  const auto r = run({"--config", "/nonexistent/cfg.json", "gen"});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.err, "/nonexistent/cfg.json"));
}

TEST(Cli, EstimateWithoutCodebookNamesThePath) {
  const fs::path d = fresh_dir("no_codebook");
  const fs::path cfg = write_tiny_config(d);
  const auto r = run({"--config", cfg.string(), "--out", (d / "run").string(), "estimate", "--dataset",
                      (d / "data").string(), "--models", (d / "models").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.err, (d / "models" / "cube.codebook").string())) << r.err;
}

TEST(Cli, SmokeChain) {
  const fs::path d = fresh_dir("chain");
  const std::string cfg = write_tiny_config(d).string();
  const std::string data = (d / "data").string(), models = (d / "models").string(),
                    out = (d / "run").string();

  auto ok = [](const CliResult& r) {
    EXPECT_EQ(r.code, 0) << r.err;
    return r.code == 0;
  };
  ASSERT_TRUE(ok(run({"--config", cfg, "--out", data, "gen"})));
  EXPECT_TRUE(fs::exists(d / "data" / "scenes" / "000000" / "gt.json"));
  ASSERT_TRUE(ok(run({"--config", cfg, "--out", models, "train", "--quiet"})));
  EXPECT_TRUE(fs::exists(d / "models" / "cube.weights"));
  EXPECT_TRUE(fs::exists(d / "models" / "cube.losses.json"));
  ASSERT_TRUE(ok(run({"--config", cfg, "--out", models, "codebook"})));
  EXPECT_TRUE(fs::exists(d / "models" / "cube.codebook"));

  const auto est = run({"--config", cfg, "--out", out, "estimate", "--dataset", data, "--models", models});
  ASSERT_TRUE(ok(est));
  EXPECT_TRUE(contains(est.out, "estimated 3 of 3"));
  const auto records = estimates_from_json(read_json(d / "run" / "estimates.json"));
  EXPECT_EQ(records.size(), 3u);

  const auto ev = run({"--config", cfg, "--out", out, "eval-pose", "--dataset", data});
  ASSERT_TRUE(ok(ev));
  EXPECT_TRUE(fs::exists(d / "run" / "report.json"));
  EXPECT_EQ(read_json(d / "run" / "report.json").at("records").size(), 3u);

  const auto det = run({"--config", cfg, "--out", out, "eval-detect", "--dataset", data, "--estimates",
                        (d / "run" / "estimates.json").string()});
  ASSERT_TRUE(ok(det));
  // Ground truth boxes were the detections, so every threshold is met.
  EXPECT_DOUBLE_EQ(read_json(d / "run" / "detect_report.json").at("map").get<double>(), 1.0);

  const auto naive = run({"--config", cfg, "--out", (d / "naive").string(), "estimate", "--dataset", data,
                          "--models", models, "--detections", "naive"});
  EXPECT_TRUE(ok(naive));

  const auto bench = run({"--config", cfg, "--out", out, "bench", "--models", models, "--dataset", data});
  ASSERT_TRUE(ok(bench));
  const auto bj = read_json(d / "run" / "bench.json");
  EXPECT_EQ(bj.at("iterations"), 3);
  ASSERT_EQ(bj.at("stages").size(), 3u);
  for (const auto& s : bj.at("stages")) EXPECT_LE(s.at("p50_ms").get<double>(), s.at("p99_ms").get<double>());

  // No calibration frames in a synthetic set.
  EXPECT_EQ(run({"gt-offset", "--dataset", data}).code, 2);
}

TEST(Cli, SeedFlagOverridesConfig) {
  const fs::path d = fresh_dir("seed");
  const std::string cfg = write_tiny_config(d).string();
  ASSERT_EQ(run({"--config", cfg, "--out", (d / "a").string(), "gen"}).code, 0);
  ASSERT_EQ(run({"--config", cfg, "--seed", "3", "--out", (d / "b").string(), "gen"}).code, 0);
  ASSERT_EQ(run({"--config", cfg, "--seed", "4", "--out", (d / "c").string(), "gen"}).code, 0);
  const auto gt = [&](const char* s) { return read_json(d / s / "scenes" / "000000" / "gt.json"); };
  EXPECT_EQ(gt("a"), gt("b"));
  EXPECT_NE(gt("a"), gt("c"));
}

TEST(Cli, GtOffsetAveragesCalibrationFrames) {
  const fs::path d = fresh_dir("gt_offset");
  PipelineConfig cfg = tiny_pipeline_config();
  SceneDataset ds = generate_synthetic_scenes(cfg, {{"cube", make_box(100, 100, 100)}}, {}, 3, 1, d / "data");
  const PoseSE3 offset{Rotation3::about_z_deg(30), Vec3(10, 0, -5)};
  for (auto& f : ds.scenes[0].frames) {
    f.bundle_pose = compose(*f.gt[0].pose, offset);
  }
  save_dataset_metadata(ds);
  const auto r = run({"--out", (d / "off").string(), "gt-offset", "--dataset", (d / "data").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = read_json(d / "off" / "cube.offset.json");
  EXPECT_EQ(j.at("frames"), 3);
  const PoseSE3 got = pose_from_json(j.at("T_O_B"));
  EXPECT_LT((got.rotation.matrix() - offset.rotation.matrix()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((got.translation - offset.translation).norm(), 1e-6);
  EXPECT_LT(j.at("max_translation_spread_mm").get<double>(), 1e-6);
}

TEST(Pipeline, EmptyDatasetGivesEmptyOutput) {
  SceneDataset ds;
  EstimatorMap none;
  const auto r = run_pipeline(ds, none, DetectionSource::kGroundTruth, {});
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(estimates_to_json(r.records).at("records").size(), 0u);
}

TEST(Pipeline, MissingEstimatorYieldsErrorRecord) {
  const fs::path d = fresh_dir("pipe_missing");
  const PipelineConfig cfg = tiny_pipeline_config();
  const SceneDataset ds = generate_synthetic_scenes(cfg, {{"cube", make_box(100, 100, 100)}}, {}, 2, 1, d);
  EstimatorMap none;
  const auto r = run_pipeline(ds, none, DetectionSource::kGroundTruth, {});
  ASSERT_EQ(r.records.size(), 2u);
  for (const auto& rec : r.records) {
    EXPECT_FALSE(rec.estimate.has_value());
    EXPECT_TRUE(contains(rec.error, "cube"));
  }
  EXPECT_EQ(r.timing.detect_ms.size(), 2u);
  EXPECT_TRUE(r.timing.estimate_ms.empty());
}

TEST(Pipeline, PerfectEstimatesScorePerfectly) {
  const fs::path d = fresh_dir("pipe_perfect");
  const PipelineConfig cfg = tiny_pipeline_config();
  const SceneDataset ds = generate_synthetic_scenes(cfg, {{"cube", make_box(100, 100, 100)}}, {}, 4, 2, d);
  std::vector<EstimateRecord> recs;
  for (const auto& f : ds.scenes[0].frames) {
    const auto& g = f.gt[0];
    EstimateRecord r{ds.scenes[0].id, f.frame_id, {g.class_id, g.bbox, 0.9, f.frame_id}, PoseEstimate{}, ""};
    r.estimate->pose = *g.pose;
    r.estimate->object_id = g.class_id;
    recs.push_back(r);
  }
  const auto back = estimates_from_json(estimates_to_json(recs));
  ASSERT_EQ(back.size(), recs.size());
  const EvalReport rep = evaluate_poses(ds, back, cfg.eval);
  ASSERT_EQ(rep.records.size(), 4u);
  for (const auto& r : rep.records) {
    EXPECT_TRUE(r.estimated);
    EXPECT_LT(r.e_add, 1e-9);
    EXPECT_EQ(r.e_cou, 0.0);
  }
  for (double v : rep.adi_recall.at("cube")) EXPECT_EQ(v, 1.0);
  ASSERT_TRUE(rep.map.has_value());
  EXPECT_DOUBLE_EQ(*rep.map, 1.0);

  const DetectionReport dr = evaluate_detections(ds, flatten_detections(ds, back), cfg.eval);
  EXPECT_DOUBLE_EQ(dr.map, 1.0);
  EXPECT_EQ(dr.ap.at("cube").size(), cfg.eval.iou_thresholds.size());
}

TEST(Pipeline, UnmatchedGroundTruthCountsAsMiss) {
  const fs::path d = fresh_dir("pipe_miss");
  const PipelineConfig cfg = tiny_pipeline_config();
  const SceneDataset ds = generate_synthetic_scenes(cfg, {{"cube", make_box(100, 100, 100)}}, {}, 2, 2, d);
  const EvalReport rep = evaluate_poses(ds, {}, cfg.eval);
  ASSERT_EQ(rep.records.size(), 2u);
  for (const auto& r : rep.records) EXPECT_FALSE(r.estimated);
  for (double v : rep.adi_recall.at("cube")) EXPECT_EQ(v, 0.0);
}

TEST(Pipeline, EstimatesFromJsonErrors) {
  EXPECT_THROW(estimates_from_json(nlohmann::json::object()), DataError);
  EXPECT_THROW(estimates_from_json(nlohmann::json::parse(R"({"records": [{"scene": "a"}]})")), DataError);
  SceneDataset ds;
  EXPECT_THROW(flatten_detections(ds, {EstimateRecord{"ghost", 0, {}, std::nullopt, ""}}), DataError);
}

TEST(Pipeline, DetectionSourceNames) {
  EXPECT_EQ(parse_detection_source("gt"), DetectionSource::kGroundTruth);
  EXPECT_EQ(parse_detection_source("naive"), DetectionSource::kNaive);
  EXPECT_EQ(parse_detection_source("file"), DetectionSource::kFile);
  EXPECT_THROW(parse_detection_source("yolo"), std::invalid_argument);
}

TEST(Percentile, NearestRank) {
  const std::vector<double> v = {15, 20, 35, 40, 50};
  EXPECT_EQ(percentile(v, 0), 15);
  EXPECT_EQ(percentile(v, 30), 20);
  EXPECT_EQ(percentile(v, 40), 20);
  EXPECT_EQ(percentile(v, 50), 35);
  EXPECT_EQ(percentile(v, 100), 50);
  EXPECT_THROW(percentile({}, 50), std::invalid_argument);
  EXPECT_THROW(percentile(v, 101), std::invalid_argument);
}

TEST(Percentile, MonotoneInQ) {
  SeededRng rng(5);
  std::vector<double> v(257);
  for (auto& x : v) x = rng.normal();
  double prev = -1e300;
  for (int q = 0; q <= 100; ++q) {
    const double p = percentile(v, q);
    EXPECT_GE(p, prev);
    prev = p;
  }
}

TEST(MeasureLatency, DropsWarmupCall) {
  int calls = 0;
  const LatencyStats s = measure_latency("noop", 5, [&] { ++calls; });
  EXPECT_EQ(calls, 6);
  EXPECT_EQ(s.samples, 5);
  EXPECT_LE(s.p50, s.p90);
  EXPECT_LE(s.p90, s.p99);
  EXPECT_THROW(measure_latency("x", 0, [] {}), std::invalid_argument);
}
