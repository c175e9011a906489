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

#include "uwpose/cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "uwpose/config.hpp"
#include "uwpose/error.hpp"
#include "uwpose/io.hpp"
#include "uwpose/pipeline.hpp"
#include "uwpose/rng.hpp"
#include "uwpose/synth.hpp"

namespace fs = std::filesystem;

namespace uwpose {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// FNV-1a; per-object seed salts must not depend on config order.
std::uint64_t salt_of(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t object_seed(std::uint64_t seed, const std::string& id) {
  return SeededRng(seed).fork(salt_of(id)).next_u64();
}

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

PipelineConfig resolve_config(const Globals& g) {
  PipelineConfig c = g.config.empty() ? PipelineConfig::defaults() : PipelineConfig::load(g.config);
  if (g.seed) c.seed = *g.seed;
  if (g.config.empty()) c.validate();
  return c;
}

fs::path out_dir(const Globals& g, const std::string& fallback) {
  const fs::path p = g.out.empty() ? fs::path(fallback) : fs::path(g.out);
  fs::create_directories(p);
  return p;
}

std::vector<const ObjectConfig*> select_objects(const PipelineConfig& c,
                                                const std::vector<std::string>& ids) {
  std::vector<const ObjectConfig*> out;
  if (ids.empty()) {
    for (const auto& o : c.objects) out.push_back(&o);
  } else {
    for (const auto& id : ids) out.push_back(&c.object(id));
  }
  return out;
}

fs::path weights_path(const fs::path& dir, const std::string& id) { return dir / (id + ".weights"); }
fs::path codebook_path(const fs::path& dir, const std::string& id) { return dir / (id + ".codebook"); }

void require_path(const fs::path& p) {
  if (!fs::exists(p)) throw DataError("missing file " + p.string());
}

int cmd_gen(const Globals& g, std::optional<int> frames, std::optional<int> scenes, std::ostream& out) {
  PipelineConfig c = resolve_config(g);
  if (frames) c.generator.frames = *frames;
  if (scenes) c.generator.scenes = *scenes;
  c.validate();
  const fs::path root = out_dir(g, "data");
  std::map<std::string, TriMesh> meshes;
  for (const auto& o : c.objects) meshes[o.id] = mesh_from_spec(o.mesh, c.base_dir);
  const SceneDataset ds = generate_synthetic_scenes(c, meshes, {}, c.generator.frames,
                                                    SeededRng(c.seed).fork(0).next_u64(), root);
  nlohmann::json cj = c;
  write_json(cj, root / "config.json");
  out << "wrote " << ds.frame_count() << " frames in " << ds.scenes.size() << " scene(s) to "
      << root.string() << '\n';
  return kExitOk;
}

int cmd_train(const Globals& g, const std::vector<std::string>& ids, std::optional<int> iterations,
              bool quiet, std::ostream& out) {
  PipelineConfig c = resolve_config(g);
  const fs::path dir = out_dir(g, "models");
  for (const ObjectConfig* o : select_objects(c, ids)) {
    ObjectConfig oc = *o;
    if (iterations) oc.train.iterations = *iterations;
    oc.train.validate();
    const TriMesh mesh = mesh_from_spec(oc.mesh, c.base_dir);
    const std::uint64_t seed = object_seed(c.seed, oc.id);
    const int total = oc.train.iterations;
    const auto progress = [&](int it, double loss) {
      if (!quiet && (it % 50 == 0 || it + 1 == total)) {
        out << oc.id << " iteration " << it + 1 << "/" << total << " loss " << loss << '\n';
      }
    };
    TrainResult r = train_object(oc, mesh, c.camera, c.background_count, seed, progress);
    nlohmann::json tc = oc.train;
    tc["seed"] = seed;
    save_checkpoint(r.params, weights_path(dir, oc.id),
                    {{"object_id", oc.id}, {"train", tc}, {"augmentation", oc.augmentation},
                     {"train_views", oc.train_views}});
    write_json({{"object_id", oc.id}, {"losses", r.losses}}, dir / (oc.id + ".losses.json"));
    out << "saved " << weights_path(dir, oc.id).string() << '\n';
  }
  return kExitOk;
}

int cmd_codebook(const Globals& g, const std::string& models, const std::vector<std::string>& ids,
                 std::ostream& out) {
  PipelineConfig c = resolve_config(g);
  const fs::path in_dir = models.empty() ? fs::path(g.out.empty() ? "models" : g.out) : fs::path(models);
  const fs::path dir = out_dir(g, in_dir.string());
  for (const ObjectConfig* o : select_objects(c, ids)) {
    const fs::path wp = weights_path(in_dir, o->id);
    require_path(wp);
    const EncoderParams params = load_checkpoint(wp);
    const TriMesh mesh = mesh_from_spec(o->mesh, c.base_dir);
    const Codebook cb = build_object_codebook(*o, mesh, params, c.camera);
    save_codebook(cb, codebook_path(dir, o->id));
    out << "saved " << codebook_path(dir, o->id).string() << " (" << cb.size() << " views)\n";
  }
  return kExitOk;
}

struct LoadedModels {
  std::vector<std::unique_ptr<Codebook>> codebooks;
  std::vector<EncoderParams> params;
  EstimatorMap estimators;
};

LoadedModels load_models(const PipelineConfig& c, const fs::path& models) {
  LoadedModels m;
  for (const auto& o : c.objects) {
    const fs::path cp = codebook_path(models, o.id);
    const fs::path wp = weights_path(models, o.id);
    require_path(cp);
    require_path(wp);
    m.codebooks.push_back(std::make_unique<Codebook>(load_codebook(cp)));
    m.params.push_back(load_checkpoint(wp));
    m.estimators[o.id] = std::make_unique<PoseEstimator>(m.params.back(), *m.codebooks.back());
  }
  return m;
}

int cmd_estimate(const Globals& g, const std::string& dataset, const std::string& models,
                 const std::string& source, bool no_ray, std::ostream& out) {
  PipelineConfig c = resolve_config(g);
  const DetectionSource src = parse_detection_source(source);
  LoadedModels m = load_models(c, models);
  const SceneDataset ds = load_dataset(dataset);
  const fs::path dir = out_dir(g, "run");
  EstimateOptions opt;
  opt.ray_correction = c.ray_correction && !no_ray;
  const PipelineResult r = run_pipeline(ds, m.estimators, src, c.detector, opt);
  write_json(estimates_to_json(r.records), dir / "estimates.json");
  write_json(timing_to_json(r.timing), dir / "timing.json");
  std::size_t ok = 0;
  for (const auto& rec : r.records) ok += rec.estimate.has_value();
  out << "estimated " << ok << " of " << r.records.size() << " detections; wrote "
      << (dir / "estimates.json").string() << '\n';
  return kExitOk;
}

int cmd_eval_pose(const Globals& g, const std::string& dataset, const std::string& estimates,
                  std::ostream& out) {
  PipelineConfig c = resolve_config(g);
  const fs::path dir = out_dir(g, "run");
  const fs::path ep = estimates.empty() ? dir / "estimates.json" : fs::path(estimates);
  const SceneDataset ds = load_dataset(dataset);
  const auto records = estimates_from_json(read_json(ep));
  const EvalReport rep = evaluate_poses(ds, records, c.eval);
  write_json(rep.to_json(), dir / "report.json");
  const std::string text = rep.to_text();
  std::ofstream(dir / "report.txt") << text;
  out << text;
  return kExitOk;
}

int cmd_eval_detect(const Globals& g, const std::string& dataset, const std::string& estimates,
                    std::ostream& out) {
  PipelineConfig c = resolve_config(g);
  const fs::path dir = out_dir(g, "run");
  const SceneDataset ds = load_dataset(dataset);
  std::vector<Detection> dets;
  if (!estimates.empty()) {
    dets = flatten_detections(ds, estimates_from_json(read_json(estimates)));
  } else {
    std::vector<EstimateRecord> recs;
    for (const auto& s : ds.scenes) {
      for (const auto& f : s.frames) {
        if (!f.detections) continue;
        for (const auto& d : *f.detections) recs.push_back({s.id, f.frame_id, d, std::nullopt, ""});
      }
    }
    dets = flatten_detections(ds, recs);
  }
  const DetectionReport rep = evaluate_detections(ds, dets, c.eval);
  write_json(rep.to_json(), dir / "detect_report.json");
  const std::string text = rep.to_text();
  std::ofstream(dir / "detect_report.txt") << text;
  out << text;
  return kExitOk;
}

int cmd_gt_offset(const Globals& g, const std::string& dataset, const std::vector<std::string>& ids,
                  std::ostream& out) {
  const SceneDataset ds = load_dataset(dataset);
  const fs::path dir = g.out.empty() ? fs::path(dataset) / "objects" : out_dir(g, g.out);
  std::vector<std::string> objects = ids;
  if (objects.empty()) {
    for (const auto& [id, e] : ds.objects) objects.push_back(id);
  }
  int written = 0;
  for (const auto& id : objects) {
    if (!ds.objects.count(id)) throw DataError("object '" + id + "' is not in the dataset");
    std::vector<PoseSE3> offsets;
    for (const auto& s : ds.scenes) {
      for (const auto& f : s.frames) {
        if (!f.bundle_pose) continue;
        for (const auto& a : f.gt) {
          if (a.class_id == id && a.pose) offsets.push_back(bundle_offset(*a.pose, *f.bundle_pose));
        }
      }
    }
    if (offsets.empty()) {
      if (!ids.empty()) throw DataError("no calibration frames with both poses for '" + id + "'");
      continue;
    }
    const PoseSE3 mean = average_offsets(offsets);
    double max_t = 0, max_r = 0;
    for (const auto& o : offsets) {
      const PoseError e = pose_errors(o, mean);
      max_t = std::max(max_t, e.t_e);
      max_r = std::max(max_r, e.r_e);
    }
    write_json({{"object_id", id},
                {"T_O_B", pose_to_json(mean)},
                {"frames", offsets.size()},
                {"max_translation_spread_mm", max_t},
                {"max_rotation_spread_deg", max_r}},
               dir / (id + ".offset.json"));
    out << id << ": offset from " << offsets.size() << " frame(s), spread " << max_t << " mm / "
        << max_r << " deg\n";
    ++written;
  }
  if (written == 0) throw DataError("no frames carry both an object pose and a bundle pose");
  return kExitOk;
}

int cmd_bench(const Globals& g, const std::string& models, const std::string& dataset,
              std::optional<int> iterations, std::ostream& out) {
  PipelineConfig c = resolve_config(g);
  const int iters = iterations.value_or(c.bench_iterations);
  if (iters < 2) throw std::invalid_argument("--iterations must be >= 2");
  LoadedModels m = load_models(c, models);
  const ObjectConfig& o = c.objects.front();
  PoseEstimator& est = *m.estimators.at(o.id);

  Image image;
  BBox box;
  CameraIntrinsics cam = c.camera;
  if (!dataset.empty()) {
    const SceneDataset ds = load_dataset(dataset);
    bool found = false;
    for (const auto& s : ds.scenes) {
      for (const auto& f : s.frames) {
        for (const auto& a : f.gt) {
          if (!found && a.class_id == o.id) {
            image = read_png(f.rgb);
            box = a.bbox;
            cam = ds.camera;
            found = true;
          }
        }
      }
    }
    if (!found) throw DataError("dataset has no frame showing '" + o.id + "'");
  } else {
    const TriMesh mesh = mesh_from_spec(o.mesh, c.base_dir);
    const RenderOutput r =
        render(mesh, {random_rotation(c.seed), Vec3(0, 0, o.render_distance)}, cam);
    image = r.color;
    box = r.bbox;
  }
  const CropSettings& cs = est.codebook().crop;
  const Image crop = crop_square(image, box, cs.pad_factor, cs.size);
  const Eigen::VectorXf code = est.encode_crop(crop);

  std::vector<LatencyStats> stats;
  stats.push_back(measure_latency("encode", iters, [&] { est.encode_crop(crop); }));
  stats.push_back(measure_latency("lookup", iters, [&] { lookup(est.codebook(), code, 1); }));
  stats.push_back(measure_latency("end_to_end", iters, [&] { est.estimate(image, box, cam); }));

  nlohmann::json j = {{"iterations", iters}, {"warmup_discarded", 1},
                      {"codebook_size", est.codebook().size()}, {"stages", nlohmann::json::array()}};
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-12s %10s %10s %10s %10s\n", "stage", "p50 ms", "p90 ms", "p99 ms",
                "mean ms");
  out << buf;
  for (const auto& s : stats) {
    j["stages"].push_back({{"name", s.name}, {"p50_ms", s.p50}, {"p90_ms", s.p90},
                           {"p99_ms", s.p99}, {"mean_ms", s.mean}});
    std::snprintf(buf, sizeof buf, "%-12s %10.3f %10.3f %10.3f %10.3f\n", s.name.c_str(), s.p50,
                  s.p90, s.p99, s.mean);
    out << buf;
  }
  write_json(j, out_dir(g, "run") / "bench.json");
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"uwpose: codebook-based 6D pose estimation toolkit", "uwpose"};
  app.fallthrough();
  app.require_subcommand(1);

  Globals g;
  std::uint64_t seed_value = 0;
  app.add_option("--config", g.config, "pipeline config JSON");
  auto* seed_opt = app.add_option("--seed", seed_value, "override the config seed");
  app.add_option("--out", g.out, "output directory");

  std::optional<int> frames, scenes, iterations;
  std::vector<std::string> objects;
  std::string dataset, models, estimates, source = "gt";
  bool no_ray = false, quiet = false;

  auto* gen = app.add_subcommand("gen", "generate synthetic scenes");
  gen->add_option("--frames", frames, "frames per scene");
  gen->add_option("--scenes", scenes, "number of scenes");

  auto* train = app.add_subcommand("train", "train one encoder per object");
  train->add_option("--object", objects, "object id (repeatable; default all)");
  train->add_option("--iterations", iterations, "override training iterations");
  train->add_flag("--quiet", quiet, "no progress output");

  auto* codebook = app.add_subcommand("codebook", "build codebooks from trained encoders");
  codebook->add_option("--models", models, "directory with <id>.weights (default: --out)");
  codebook->add_option("--object", objects, "object id (repeatable; default all)");

  auto* estimate = app.add_subcommand("estimate", "run detection and pose estimation");
  estimate->add_option("--dataset", dataset, "dataset root")->required();
  estimate->add_option("--models", models, "directory with weights and codebooks")->required();
  estimate->add_option("--detections", source, "gt, naive or file")
      ->check(CLI::IsMember({"gt", "naive", "file"}));
  estimate->add_flag("--no-ray-correction", no_ray, "keep the retrieved rotation as is");

  auto* eval_pose = app.add_subcommand("eval-pose", "pose metrics, recall tables and medians");
  eval_pose->add_option("--dataset", dataset, "dataset root")->required();
  eval_pose->add_option("--estimates", estimates, "estimates.json (default: <out>/estimates.json)");

  auto* eval_detect = app.add_subcommand("eval-detect", "detection AP and mAP");
  eval_detect->add_option("--dataset", dataset, "dataset root")->required();
  eval_detect->add_option("--estimates", estimates,
                          "estimates.json to score (default: the dataset's detections.json files)");

  auto* gt_offset = app.add_subcommand("gt-offset", "object-to-bundle offsets from calibration frames");
  gt_offset->add_option("--dataset", dataset, "dataset root")->required();
  gt_offset->add_option("--object", objects, "object id (repeatable; default all)");

  auto* bench = app.add_subcommand("bench", "encode, lookup and end-to-end latency percentiles");
  bench->add_option("--models", models, "directory with weights and codebooks")->required();
  bench->add_option("--dataset", dataset, "take the query from this dataset");
  bench->add_option("--iterations", iterations, "timed iterations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (gen->parsed()) return cmd_gen(g, frames, scenes, out);
    if (train->parsed()) return cmd_train(g, objects, iterations, quiet, out);
    if (codebook->parsed()) return cmd_codebook(g, models, objects, out);
    if (estimate->parsed()) return cmd_estimate(g, dataset, models, source, no_ray, out);
    if (eval_pose->parsed()) return cmd_eval_pose(g, dataset, estimates, out);
    if (eval_detect->parsed()) return cmd_eval_detect(g, dataset, estimates, out);
    if (gt_offset->parsed()) return cmd_gt_offset(g, dataset, objects, out);
    if (bench->parsed()) return cmd_bench(g, models, dataset, iterations, out);
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const TrainingError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace uwpose
