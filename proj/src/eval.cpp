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

#include "uwpose/eval.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <functional>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "uwpose/error.hpp"
#include "uwpose/rng.hpp"

namespace uwpose {

void Detection::validate() const {
  if (!(bbox.x_min < bbox.x_max) || !(bbox.y_min < bbox.y_max)) {
    throw std::invalid_argument("detection bbox must satisfy min < max");
  }
  if (!(score >= 0.0 && score <= 1.0)) throw std::invalid_argument("detection score outside [0,1]");
}

namespace {

std::vector<Vec3> transformed(const std::vector<Vec3>& pts, const PoseSE3& p) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const auto& x : pts) out.push_back(transform_point(p, x));
  return out;
}

void require_points(const std::vector<Vec3>& pts) {
  if (pts.empty()) throw std::invalid_argument("model point set is empty");
}

// Uniform grid over a point set for exact nearest-neighbor distances.
class PointGrid {
 public:
  explicit PointGrid(const std::vector<Vec3>& pts) : pts_(pts) {
    lo_ = hi_ = pts.front();
    for (const auto& p : pts) {
      lo_ = lo_.cwiseMin(p);
      hi_ = hi_.cwiseMax(p);
    }
    const Vec3 ext = (hi_ - lo_).cwiseMax(1e-9);
    const double vol = ext.prod();
    cell_ = std::cbrt(vol / static_cast<double>(pts.size())) * 1.5;
    cell_ = std::max(cell_, ext.maxCoeff() / 32.0);
    for (int a = 0; a < 3; ++a) dims_[a] = std::max(1, static_cast<int>(ext[a] / cell_) + 1);
    start_.assign(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2] + 1, 0);
    std::vector<std::size_t> cell_of(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto c = cell_coords(pts[i]);
      cell_of[i] = index(c[0], c[1], c[2]);
      ++start_[cell_of[i] + 1];
    }
    std::partial_sum(start_.begin(), start_.end(), start_.begin());
    items_.resize(pts.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i) items_[fill[cell_of[i]]++] = i;
  }

  double nearest(const Vec3& q) const {
    std::array<int, 3> c;
    for (int a = 0; a < 3; ++a) c[a] = static_cast<int>(std::floor((q[a] - lo_[a]) / cell_));
    int max_ring = 0;
    for (int a = 0; a < 3; ++a) {
      max_ring = std::max({max_ring, std::abs(c[a]), std::abs(dims_[a] - 1 - c[a])});
    }
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r <= max_ring; ++r) {
      for (int x = c[0] - r; x <= c[0] + r; ++x) {
        if (x < 0 || x >= dims_[0]) continue;
        for (int y = c[1] - r; y <= c[1] + r; ++y) {
          if (y < 0 || y >= dims_[1]) continue;
          const bool shell_xy = std::abs(x - c[0]) == r || std::abs(y - c[1]) == r;
          for (int z = c[2] - r; z <= c[2] + r; ++z) {
            if (z < 0 || z >= dims_[2]) continue;
            if (!shell_xy && std::abs(z - c[2]) != r) continue;
            const std::size_t id = index(x, y, z);
            for (std::size_t k = start_[id]; k < start_[id + 1]; ++k) {
              best = std::min(best, (q - pts_[items_[k]]).norm());
            }
          }
        }
      }
      // Points in rings beyond r are at least r cells away.
      if (best <= r * cell_) break;
    }
    return best;
  }

 private:
  std::array<int, 3> cell_coords(const Vec3& p) const {
    std::array<int, 3> c;
    for (int a = 0; a < 3; ++a) {
      c[a] = std::clamp(static_cast<int>(std::floor((p[a] - lo_[a]) / cell_)), 0, dims_[a] - 1);
    }
    return c;
  }
  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * dims_[1] + y) * dims_[0] + x;
  }

  const std::vector<Vec3>& pts_;
  Vec3 lo_, hi_;
  double cell_ = 1;
  int dims_[3] = {1, 1, 1};
  std::vector<std::size_t> start_, items_;
};

}  // namespace

double e_add(const std::vector<Vec3>& points, const PoseSE3& est, const PoseSE3& gt) {
  require_points(points);
  double sum = 0.0;
  for (const auto& x : points) sum += (transform_point(est, x) - transform_point(gt, x)).norm();
  return sum / static_cast<double>(points.size());
}

double e_adi_bruteforce(const std::vector<Vec3>& points, const PoseSE3& est, const PoseSE3& gt) {
  require_points(points);
  const auto a = transformed(points, est);
  const auto b = transformed(points, gt);
  double sum = 0.0;
  for (const auto& p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) best = std::min(best, (p - q).norm());
    sum += best;
  }
  return sum / static_cast<double>(points.size());
}

double e_adi_grid(const std::vector<Vec3>& points, const PoseSE3& est, const PoseSE3& gt) {
  require_points(points);
  const auto a = transformed(points, est);
  const auto b = transformed(points, gt);
  const PointGrid grid(b);
  double sum = 0.0;
  for (const auto& p : a) sum += grid.nearest(p);
  return sum / static_cast<double>(points.size());
}

double e_adi(const std::vector<Vec3>& points, const PoseSE3& est, const PoseSE3& gt) {
  return points.size() >= 256 ? e_adi_grid(points, est, gt) : e_adi_bruteforce(points, est, gt);
}

double e_cou(const Mask& pred, const Mask& gt) {
  if (pred.width != gt.width || pred.height != gt.height) {
    throw std::invalid_argument("e_cou: mask sizes differ");
  }
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const bool a = pred.data[i] != 0, b = gt.data[i] != 0;
    inter += (a && b);
    uni += (a || b);
  }
  if (uni == 0) return 0.0;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

PoseError pose_errors(const PoseSE3& est, const PoseSE3& gt) {
  return {(est.translation - gt.translation).norm(), geodesic_angle_deg(est.rotation, gt.rotation)};
}

std::vector<Vec3> sample_surface_points(const TriMesh& mesh, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("surface sample count must be >= 1");
  std::vector<double> cdf;
  cdf.reserve(mesh.faces.size());
  double total = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    total += 0.5 * (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a).norm();
    cdf.push_back(total);
  }
  if (!(total > 0)) throw std::invalid_argument("mesh has zero surface area");
  SeededRng rng(seed);
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    const auto& f = mesh.faces[static_cast<std::size_t>(it - cdf.begin())];
    double s = rng.uniform(), t = rng.uniform();
    if (s + t > 1.0) {
      s = 1.0 - s;
      t = 1.0 - t;
    }
    const Vec3& a = mesh.vertices[f[0]];
    out.push_back(a + s * (mesh.vertices[f[1]] - a) + t * (mesh.vertices[f[2]] - a));
  }
  return out;
}

std::vector<double> recall_table(const std::vector<double>& errors, double diameter,
                                 const std::vector<double>& k_m,
                                 std::vector<std::string>* warnings) {
  if (!(diameter > 0)) throw std::invalid_argument("diameter must be positive");
  std::vector<double> out;
  if (errors.empty() && warnings) warnings->push_back("recall over an empty error list is 0");
  for (double k : k_m) {
    if (errors.empty()) {
      out.push_back(0.0);
      continue;
    }
    const auto hits = std::count_if(errors.begin(), errors.end(),
                                    [&](double e) { return e < k * diameter; });
    out.push_back(static_cast<double>(hits) / static_cast<double>(errors.size()));
  }
  return out;
}

std::vector<double> cou_recall(const std::vector<double>& errors, const std::vector<double>& thetas,
                               std::vector<std::string>* warnings) {
  std::vector<double> out;
  if (errors.empty() && warnings) warnings->push_back("CoU recall over an empty error list is 0");
  for (double th : thetas) {
    if (errors.empty()) {
      out.push_back(0.0);
      continue;
    }
    const auto hits =
        std::count_if(errors.begin(), errors.end(), [&](double e) { return e <= th; });
    out.push_back(static_cast<double>(hits) / static_cast<double>(errors.size()));
  }
  return out;
}

double average_precision(const std::vector<Detection>& dets, const std::vector<GTAnnotation>& gts,
                         double iou_threshold, const APSettings& settings) {
  if (settings.recall_points < 2) throw std::invalid_argument("recall_points must be >= 2");
  const std::size_t n_gt = gts.size();
  if (n_gt == 0) return 0.0;

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::vector<bool> used(n_gt, false);
  std::vector<double> precision, tp_count;
  std::size_t tp = 0, fp = 0;
  for (std::size_t idx : order) {
    const Detection& d = dets[idx];
    double best_iou = -1.0;
    std::size_t best = n_gt;
    for (std::size_t g = 0; g < n_gt; ++g) {
      if (used[g] || gts[g].frame_id != d.frame_id) continue;
      const double v = iou(d.bbox, gts[g].bbox);
      if (v >= iou_threshold && v > best_iou) {
        best_iou = v;
        best = g;
      }
    }
    if (best < n_gt) {
      used[best] = true;
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    tp_count.push_back(static_cast<double>(tp));
  }

  // Envelope from the right, then sample at recall levels k/(N-1). The
  // comparison recall >= k/(N-1) is done in integers.
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  const int steps = settings.recall_points - 1;
  double sum = 0.0;
  std::size_t pos = 0;
  for (int k = 0; k <= steps; ++k) {
    while (pos < tp_count.size() &&
           tp_count[pos] * steps < static_cast<double>(k) * static_cast<double>(n_gt)) {
      ++pos;
    }
    if (pos < precision.size()) sum += precision[pos];
  }
  return sum / static_cast<double>(settings.recall_points);
}

double mean_average_precision(const std::vector<Detection>& dets,
                              const std::vector<GTAnnotation>& gts,
                              const std::vector<double>& iou_thresholds,
                              const APSettings& settings) {
  if (iou_thresholds.empty()) throw std::invalid_argument("no IoU thresholds");
  std::set<std::string> classes;
  for (const auto& g : gts) classes.insert(g.class_id);
  if (classes.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : classes) {
    std::vector<Detection> dc;
    std::vector<GTAnnotation> gc;
    for (const auto& d : dets) {
      if (d.class_id == c) dc.push_back(d);
    }
    for (const auto& g : gts) {
      if (g.class_id == c) gc.push_back(g);
    }
    for (double th : iou_thresholds) sum += average_precision(dc, gc, th, settings);
  }
  return sum / static_cast<double>(classes.size() * iou_thresholds.size());
}

PoseSE3 bundle_offset(const PoseSE3& object_pose, const PoseSE3& bundle_pose) {
  return compose(invert(object_pose), bundle_pose);
}

PoseSE3 recover_object_pose(const PoseSE3& bundle_pose, const PoseSE3& offset) {
  return compose(bundle_pose, invert(offset));
}

PoseSE3 average_offsets(const std::vector<PoseSE3>& offsets) {
  if (offsets.empty()) throw std::invalid_argument("no offsets to average");
  Mat3 sum = Mat3::Zero();
  Vec3 t = Vec3::Zero();
  for (const auto& p : offsets) {
    sum += p.rotation.matrix();
    t += p.translation;
  }
  return {Rotation3::nearest(sum), t / static_cast<double>(offsets.size())};
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void EvalSettings::validate() const {
  auto check = [](const std::vector<double>& v, const char* name, double lo, double hi) {
    for (double x : v) {
      if (!(x >= lo && x <= hi)) throw std::invalid_argument(std::string(name) + " value out of range");
    }
  };
  check(k_m, "k_m", 0.0, 1e6);
  check(theta, "theta", 0.0, 1.0);
  // Ascending, so every recall table reads monotone left to right.
  auto ascending = [](const std::vector<double>& v, const char* name) {
    if (v.empty() || std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) != v.end()) {
      throw std::invalid_argument(std::string(name) + " must be non-empty and strictly ascending");
    }
  };
  ascending(k_m, "k_m");
  ascending(theta, "theta");
  check(iou_thresholds, "iou_thresholds", 0.0, 1.0);
  if (ap.recall_points < 2) throw std::invalid_argument("recall_points must be >= 2");
  if (surface_points < 1) throw std::invalid_argument("surface_points must be >= 1");
}

void to_json(nlohmann::json& j, const EvalSettings& s) {
  j = {{"k_m", s.k_m},
       {"theta", s.theta},
       {"iou_thresholds", s.iou_thresholds},
       {"ap_recall_points", s.ap.recall_points},
       {"surface_sampling", s.surface_sampling},
       {"surface_points", s.surface_points}};
}

void from_json(const nlohmann::json& j, EvalSettings& s) {
  s = EvalSettings{};
  s.k_m = j.value("k_m", s.k_m);
  s.theta = j.value("theta", s.theta);
  s.iou_thresholds = j.value("iou_thresholds", s.iou_thresholds);
  s.ap.recall_points = j.value("ap_recall_points", s.ap.recall_points);
  s.surface_sampling = j.value("surface_sampling", s.surface_sampling);
  s.surface_points = j.value("surface_points", s.surface_points);
  s.validate();
}

namespace {

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

std::string fmt(double v, int prec) {
  if (!std::isfinite(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

}  // namespace

EvalReport aggregate_report(std::vector<FrameRecord> records,
                            const std::map<std::string, double>& diameters,
                            const EvalSettings& settings, std::optional<double> map) {
  settings.validate();
  EvalReport rep;
  rep.settings = settings;
  rep.map = map;
  std::stable_sort(records.begin(), records.end(), [](const FrameRecord& a, const FrameRecord& b) {
    return std::tie(a.scene, a.frame_id, a.object_id) < std::tie(b.scene, b.frame_id, b.object_id);
  });
  rep.records = std::move(records);

  auto diameter_of = [&](const std::string& id) {
    const auto it = diameters.find(id);
    if (it == diameters.end()) throw DataError("no diameter for object '" + id + "'");
    return it->second;
  };

  std::map<std::pair<std::string, std::string>, std::vector<const FrameRecord*>> groups;
  std::map<std::string, std::vector<const FrameRecord*>> per_object;
  for (const auto& r : rep.records) {
    groups[{r.scene, r.object_id}].push_back(&r);
    per_object[r.object_id].push_back(&r);
  }

  struct Recalls {
    std::vector<double> adi, add, cou;
  };
  auto recalls = [&](const std::vector<const FrameRecord*>& rs, const std::string& object) {
    std::vector<double> adi, add, cou;
    for (const auto* r : rs) {
      adi.push_back(r->e_adi);
      add.push_back(r->e_add);
      cou.push_back(r->e_cou);
    }
    const double d = diameter_of(object);
    return Recalls{recall_table(adi, d, settings.k_m, &rep.warnings),
                   recall_table(add, d, settings.k_m, nullptr),
                   cou_recall(cou, settings.theta, nullptr)};
  };

  for (const auto& [key, rs] : groups) {
    GroupSummary g;
    g.scene = key.first;
    g.object_id = key.second;
    g.frames = static_cast<int>(rs.size());
    std::vector<double> te, re;
    for (const auto* r : rs) {
      if (!r->estimated) continue;
      ++g.estimated;
      te.push_back(r->t_e);
      re.push_back(r->r_e);
    }
    g.median_t_e = median(te);
    g.median_r_e = median(re);
    Recalls rc = recalls(rs, g.object_id);
    g.adi_recall = std::move(rc.adi);
    g.add_recall = std::move(rc.add);
    g.cou_recall = std::move(rc.cou);
    rep.groups.push_back(std::move(g));
  }
  for (const auto& [object, rs] : per_object) {
    Recalls rc = recalls(rs, object);
    rep.adi_recall[object] = std::move(rc.adi);
    rep.add_recall[object] = std::move(rc.add);
    rep.cou_recall[object] = std::move(rc.cou);
  }
  return rep;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["settings"] = settings;
  j["rotation_error"] = "geodesic angle in degrees, range [0, 180]";
  j["recall_rule"] = {{"e_add_e_adi", "error < k_m * diameter"}, {"e_cou", "e_cou <= theta"}};
  j["model_points"] = settings.surface_sampling
                          ? "surface sample (" + std::to_string(settings.surface_points) + ")"
                          : std::string("mesh vertices");
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : records) {
    recs.push_back({{"scene", r.scene},
                    {"frame_id", r.frame_id},
                    {"object_id", r.object_id},
                    {"estimated", r.estimated},
                    {"e_add", finite_or_null(r.e_add)},
                    {"e_adi", finite_or_null(r.e_adi)},
                    {"e_cou", finite_or_null(r.e_cou)},
                    {"t_e", finite_or_null(r.t_e)},
                    {"r_e", finite_or_null(r.r_e)}});
  }
  j["records"] = std::move(recs);
  nlohmann::json gs = nlohmann::json::array();
  for (const auto& g : groups) {
    gs.push_back({{"scene", g.scene},
                  {"object_id", g.object_id},
                  {"frames", g.frames},
                  {"estimated", g.estimated},
                  {"median_t_e", finite_or_null(g.median_t_e)},
                  {"median_r_e", finite_or_null(g.median_r_e)},
                  {"adi_recall", g.adi_recall},
                  {"add_recall", g.add_recall},
                  {"cou_recall", g.cou_recall}});
  }
  j["groups"] = std::move(gs);
  j["adi_recall"] = adi_recall;
  j["add_recall"] = add_recall;
  j["cou_recall"] = cou_recall;
  j["map"] = map ? nlohmann::json(*map) : nlohmann::json(nullptr);
  j["warnings"] = warnings;
  return j;
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  auto header = [&](const std::string& first, const std::vector<double>& ths, const char* prefix) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-16s", first.c_str());
    out << buf;
    for (double t : ths) {
      std::snprintf(buf, sizeof buf, "%10s", (prefix + fmt(t, 2)).c_str());
      out << buf;
    }
    out << '\n';
  };
  auto row = [&](const std::string& name, const std::vector<double>& vals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-16s", name.c_str());
    out << buf;
    for (double v : vals) {
      std::snprintf(buf, sizeof buf, "%9s%%", fmt(100.0 * v, 1).c_str());
      out << buf;
    }
    out << '\n';
  };

  out << "Recall (e_ADI < k_m * diameter)\n";
  header("object", settings.k_m, "k=");
  for (const auto& [obj, v] : adi_recall) row(obj, v);
  out << "\nRecall (e_ADD < k_m * diameter)\n";
  header("object", settings.k_m, "k=");
  for (const auto& [obj, v] : add_recall) row(obj, v);
  out << "\nRecall (e_CoU <= theta)\n";
  header("object", settings.theta, "t=");
  for (const auto& [obj, v] : cou_recall) row(obj, v);

  out << "\nMedian errors (t_e mm, r_e deg, geodesic [0,180])\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %-16s %7s %9s %10s %10s\n", "scene", "object", "frames",
                "estimated", "t_e", "r_e");
  out << buf;
  for (const auto& g : groups) {
    std::snprintf(buf, sizeof buf, "%-12s %-16s %7d %9d %10s %10s\n", g.scene.c_str(),
                  g.object_id.c_str(), g.frames, g.estimated, fmt(g.median_t_e, 1).c_str(),
                  fmt(g.median_r_e, 1).c_str());
    out << buf;
  }
  if (map) out << "\nmAP " << fmt(*map, 4) << '\n';
  for (const auto& w : warnings) out << "warning: " << w << '\n';
  return out.str();
}

}  // namespace uwpose
