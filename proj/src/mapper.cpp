#include "sgraphs/mapper.hpp"

#include <chrono>
#include <memory>

#include "sgraphs/errors.hpp"

namespace sgraphs {

using nlohmann::json;

MapperConfig mapper_config_from_json(const json& j) {
  MapperConfig c;
  try {
    if (j.contains("filter")) {
      const json& f = j.at("filter");
      c.filter.voxel_size = f.value("voxel_size", c.filter.voxel_size);
      c.filter.k_sigma = f.value("k_sigma", c.filter.k_sigma);
    }
    if (j.contains("ransac")) {
      const json& r = j.at("ransac");
      c.ransac.threshold = r.value("threshold", c.ransac.threshold);
      c.ransac.min_inliers = r.value("min_inliers", c.ransac.min_inliers);
      c.ransac.max_iters = r.value("max_iters", c.ransac.max_iters);
      c.ransac.seed = r.value("seed", c.ransac.seed);
    }
    if (j.contains("keyframes")) {
      const json& k = j.at("keyframes");
      c.keyframes.min_translation = k.value("min_translation", c.keyframes.min_translation);
      c.keyframes.min_rotation = k.value("min_rotation", c.keyframes.min_rotation);
    }
    if (j.contains("odometry")) {
      const json& o = j.at("odometry");
      c.odometry.sigma_t = o.value("sigma_t", c.odometry.sigma_t);
      c.odometry.sigma_r = o.value("sigma_r", c.odometry.sigma_r);
      c.odometry.min_sigma_t = o.value("min_sigma_t", c.odometry.min_sigma_t);
      c.odometry.min_sigma_r = o.value("min_sigma_r", c.odometry.min_sigma_r);
    }
    if (j.contains("planes")) {
      const json& p = j.at("planes");
      const double sa = p.value("sigma_angle", 0.02), sd = p.value("sigma_d", 0.02);
      c.plane_information = Eigen::Vector3d(1.0 / (sa * sa), 1.0 / (sa * sa), 1.0 / (sd * sd)).asDiagonal();
      c.association_gate = p.value("association_gate", c.association_gate);
      c.min_detection_extent = p.value("min_extent", c.min_detection_extent);
      c.support_margin = p.value("support_margin", c.support_margin);
    }
    if (j.contains("topology")) {
      const json& t = j.at("topology");
      c.topology.min_width = t.value("min_width", c.topology.min_width);
      c.topology.extent_ratio_max = t.value("extent_ratio_max", c.topology.extent_ratio_max);
      c.topology.corridor_max_width = t.value("corridor_max_width", c.topology.corridor_max_width);
      c.topology.merge_max_offset = t.value("merge_max_offset", c.topology.merge_max_offset);
      const double sr = t.value("sigma_room", 0.1), sc = t.value("sigma_corridor", 0.1);
      c.topology.room_information = 1.0 / (sr * sr);
      c.topology.corridor_information = 1.0 / (sc * sc);
    }
    if (j.contains("loop_closure")) {
      const json& l = j.at("loop_closure");
      c.loop.min_keyframe_gap = l.value("min_keyframe_gap", c.loop.min_keyframe_gap);
      c.loop.gate = l.value("gate", c.loop.gate);
      c.loop.voxel_size = l.value("voxel_size", c.loop.voxel_size);
      c.loop.max_correspondence = l.value("max_correspondence", c.loop.max_correspondence);
      c.loop.initial_correspondence = l.value("initial_correspondence", c.loop.initial_correspondence);
      c.loop.min_wall_extent = l.value("min_wall_extent", c.loop.min_wall_extent);
      c.loop.max_iterations = l.value("max_iterations", c.loop.max_iterations);
      c.loop.accept_threshold = l.value("accept_threshold", c.loop.accept_threshold);
      c.loop.min_overlap = l.value("min_overlap", c.loop.min_overlap);
    }
    if (j.contains("solver")) {
      const json& s = j.at("solver");
      c.solver.max_iters = s.value("max_iters", c.solver.max_iters);
      c.solver.rel_tol = s.value("rel_tol", c.solver.rel_tol);
      c.solver.grad_tol = s.value("grad_tol", c.solver.grad_tol);
      c.solver.huber_delta = s.value("huber_delta", c.solver.huber_delta);
      c.solver.robust = s.value("robust", c.solver.robust);
    }
    c.enable_topology = j.value("enable_topology", c.enable_topology);
    c.enable_loop_closure = j.value("enable_loop_closure", c.enable_loop_closure);
  } catch (const json::exception& e) {
    throw FormatError(e.what());
  }
  return c;
}

json mapper_config_to_json(const MapperConfig& c) {
  return {
      {"filter", {{"voxel_size", c.filter.voxel_size}, {"k_sigma", c.filter.k_sigma}}},
      {"ransac",
       {{"threshold", c.ransac.threshold},
        {"min_inliers", c.ransac.min_inliers},
        {"max_iters", c.ransac.max_iters},
        {"seed", c.ransac.seed}}},
      {"keyframes", {{"min_translation", c.keyframes.min_translation}, {"min_rotation", c.keyframes.min_rotation}}},
      {"odometry",
       {{"sigma_t", c.odometry.sigma_t},
        {"sigma_r", c.odometry.sigma_r},
        {"min_sigma_t", c.odometry.min_sigma_t},
        {"min_sigma_r", c.odometry.min_sigma_r}}},
      {"planes",
       {{"sigma_angle", 1.0 / std::sqrt(c.plane_information(0, 0))},
        {"sigma_d", 1.0 / std::sqrt(c.plane_information(2, 2))},
        {"association_gate", c.association_gate},
        {"min_extent", c.min_detection_extent},
        {"support_margin", c.support_margin}}},
      {"topology",
       {{"min_width", c.topology.min_width},
        {"extent_ratio_max", c.topology.extent_ratio_max},
        {"corridor_max_width", c.topology.corridor_max_width},
        {"merge_max_offset", c.topology.merge_max_offset},
        {"sigma_room", 1.0 / std::sqrt(c.topology.room_information)},
        {"sigma_corridor", 1.0 / std::sqrt(c.topology.corridor_information)}}},
      {"loop_closure",
       {{"min_keyframe_gap", c.loop.min_keyframe_gap},
        {"gate", c.loop.gate},
        {"voxel_size", c.loop.voxel_size},
        {"max_correspondence", c.loop.max_correspondence},
        {"initial_correspondence", c.loop.initial_correspondence},
        {"min_wall_extent", c.loop.min_wall_extent},
        {"max_iterations", c.loop.max_iterations},
        {"accept_threshold", c.loop.accept_threshold},
        {"min_overlap", c.loop.min_overlap}}},
      {"solver",
       {{"max_iters", c.solver.max_iters},
        {"rel_tol", c.solver.rel_tol},
        {"grad_tol", c.solver.grad_tol},
        {"huber_delta", c.solver.huber_delta},
        {"robust", c.solver.robust}}},
      {"enable_topology", c.enable_topology},
      {"enable_loop_closure", c.enable_loop_closure},
  };
}

Mapper::Mapper(MapperConfig cfg) : cfg_(std::move(cfg)) {}

void Mapper::optimize_graph() {
  const SolverReport rep = optimize(graph_, cfg_.solver);
  ++stats_.optimizations;
  stats_.last_cost = rep.final_cost;
}

std::optional<int> Mapper::process(double stamp, const Pose3d& odom, const PointCloud& scan) {
  const auto kf = maybe_add_keyframe(graph_, stamp, odom, cfg_.keyframes, cfg_.odometry);
  if (!kf) {
    if (!frames_.empty()) frames_.push_back({stamp, frames_.back().keyframe, odom});
    return std::nullopt;
  }
  frames_.push_back({stamp, *kf, odom});
  ++stats_.keyframes;

  std::shared_ptr<const PointCloud> filtered;
  try {
    filtered = std::make_shared<const PointCloud>(preprocess(scan, cfg_.filter));
  } catch (const EmptyCloud&) {
    filtered = std::make_shared<const PointCloud>();
  }
  graph_.keyframes.at(*kf).scan = filtered;

  std::vector<PlaneDetection> detections;
  if (static_cast<int>(filtered->size()) >= cfg_.ransac.min_inliers) {
    detections = extract_planes(*filtered, cfg_.ransac);
  }

  if (cfg_.loop.min_wall_extent <= 0.0 || has_crossing_walls(detections, cfg_.loop.min_wall_extent)) {
    registrable_.insert(*kf);
  }

  std::vector<int> visible;
  for (const PlaneDetection& det : detections) {
    if (det.extent.maxCoeff() < cfg_.min_detection_extent) continue;
    ++stats_.detections;
    const Pose3d pose = graph_.keyframes.at(*kf).pose;
    const PlaneHessiand in_map = transform_plane(pose, det.plane, PlaneTransform::ToMap);
    auto id = associate_plane(graph_, det, *kf, cfg_.association_gate, cfg_.plane_information, cfg_.support_margin);
    if (!id) {
      const PlaneClass cls = classify_plane(in_map);
      id = graph_.add_plane(cls, to_minimal(in_map, chart_for(cls)));
      graph_.planes.at(*id).facing = -(pose.rotation * det.plane.normal);
      ++stats_.landmarks_created;
    }
    PlaneLandmark& lm = graph_.planes.at(*id);
    graph_.add_pose_plane(*kf, *id, to_minimal(det.plane, lm.chart()), cfg_.plane_information);
    lm.extent = lm.extent.cwiseMax(det.extent);
    lm.centroid_sum += pose * det.centroid;
    ++lm.centroid_count;
    lm.support.extend(transform_box(pose, det.bounds));
    visible.push_back(*id);
  }

  optimize_graph();

  if (cfg_.enable_topology) {
    const TopologyUpdate up = update_topology(graph_, *kf, visible, cfg_.topology);
    stats_.rooms_created += up.rooms_created;
    stats_.corridors_created += up.corridors_created;
    stats_.corridors_upgraded += up.corridors_upgraded;
    stats_.planes_merged += up.planes_merged;
    if (up.rooms_created + up.corridors_created + up.corridors_upgraded + up.planes_merged > 0) optimize_graph();
  }

  if (cfg_.enable_loop_closure && !filtered->empty()) {
    const auto candidates =
        registrable_.contains(*kf) ? find_candidates(graph_, *kf, cfg_.loop) : std::vector<LoopCandidate>{};
    stats_.loop_candidates += static_cast<int>(candidates.size());
    for (const LoopCandidate& c : candidates) {
      const Keyframe& match = graph_.keyframes.at(c.match);
      if (!match.scan || match.scan->empty() || !registrable_.contains(c.match) || graph_.has_loop(c.match, c.query)) {
        continue;
      }
      try {
        LoopConstraint lc = register_scans(*filtered, *match.scan, c.prior, cfg_.loop);
        lc.query = c.query;
        lc.match = c.match;
        if (add_loop_factor(graph_, lc)) {
          ++stats_.loops_accepted;
          optimize_graph();
          break;
        }
      } catch (const NoConvergence&) {
        continue;
      }
    }
  }
  return kf;
}

std::vector<std::pair<double, Pose3d>> Mapper::trajectory() const {
  std::vector<std::pair<double, Pose3d>> out;
  out.reserve(frames_.size());
  for (const FrameRecord& f : frames_) {
    const Keyframe& kf = graph_.keyframes.at(f.keyframe);
    out.emplace_back(f.stamp, compose(kf.pose, inverse_compose(kf.odom, f.odom)));
  }
  return out;
}

RunResult run_pipeline(const std::vector<SimFrame>& frames, const MapperConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  Mapper mapper(cfg);
  for (const SimFrame& f : frames) mapper.process(f.stamp, f.odometry, f.scan);
  RunResult r;
  r.graph = mapper.graph();
  r.stats = mapper.stats();
  for (const auto& [id, kf] : r.graph.keyframes) r.keyframe_trajectory.emplace_back(kf.stamp, kf.pose);
  r.trajectory = mapper.trajectory();
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace sgraphs
