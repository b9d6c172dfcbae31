#include "sgraphs/experiment.hpp"

#include <algorithm>
#include <future>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "sgraphs/errors.hpp"
#include "sgraphs/io.hpp"

namespace sgraphs {

using nlohmann::json;

json to_json(const RunMetrics& m) {
  return {
      {"ate", m.ate},
      {"ate_pairs", m.ate_pairs},
      {"map_rmse", m.map_rmse},
      {"map_points", m.map_points},
      {"map_cutoff", m.map_cutoff},
      {"start_end_translation", m.start_end.translation},
      {"start_end_rotation_deg", m.start_end.rotation},
      {"landmarks", m.planes.landmarks},
      {"matched_planes", m.planes.matched},
      {"unmatched_planes", m.planes.unmatched},
      {"duplicate_planes", m.planes.duplicates},
      {"keyframes", m.keyframes},
      {"rooms", m.rooms},
      {"corridors", m.corridors},
      {"loops", m.loops},
      {"final_cost", m.final_cost},
      {"seconds", m.seconds},
  };
}

TimedPoses ground_truth_of(const std::vector<SimFrame>& frames) {
  TimedPoses out;
  out.reserve(frames.size());
  for (const SimFrame& f : frames) out.emplace_back(f.stamp, f.ground_truth);
  return out;
}

double scan_period(const TimedPoses& poses) {
  if (poses.size() < 2) return 1.0;
  std::vector<double> dts;
  for (std::size_t i = 1; i < poses.size(); ++i) dts.push_back(poses[i].first - poses[i - 1].first);
  std::nth_element(dts.begin(), dts.begin() + dts.size() / 2, dts.end());
  const double dt = dts[dts.size() / 2];
  return dt > 0.0 ? dt : 1.0;
}

RunMetrics evaluate(const SGraph& graph, const TimedPoses& estimate, const TimedPoses& reference,
                    const WorldModel& world, double max_dt) {
  RunMetrics m;
  const AteResult a = ate(estimate, reference, max_dt);
  m.ate = a.rmse;
  m.ate_pairs = a.pairs;
  const PointCloud map = aggregate_map(graph);
  if (!map.empty() && !world.faces.empty()) {
    const MapRmseResult r = map_rmse(map, world);
    m.map_rmse = r.rmse;
    m.map_points = r.points_used;
    m.map_cutoff = r.cutoff;
  }
  m.start_end = start_end_error(estimate);
  m.planes = match_planes(graph, world);
  m.keyframes = static_cast<int>(graph.keyframes.size());
  m.rooms = static_cast<int>(graph.rooms.size());
  m.corridors = static_cast<int>(graph.corridors.size());
  m.loops = static_cast<int>(std::count_if(graph.factors.begin(), graph.factors.end(),
                                           [](const Factor& f) { return f.kind == FactorKind::LoopClosure; }));
  return m;
}

namespace {

AblationSeed ablation_seed(const WorldModel& world, const LayoutSpec& layout, NoiseSpec noise, std::uint64_t seed,
                           const MapperConfig& cfg) {
  noise.seed = seed;
  const std::vector<SimFrame> frames = simulate_run(world, layout, noise);
  const TimedPoses reference = ground_truth_of(frames);
  const double max_dt = 0.5 * scan_period(reference);

  AblationSeed out;
  out.seed = seed;
  for (bool topology : {true, false}) {
    MapperConfig c = cfg;
    c.enable_topology = topology;
    const std::uint64_t digest = stream_digest(frames);
    const RunResult run = run_pipeline(frames, c);
    RunMetrics m = evaluate(run.graph, run.trajectory, reference, world, max_dt);
    m.final_cost = run.stats.last_cost;
    m.seconds = run.seconds;
    (topology ? out.full : out.without) = m;
    (topology ? out.digest_full : out.digest_without) = digest;
  }
  return out;
}

}  // namespace

AblationReport run_ablation(const LayoutSpec& layout, const NoiseSpec& noise, const std::vector<std::uint64_t>& seeds,
                            const MapperConfig& cfg, unsigned jobs) {
  if (seeds.size() < 5) throw std::invalid_argument("ablation needs at least 5 seeds");
  const WorldModel world = generate_world(layout);
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());

  AblationReport r;
  r.layout = layout_to_json(layout);
  r.noise = noise_to_json(noise);
  r.runs.resize(seeds.size());
  for (std::size_t begin = 0; begin < seeds.size(); begin += jobs) {
    const std::size_t end = std::min(seeds.size(), begin + jobs);
    std::vector<std::future<AblationSeed>> batch;
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, ablation_seed,
                                 std::cref(world), std::cref(layout), noise, seeds[i], std::cref(cfg)));
    }
    for (std::size_t i = begin; i < end; ++i) r.runs[i] = batch[i - begin].get();
  }

  const double n = static_cast<double>(r.runs.size());
  for (const AblationSeed& s : r.runs) {
    r.mean_ate_full += s.full.ate / n;
    r.mean_ate_without += s.without.ate / n;
    r.mean_rmse_full += s.full.map_rmse / n;
    r.mean_rmse_without += s.without.map_rmse / n;
    r.mean_duplicates_full += s.full.planes.duplicates / n;
    r.mean_duplicates_without += s.without.planes.duplicates / n;
    r.streams_identical = r.streams_identical && s.digest_full == s.digest_without;
  }
  r.full_not_worse = r.mean_ate_full <= r.mean_ate_without;
  return r;
}

json to_json(const AblationReport& r) {
  json runs = json::array();
  for (const AblationSeed& s : r.runs) {
    runs.push_back({{"seed", s.seed},
                    {"stream_digest_full", s.digest_full},
                    {"stream_digest_without", s.digest_without},
                    {"full", to_json(s.full)},
                    {"without_topology", to_json(s.without)}});
  }
  return {
      {"layout", r.layout},
      {"noise", r.noise},
      {"seeds", runs.size()},
      {"runs", runs},
      {"mean",
       {{"full", {{"ate", r.mean_ate_full}, {"map_rmse", r.mean_rmse_full}, {"duplicate_planes", r.mean_duplicates_full}}},
        {"without_topology",
         {{"ate", r.mean_ate_without}, {"map_rmse", r.mean_rmse_without}, {"duplicate_planes", r.mean_duplicates_without}}}}},
      {"streams_identical", r.streams_identical},
      {"full_not_worse", r.full_not_worse},
  };
}

std::string ablation_csv(const AblationReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << "seed,config,ate,map_rmse,duplicate_planes,landmarks,rooms,corridors,keyframes,seconds\n";
  auto row = [&](std::uint64_t seed, const char* name, const RunMetrics& m) {
    os << seed << ',' << name << ',' << m.ate << ',' << m.map_rmse << ',' << m.planes.duplicates << ','
       << m.planes.landmarks << ',' << m.rooms << ',' << m.corridors << ',' << m.keyframes << ',' << m.seconds << '\n';
  };
  for (const AblationSeed& s : r.runs) {
    row(s.seed, "full", s.full);
    row(s.seed, "without_topology", s.without);
  }
  return os.str();
}

std::string metrics_csv(const RunMetrics& m) {
  std::ostringstream os;
  os.precision(10);
  os << "metric,value\n";
  const json j = to_json(m);
  for (const auto& [k, v] : j.items()) os << k << ',' << v.dump() << '\n';
  return os.str();
}

}  // namespace sgraphs
