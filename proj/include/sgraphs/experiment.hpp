#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgraphs/mapper.hpp"
#include "sgraphs/metrics.hpp"
#include "sgraphs/world.hpp"

namespace sgraphs {

struct RunMetrics {
  double ate = 0.0;
  int ate_pairs = 0;
  double map_rmse = 0.0;
  int map_points = 0;
  double map_cutoff = 0.0;
  StartEndError start_end;
  PlaneMatchReport planes;
  int keyframes = 0;
  int rooms = 0;
  int corridors = 0;
  int loops = 0;
  double final_cost = 0.0;
  double seconds = 0.0;
};

nlohmann::json to_json(const RunMetrics& m);

/// Reference trajectory of a simulated stream.
TimedPoses ground_truth_of(const std::vector<SimFrame>& frames);

/// Scan period estimated from the stream stamps (1.0 when unknown).
double scan_period(const TimedPoses& poses);

/// ATE and start-end error use `estimate`; map and plane metrics use the graph.
RunMetrics evaluate(const SGraph& graph, const TimedPoses& estimate, const TimedPoses& reference,
                    const WorldModel& world, double max_dt);

struct AblationSeed {
  std::uint64_t seed = 0;
  std::uint64_t digest_full = 0;
  std::uint64_t digest_without = 0;
  RunMetrics full;
  RunMetrics without;
};

struct AblationReport {
  std::vector<AblationSeed> runs;
  double mean_ate_full = 0.0;
  double mean_ate_without = 0.0;
  double mean_rmse_full = 0.0;
  double mean_rmse_without = 0.0;
  double mean_duplicates_full = 0.0;
  double mean_duplicates_without = 0.0;
  bool streams_identical = true;
  bool full_not_worse = false;
  nlohmann::json layout;
  nlohmann::json noise;
};

/// Runs the pipeline with and without the topological layer on the same
/// simulated stream for each seed. Throws std::invalid_argument for fewer
/// than five seeds.
AblationReport run_ablation(const LayoutSpec& layout, const NoiseSpec& noise, const std::vector<std::uint64_t>& seeds,
                            const MapperConfig& cfg, unsigned jobs = 0);

nlohmann::json to_json(const AblationReport& r);
std::string ablation_csv(const AblationReport& r);
std::string metrics_csv(const RunMetrics& m);

}  // namespace sgraphs
