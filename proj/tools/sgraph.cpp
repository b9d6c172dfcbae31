#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgraphs/errors.hpp"
#include "sgraphs/experiment.hpp"
#include "sgraphs/io.hpp"
#include "sgraphs/mapper.hpp"
#include "sgraphs/metrics.hpp"
#include "sgraphs/world.hpp"

namespace fs = std::filesystem;
using namespace sgraphs;

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const std::uint64_t a = std::stoull(text.substr(0, dots));
    const std::uint64_t b = std::stoull(text.substr(dots + 2));
    if (b < a) throw std::invalid_argument("empty seed range " + text);
    for (std::uint64_t s = a; s <= b; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) seeds.push_back(std::stoull(item));
  }
  if (seeds.empty()) throw std::invalid_argument("no seeds in '" + text + "'");
  return seeds;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path.string());
  os << text;
}

fs::path csv_beside(const fs::path& json_path) {
  fs::path p = json_path;
  return p.replace_extension(".csv");
}

int cmd_simulate(const std::string& layout_path, const std::string& noise_path, std::optional<std::uint64_t> seed,
                 const std::string& out) {
  const LayoutSpec layout = layout_from_json(load_json(layout_path));
  NoiseSpec noise = noise_path.empty() ? NoiseSpec{} : noise_from_json(load_json(noise_path));
  if (seed) noise.seed = *seed;
  const WorldModel world = generate_world(layout, noise.seed);
  const std::vector<SimFrame> frames = simulate_run(world, layout, noise);
  write_dataset(out, world, frames);
  std::cout << "frames " << frames.size() << "  planes " << world.planes.size() << "  rooms " << world.rooms.size()
            << "  corridors " << world.corridors.size() << "  digest " << std::hex << stream_digest(frames) << std::dec
            << "\n";
  return 0;
}

int cmd_slam(const std::string& dataset_dir, const std::string& config_path, bool no_topology, bool no_loop,
             const std::string& out) {
  MapperConfig cfg = config_path.empty() ? MapperConfig{} : mapper_config_from_json(load_json(config_path));
  if (no_topology) cfg.enable_topology = false;
  if (no_loop) cfg.enable_loop_closure = false;
  const Dataset data = read_dataset(dataset_dir);
  const RunResult run = run_pipeline(data.frames, cfg);

  fs::create_directories(out);
  write_tum(fs::path(out) / "estimate.tum", run.trajectory);
  write_tum(fs::path(out) / "keyframes.tum", run.keyframe_trajectory);
  save_json(fs::path(out) / "graph.json", graph_to_json(run.graph));
  write_ply(fs::path(out) / "map.ply", aggregate_map(run.graph));
  nlohmann::json info = {
      {"dataset", fs::absolute(dataset_dir).string()},
      {"config", mapper_config_to_json(cfg)},
      {"frames", data.frames.size()},
      {"keyframes", run.stats.keyframes},
      {"landmarks", run.graph.planes.size()},
      {"rooms", run.graph.rooms.size()},
      {"corridors", run.graph.corridors.size()},
      {"loops_accepted", run.stats.loops_accepted},
      {"optimizations", run.stats.optimizations},
      {"final_cost", run.stats.last_cost},
      {"seconds", run.seconds},
  };
  save_json(fs::path(out) / "run.json", info);
  std::cout << "keyframes " << run.stats.keyframes << "  landmarks " << run.graph.planes.size() << "  rooms "
            << run.graph.rooms.size() << "  corridors " << run.graph.corridors.size() << "  loops "
            << run.stats.loops_accepted << "  cost " << run.stats.last_cost << "  " << run.seconds << " s\n";
  return 0;
}

int cmd_eval(const std::string& run_dir, const std::string& world_path, const std::string& gt_path,
             const std::string& report) {
  const WorldModel world = world_from_json(load_json(world_path));
  const fs::path gt = gt_path.empty() ? fs::path(world_path).parent_path() / "ground_truth.tum" : fs::path(gt_path);
  const Trajectory reference = read_tum(gt);
  const Trajectory estimate = read_tum(fs::path(run_dir) / "estimate.tum");
  const SGraph graph = graph_from_json(load_json(fs::path(run_dir) / "graph.json"));

  RunMetrics m;
  const AteResult a = ate(estimate, reference, 0.5 * scan_period(reference));
  m.ate = a.rmse;
  m.ate_pairs = a.pairs;
  const MapRmseResult r = map_rmse(read_ply(fs::path(run_dir) / "map.ply"), world);
  m.map_rmse = r.rmse;
  m.map_points = r.points_used;
  m.map_cutoff = r.cutoff;
  m.start_end = start_end_error(estimate);
  m.planes = match_planes(graph, world);
  m.keyframes = static_cast<int>(graph.keyframes.size());
  m.rooms = static_cast<int>(graph.rooms.size());
  m.corridors = static_cast<int>(graph.corridors.size());
  for (const Factor& f : graph.factors) m.loops += f.kind == FactorKind::LoopClosure;

  save_json(report, to_json(m));
  write_text(csv_beside(report), metrics_csv(m));
  std::cout << "ate " << m.ate << " m  map_rmse " << m.map_rmse << " m  start_end " << m.start_end.translation
            << " m / " << m.start_end.rotation << " deg  duplicates " << m.planes.duplicates << "\n";
  return 0;
}

int cmd_ablate(const std::string& layout_path, const std::string& noise_path, const std::string& config_path,
               const std::string& seeds_text, bool loop_closure, unsigned jobs, const std::string& report) {
  const LayoutSpec layout = layout_from_json(load_json(layout_path));
  const NoiseSpec noise = noise_path.empty() ? NoiseSpec{0.02, 0.002, 0.0, true, 0} : noise_from_json(load_json(noise_path));
  MapperConfig cfg = config_path.empty() ? MapperConfig{} : mapper_config_from_json(load_json(config_path));
  cfg.enable_loop_closure = loop_closure;
  const AblationReport r = run_ablation(layout, noise, parse_seeds(seeds_text), cfg, jobs);
  save_json(report, to_json(r));
  write_text(csv_beside(report), ablation_csv(r));
  std::cout << "mean ate  full " << r.mean_ate_full << "  without topology " << r.mean_ate_without << "\n"
            << "mean duplicates  full " << r.mean_duplicates_full << "  without topology "
            << r.mean_duplicates_without << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Situational graph SLAM on simulated indoor worlds"};
  app.require_subcommand(1);

  std::string layout, noise, out, dataset, config, run_dir, world, report, gt, seeds = "1..10";
  std::uint64_t seed = 0;
  bool no_topology = false, no_loop = false, ablate_loops = false;
  unsigned jobs = 0;

  auto* sim = app.add_subcommand("simulate", "Generate a world and a simulated sensor stream");
  sim->add_option("--layout", layout, "Layout JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--noise", noise, "Noise JSON")->check(CLI::ExistingFile);
  auto* seed_opt = sim->add_option("--seed", seed, "Noise seed (overrides the noise file)");
  sim->add_option("--out", out, "Dataset directory")->required();

  auto* slam = app.add_subcommand("slam", "Run the mapper on a dataset");
  slam->add_option("--dataset", dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  slam->add_option("--config", config, "Mapper config JSON")->check(CLI::ExistingFile);
  slam->add_flag("--no-topology", no_topology, "Disable rooms and corridors");
  slam->add_flag("--no-loop-closure", no_loop, "Disable scan-matching loop closure");
  slam->add_option("--out", out, "Run directory")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate a run against the ground truth");
  ev->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--world", world, "world.json of the dataset")->required()->check(CLI::ExistingFile);
  ev->add_option("--ground-truth", gt, "Reference TUM file (default: next to world.json)");
  ev->add_option("--report", report, "Report JSON")->required();

  auto* abl = app.add_subcommand("ablate", "Compare runs with and without the topological layer");
  abl->add_option("--layout", layout, "Layout JSON")->required()->check(CLI::ExistingFile);
  abl->add_option("--noise", noise, "Noise JSON")->check(CLI::ExistingFile);
  abl->add_option("--config", config, "Mapper config JSON")->check(CLI::ExistingFile);
  abl->add_option("--seeds", seeds, "Seed range a..b or list a,b,c");
  abl->add_flag("--loop-closure", ablate_loops, "Keep loop closure enabled in both configurations");
  abl->add_option("--jobs", jobs, "Parallel seeds (default: hardware threads)");
  abl->add_option("--report", report, "Report JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return cmd_simulate(layout, noise, *seed_opt ? std::optional<std::uint64_t>(seed) : std::nullopt, out);
    if (*slam) return cmd_slam(dataset, config, no_topology, no_loop, out);
    if (*ev) return cmd_eval(run_dir, world, gt, report);
    if (*abl) return cmd_ablate(layout, noise, config, seeds, ablate_loops, jobs, report);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
