#pragma once

#include <map>
#include <vector>

#include "sgraphs/graph.hpp"

namespace sgraphs {

struct SolverConfig {
  int max_iters = 50;
  double rel_tol = 1e-10;
  double grad_tol = 1e-10;
  double initial_lambda = 1e-4;
  /// Huber threshold in whitened units, applied to PosePlane and LoopClosure factors.
  double huber_delta = 1.0;
  bool robust = true;
  /// Run the rank test on the undamped normal equations before iterating.
  bool check_rank = true;
};

struct SolverReport {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;  // accepted steps
  bool converged = false;
};

/// Per-layer split of the total cost: tracking (odometry + loop closures),
/// planes, rooms, corridors.
struct CostBreakdown {
  double tracking = 0.0;
  double planes = 0.0;
  double rooms = 0.0;
  double corridors = 0.0;

  double total() const { return tracking + planes + rooms + corridors; }
};

/// Huber-robustified squared Mahalanobis norm of a single factor.
double factor_cost(const SGraph& graph, const Factor& factor, const SolverConfig& cfg);

CostBreakdown evaluate_cost(const SGraph& graph, const SolverConfig& cfg);

/// Variable ordering of the linear system. The anchor keyframe is excluded;
/// corridors expose only their constrained center component and width.
struct SystemLayout {
  std::map<VariableRef, int> offset;
  std::map<VariableRef, std::vector<int>> active;
  int dim = 0;
};

SystemLayout make_layout(const SGraph& graph);

/// Levenberg-Marquardt over every variable of the graph. The keyframe with
/// the smallest id is held fixed. On return map_to_odom is re-derived from
/// the newest keyframe. Throws SingularSystem when the undamped system is
/// rank deficient.
SolverReport optimize(SGraph& graph, const SolverConfig& cfg = {});

}  // namespace sgraphs
