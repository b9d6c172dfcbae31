#include "sgraphs/solver.hpp"

#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "sgraphs/factors.hpp"

namespace sgraphs {

namespace {

double huber(double sq, double delta) {
  if (sq <= delta * delta) return sq;
  return 2.0 * delta * std::sqrt(sq) - delta * delta;
}

double huber_weight(double sq, double delta) {
  if (sq <= delta * delta) return 1.0;
  return delta / std::sqrt(sq);
}

struct LinearSystem {
  Eigen::SparseMatrix<double> H;
  Eigen::VectorXd g;
};

LinearSystem build_system(const SGraph& graph, const SystemLayout& layout, const SolverConfig& cfg) {
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(layout.dim);

  for (const Factor& f : graph.factors) {
    const FactorLinearization lin = linearize(graph, f);
    const auto vars = f.variables();
    double weight = 1.0;
    if (cfg.robust && f.robust()) {
      weight = huber_weight(lin.residual.dot(f.information * lin.residual), cfg.huber_delta);
    }
    const Eigen::MatrixXd W = weight * f.information;

    std::array<Eigen::MatrixXd, 2> J;
    std::array<int, 2> offset{-1, -1};
    for (int k = 0; k < 2; ++k) {
      const auto it = layout.offset.find(vars[k]);
      if (it == layout.offset.end()) continue;
      offset[k] = it->second;
      const auto& cols = layout.active.at(vars[k]);
      J[k].resize(lin.residual.size(), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) J[k].col(static_cast<Eigen::Index>(c)) = lin.jacobians[k].col(cols[c]);
    }
    for (int a = 0; a < 2; ++a) {
      if (offset[a] < 0) continue;
      g.segment(offset[a], J[a].cols()) += J[a].transpose() * W * lin.residual;
      for (int b = 0; b < 2; ++b) {
        if (offset[b] < 0) continue;
        const Eigen::MatrixXd block = J[a].transpose() * W * J[b];
        for (Eigen::Index i = 0; i < block.rows(); ++i) {
          for (Eigen::Index j = 0; j < block.cols(); ++j) {
            triplets.emplace_back(offset[a] + i, offset[b] + j, block(i, j));
          }
        }
      }
    }
  }
  LinearSystem sys;
  sys.H.resize(layout.dim, layout.dim);
  sys.H.setFromTriplets(triplets.begin(), triplets.end());
  sys.g = std::move(g);
  return sys;
}

int null_space_dimension(const Eigen::SparseMatrix<double>& H) {
  const Eigen::Index n = H.rows();
  Eigen::VectorXd scale(n);
  int zero_columns = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = H.coeff(i, i);
    if (!(d > 0.0)) {
      scale[i] = 1.0;
      ++zero_columns;
    } else {
      scale[i] = 1.0 / std::sqrt(d);
    }
  }
  if (zero_columns > 0) return zero_columns;
  const Eigen::SparseMatrix<double> S = scale.asDiagonal() * H * scale.asDiagonal();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(S);
  if (ldlt.info() != Eigen::Success) return 1;
  int rank_loss = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = ldlt.vectorD()[i];
    if (!std::isfinite(d) || d < 1e-10) ++rank_loss;
  }
  return rank_loss;
}

struct Snapshot {
  std::map<int, Pose3d> poses;
  std::map<int, PlaneMinimald> planes;
  std::map<int, RoomNode> rooms;
  std::map<int, CorridorNode> corridors;
};

Snapshot take_snapshot(const SGraph& graph) {
  Snapshot s;
  for (const auto& [id, kf] : graph.keyframes) s.poses[id] = kf.pose;
  for (const auto& [id, p] : graph.planes) s.planes[id] = p.params;
  s.rooms = graph.rooms;
  s.corridors = graph.corridors;
  return s;
}

void restore(SGraph& graph, const Snapshot& s) {
  for (const auto& [id, pose] : s.poses) graph.keyframes.at(id).pose = pose;
  for (const auto& [id, params] : s.planes) graph.planes.at(id).params = params;
  graph.rooms = s.rooms;
  graph.corridors = s.corridors;
}

void apply_step(SGraph& graph, const SystemLayout& layout, const Eigen::VectorXd& step) {
  for (const auto& [var, offset] : layout.offset) {
    const auto& cols = layout.active.at(var);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(tangent_dim(var.kind));
    for (std::size_t c = 0; c < cols.size(); ++c) delta[cols[c]] = step[offset + static_cast<Eigen::Index>(c)];
    graph.retract(var, delta);
  }
}

}  // namespace

double factor_cost(const SGraph& graph, const Factor& f, const SolverConfig& cfg) {
  const Eigen::VectorXd r = factor_residual(graph, f);
  const double sq = r.dot(f.information * r);
  return (cfg.robust && f.robust()) ? huber(sq, cfg.huber_delta) : sq;
}

CostBreakdown evaluate_cost(const SGraph& graph, const SolverConfig& cfg) {
  CostBreakdown c;
  for (const Factor& f : graph.factors) {
    const double v = factor_cost(graph, f, cfg);
    switch (f.kind) {
      case FactorKind::Odometry:
      case FactorKind::LoopClosure:
        c.tracking += v;
        break;
      case FactorKind::PosePlane:
        c.planes += v;
        break;
      case FactorKind::RoomPlane:
        c.rooms += v;
        break;
      case FactorKind::CorridorPlane:
        c.corridors += v;
        break;
    }
  }
  return c;
}

SystemLayout make_layout(const SGraph& graph) {
  SystemLayout layout;
  const auto anchor = graph.anchor();
  auto add = [&](VariableRef v, std::vector<int> cols) {
    layout.offset[v] = layout.dim;
    layout.dim += static_cast<int>(cols.size());
    layout.active[v] = std::move(cols);
  };
  for (const auto& [id, kf] : graph.keyframes) {
    if (anchor && id == *anchor) continue;
    add({VariableKind::Keyframe, id}, {0, 1, 2, 3, 4, 5});
  }
  for (const auto& [id, p] : graph.planes) add({VariableKind::Plane, id}, {0, 1, 2});
  for (const auto& [id, r] : graph.rooms) add({VariableKind::Room, id}, {0, 1, 2, 3});
  for (const auto& [id, c] : graph.corridors) add({VariableKind::Corridor, id}, {c.constrained_index(), 2});
  return layout;
}

SolverReport optimize(SGraph& graph, const SolverConfig& cfg) {
  if (graph.keyframes.empty()) throw Error("optimize: graph has no keyframes");
  SolverReport report;
  const SystemLayout layout = make_layout(graph);

  double cost = evaluate_cost(graph, cfg).total();
  report.initial_cost = cost;
  double lambda = cfg.initial_lambda;

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  bool analyzed = false;

  for (int iter = 0; iter < cfg.max_iters && layout.dim > 0; ++iter) {
    const LinearSystem sys = build_system(graph, layout, cfg);
    if (iter == 0 && cfg.check_rank) {
      const int null_dim = null_space_dimension(sys.H);
      if (null_dim > 0) throw SingularSystem(null_dim, "normal equations are rank deficient beyond the gauge");
    }
    if (sys.g.lpNorm<Eigen::Infinity>() < cfg.grad_tol || cost <= std::numeric_limits<double>::min()) {
      report.converged = true;
      break;
    }
    if (!analyzed) {
      solver.analyzePattern(sys.H);
      analyzed = true;
    }

    bool accepted = false;
    double rel_change = 0.0;
    while (lambda < 1e12) {
      Eigen::SparseMatrix<double> A = sys.H;
      for (Eigen::Index i = 0; i < A.rows(); ++i) A.coeffRef(i, i) += lambda * std::max(sys.H.coeff(i, i), 1e-9);
      solver.factorize(A);
      if (solver.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd step = solver.solve(-sys.g);
      const Snapshot backup = take_snapshot(graph);
      apply_step(graph, layout, step);
      const double new_cost = evaluate_cost(graph, cfg).total();
      if (std::isfinite(new_cost) && new_cost < cost) {
        rel_change = (cost - new_cost) / std::max(cost, std::numeric_limits<double>::min());
        cost = new_cost;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        break;
      }
      restore(graph, backup);
      lambda *= 10.0;
    }
    if (!accepted) {
      // no decrease possible at any damping: stationary up to round-off
      report.converged = true;
      break;
    }
    ++report.iterations;
    if (rel_change < cfg.rel_tol) {
      report.converged = true;
      break;
    }
  }
  if (layout.dim == 0) report.converged = true;
  report.final_cost = cost;

  const Keyframe& last = graph.keyframes.rbegin()->second;
  graph.map_to_odom = compose(last.pose, inverse(last.odom));
  return report;
}

}  // namespace sgraphs
