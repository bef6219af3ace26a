#include "dbss/routing.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace dbss {

namespace {

/// Nodes that bikes never reach when nothing fails: the shop and the truck roads.
bool repair_side(const Node& node) {
  return node.kind == NodeKind::Shop || node.kind == NodeKind::Removal ||
         node.kind == NodeKind::Return;
}

void zero_repair_side(const Topology& topology, RelativeRates& rates) {
  for (std::size_t k = 0; k < topology.size(); ++k) {
    if (repair_side(topology.node(k))) rates(static_cast<Eigen::Index>(k)) = 0.0;
  }
}

}  // namespace

NodeSolutions solve_nodes(const SystemConfig& config, const Topology& topology,
                          const RelativeRates& rates) {
  std::vector<RegionSolution> regions;
  regions.reserve(topology.regions());
  for (int i = 0; i < topology.regions(); ++i) {
    regions.push_back(solve_region(config, i, rates(topology.region_node(i))));
  }
  return NodeSolutions{std::move(regions), solve_shop(config, rates(topology.shop_node()))};
}

Matrix build_routing_matrix(const SystemConfig& config, const Topology& topology,
                            const std::vector<RegionSolution>& regions, const ShopSolution& shop,
                            RoutingDiagnostics* diagnostics) {
  const auto n = static_cast<Eigen::Index>(topology.size());
  const int m = config.removal_batch;
  Matrix p = Matrix::Zero(n, n);

  const int shop_node = topology.shop_node();
  const double dispatch_ready = shop.level_mass(config.dispatch_batch);
  p(shop_node, shop_node) = 1.0 - dispatch_ready;
  for (int i = 0; i < topology.regions(); ++i) {
    if (topology.return_node(i) >= 0) {
      p(shop_node, topology.return_node(i)) = dispatch_ready * config.dispatch_share[i];
    }
  }

  for (int i = 0; i < topology.regions(); ++i) {
    const RegionSolution& region = regions.at(i);
    const int self = topology.region_node(i);
    const double to_removal = region.level_mass(m);
    double stay = 0.0;
    for (int bad = 0; bad < m; ++bad) stay += region.prob(0, bad);
    const double ride = 1.0 - to_removal - stay;
    p(self, self) = stay;
    p(self, topology.removal_node(i)) = to_removal;
    for (int j : topology.downlink(i)) {
      p(self, topology.ride_node(i, j)) = ride * config.route_prob[i][j];
    }
  }

  for (std::size_t k = 0; k < topology.size(); ++k) {
    const Node& node = topology.node(k);
    const auto row = static_cast<Eigen::Index>(k);
    switch (node.kind) {
      case NodeKind::Ride:
        p(row, topology.region_node(node.to)) = 1.0;
        break;
      case NodeKind::Removal:
        p(row, shop_node) = 1.0;
        break;
      case NodeKind::Return:
        p(row, topology.region_node(node.to)) = 1.0;
        break;
      default:
        break;
    }
  }

  double max_clamp = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    bool clamped = false;
    for (Eigen::Index c = 0; c < n; ++c) {
      if (p(r, c) < 0.0) {
        max_clamp = std::max(max_clamp, -p(r, c));
        p(r, c) = 0.0;
        clamped = true;
      }
    }
    if (clamped) p.row(r) /= p.row(r).sum();
  }
  if (diagnostics) diagnostics->max_clamp = max_clamp;
  return p;
}

RelativeRates anchor_rates(const Topology& topology, const RelativeRates& rates, RateAnchor anchor) {
  switch (anchor) {
    case RateAnchor::NodeCount:
      return rates * (static_cast<double>(topology.size()) / rates.sum());
    case RateAnchor::FirstRegion:
      return rates / rates(topology.region_node(0));
  }
  return rates;
}

namespace {

RelativeRates step(const SystemConfig& config, const Topology& topology, const RelativeRates& e,
                   RateAnchor anchor, NodeSolutions* nodes_out) {
  NodeSolutions nodes = solve_nodes(config, topology, e);
  const Matrix p = build_routing_matrix(config, topology, nodes.regions, nodes.shop);
  RelativeRates next = e * p;
  if (config.failure_rate == 0.0) zero_repair_side(topology, next);
  next = anchor_rates(topology, next, anchor);
  if (nodes_out) *nodes_out = std::move(nodes);
  return next;
}

}  // namespace

FixedPointResult solve_relative_rates(const SystemConfig& config, const Topology& topology,
                                      const FixedPointOptions& options) {
  const auto n = static_cast<Eigen::Index>(topology.size());
  RelativeRates e = options.initial ? *options.initial : RelativeRates::Ones(n);
  if (e.size() != n) throw std::invalid_argument("initial rate vector has the wrong length");
  if ((e.array() <= 0.0).any()) throw std::invalid_argument("initial rates must be positive");
  if (config.failure_rate == 0.0) zero_repair_side(topology, e);
  e = anchor_rates(topology, e, options.anchor);

  FixedPointResult result;
  double damping = 1.0;
  int window_start = 0;
  std::vector<double> residuals;
  for (int it = 1; it <= options.max_iterations; ++it) {
    NodeSolutions nodes;
    const RelativeRates mapped = step(config, topology, e, options.anchor, &nodes);
    const double residual = (mapped - e).norm();
    residuals.push_back(residual);

    TraceEntry entry;
    entry.iteration = it;
    entry.residual = residual;
    if (residual < options.epsilon) {
      entry.damping = damping;
      entry.rates = e;
      result.trace.push_back(std::move(entry));
      result.rates = e;
      result.nodes = std::move(nodes);
      result.residual = residual;
      return result;
    }

    const int window = options.oscillation_window;
    if (window > 0 && it - window_start > window &&
        residual >= residuals[static_cast<std::size_t>(it - 1 - window)] && damping > 1.0 / 64) {
      damping /= 2.0;
      window_start = it;
      entry.damping_changed = true;
      result.damped = true;
    }
    entry.damping = damping;
    e = anchor_rates(topology, (1.0 - damping) * e + damping * mapped, options.anchor);
    entry.rates = e;
    result.trace.push_back(std::move(entry));
  }
  throw NonConvergence("relative rates did not converge in " + std::to_string(options.max_iterations) +
                           " iterations (last residual " + std::to_string(residuals.back()) + ")",
                       std::move(result.trace));
}

double fixed_point_residual(const SystemConfig& config, const Topology& topology,
                            const RelativeRates& rates, RateAnchor anchor) {
  return (step(config, topology, rates, anchor, nullptr) - rates).norm();
}

std::vector<RelativeRates> distinct_fixed_points(const SystemConfig& config,
                                                 const Topology& topology,
                                                 const std::vector<RelativeRates>& starts,
                                                 const FixedPointOptions& options,
                                                 double tolerance) {
  std::vector<RelativeRates> found;
  for (const auto& start : starts) {
    FixedPointOptions local = options;
    local.initial = start;
    const RelativeRates e = solve_relative_rates(config, topology, local).rates;
    const bool known = std::any_of(found.begin(), found.end(), [&](const RelativeRates& f) {
      return (f - e).cwiseAbs().maxCoeff() <= tolerance;
    });
    if (!known) found.push_back(e);
  }
  return found;
}

void write_trace_csv(std::ostream& out, const Topology& topology,
                     const std::vector<TraceEntry>& trace) {
  out << "iteration,residual,damping";
  for (std::size_t k = 0; k < topology.size(); ++k) out << ",e[" << topology.label(k) << "]";
  out << '\n';
  const auto precision = out.precision(17);
  for (const auto& entry : trace) {
    out << entry.iteration << ',' << entry.residual << ',' << entry.damping;
    for (Eigen::Index k = 0; k < entry.rates.size(); ++k) out << ',' << entry.rates(k);
    out << '\n';
  }
  out.precision(precision);
}

}  // namespace dbss
