#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dbss/block_generator.hpp"
#include "dbss/model.hpp"
#include "dbss/region_chain.hpp"
#include "dbss/shop_chain.hpp"

namespace dbss {

/// Relative arrival rates, one entry per node in Topology order.
using RelativeRates = RowVector;

/// Stationary laws of all isolated nodes for one rate vector.
struct NodeSolutions {
  std::vector<RegionSolution> regions;
  ShopSolution shop;
};

/// Solves every region chain and the shop chain at the given rates.
NodeSolutions solve_nodes(const SystemConfig& config, const Topology& topology,
                          const RelativeRates& rates);

struct RoutingDiagnostics {
  /// Largest negative probability clamped to zero (0 when none).
  double max_clamp = 0.0;
};

/// State-dependent routing matrix P(e) over the node order.
Matrix build_routing_matrix(const SystemConfig& config, const Topology& topology,
                            const std::vector<RegionSolution>& regions, const ShopSolution& shop,
                            RoutingDiagnostics* diagnostics = nullptr);

/// How the scale of e is pinned after every iteration.
enum class RateAnchor {
  NodeCount,    // sum of all rates equals the number of nodes
  FirstRegion,  // rate of region 1 equals 1
};

struct FixedPointOptions {
  double epsilon = 1e-10;
  int max_iterations = 10'000;
  RateAnchor anchor = RateAnchor::NodeCount;
  /// Residual history length used to detect a stalled or oscillating iteration.
  int oscillation_window = 50;
  /// Starting vector; all ones when absent.
  std::optional<RelativeRates> initial;
};

struct TraceEntry {
  int iteration = 0;
  double residual = 0.0;
  double damping = 1.0;
  bool damping_changed = false;
  RelativeRates rates;
};

struct FixedPointResult {
  RelativeRates rates;
  std::vector<TraceEntry> trace;
  NodeSolutions nodes;  // node laws at `rates`
  double residual = 0.0;
  bool damped = false;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, std::vector<TraceEntry> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<TraceEntry>& trace() const { return trace_; }

 private:
  std::vector<TraceEntry> trace_;
};

/// Rescales `rates` to the anchor.
RelativeRates anchor_rates(const Topology& topology, const RelativeRates& rates, RateAnchor anchor);

/// Iterates e <- e P(e), re-imposing the anchor each step, until successive
/// iterates differ by less than epsilon in the Euclidean norm. Damping
/// e <- (1-t) e + t e P(e) is halved whenever the residual stops improving
/// over a full window.
FixedPointResult solve_relative_rates(const SystemConfig& config, const Topology& topology,
                                      const FixedPointOptions& options = {});

/// || anchor(e P(e)) - e ||_2 with P rebuilt from fresh node solutions.
double fixed_point_residual(const SystemConfig& config, const Topology& topology,
                            const RelativeRates& rates, RateAnchor anchor = RateAnchor::NodeCount);

/// Runs the iteration from several starting vectors and returns the
/// distinct limits (two limits are the same when they agree to `tolerance`
/// in sup-norm).
std::vector<RelativeRates> distinct_fixed_points(const SystemConfig& config,
                                                 const Topology& topology,
                                                 const std::vector<RelativeRates>& starts,
                                                 const FixedPointOptions& options = {},
                                                 double tolerance = 1e-8);

/// iteration,residual,damping,<one column per node>
void write_trace_csv(std::ostream& out, const Topology& topology,
                     const std::vector<TraceEntry>& trace);

}  // namespace dbss
