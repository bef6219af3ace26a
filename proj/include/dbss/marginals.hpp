#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "dbss/block_generator.hpp"
#include "dbss/model.hpp"

namespace dbss {

struct RegionQuery {
  int region;  // 0-based
  int usable;
  int unusable;
};
struct ShopQuery {
  int usable;
  int unusable;
};
struct RideQuery {
  int from;
  int to;
  int count;
};
struct RemovalQuery {
  int region;
  int count;  // a multiple of M
};
struct ReturnQuery {
  int region;
  int count;  // a multiple of Z_i
};

/// One per-node marginal event.
using MarginalQuery = std::variant<RegionQuery, ShopQuery, RideQuery, RemovalQuery, ReturnQuery>;

/// Per-node marginal distributions of a law over the state space:
///   region[i](usable, unusable), shop(usable, unusable) and the count
/// distributions of every road (indexed by bike count 0..K).
struct MarginalTables {
  std::vector<Matrix> region;            // (K+1) x (M+1)
  Matrix shop;                           // (Z+1) x (phi*M+1)
  std::vector<Eigen::VectorXd> ride;     // per ride road, Topology::ride_roads() order
  std::vector<Eigen::VectorXd> removal;  // per region
  std::vector<Eigen::VectorXd> returning;  // per region (all mass at 0 for removed roads)

  static MarginalTables zeros(const SystemConfig& config, const Topology& topology);

  /// Adds `weight` to every marginal bin hit by `state`.
  void add(const NetworkState& state, double weight);
  void scale(double factor);
  void add_scaled(const MarginalTables& other, double factor);

  /// Throws std::invalid_argument for queries naming nonexistent nodes;
  /// counts outside the table are probability 0.
  double lookup(const Topology& topology, const MarginalQuery& query) const;
};

/// Stable textual key of a query, e.g. "region[1](nG=2;nB=0)".
std::string describe(const MarginalQuery& query);

/// Every query with a table entry, in a fixed order (regions, shop, ride,
/// removal, return roads; ascending counts).
std::vector<MarginalQuery> all_queries(const SystemConfig& config, const Topology& topology);

/// query,probability rows
void write_marginals_csv(std::ostream& out, const SystemConfig& config, const Topology& topology,
                         const MarginalTables& tables);

}  // namespace dbss
