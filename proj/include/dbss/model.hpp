#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dbss {

/// Parameters of a dockless bike-sharing system with unusable bikes.
///
/// Regions are indexed 0..regions-1 internally; documentation and config
/// files use 1-based region numbers. Matrices over regions are regions x
/// regions with the diagonal unused.
struct SystemConfig {
  int regions = 0;                                 // N
  int fleet = 0;                                   // K
  std::vector<double> arrival_rate;                // lambda[i]
  std::vector<std::vector<double>> ride_rate;      // mu_ride[i][j]
  std::vector<std::vector<double>> route_prob;     // p[i][j]
  double failure_rate = 0.0;                       // alpha
  double repair_rate = 0.0;                        // w
  int repairmen = 1;                               // r
  int removal_batch = 1;                           // M
  int dispatch_batch = 1;                          // Z
  std::vector<double> dispatch_share;              // beta[i]
  std::vector<double> removal_rate;                // mu_{i,0}
  std::vector<double> return_rate;                 // mu_{0,i}

  /// Optional explicit downlink sets (0-based). Empty means "derive from
  /// route_prob": j is downlink of i iff route_prob[i][j] > 0.
  std::vector<std::vector<int>> downlink;

  /// floor(K / M): maximum number of removal batches in the system.
  int max_batches() const { return removal_batch > 0 ? fleet / removal_batch : 0; }
  /// Z / M; meaningful only for a valid config.
  int batch_ratio() const { return removal_batch > 0 ? dispatch_batch / removal_batch : 0; }
  /// Z_i = beta_i * Z rounded to the nearest integer. Validation guarantees
  /// the product is integral.
  int dispatch_count(int region) const;
};

enum class NodeKind { Shop, Region, Ride, Removal, Return };

/// One virtual node of the closed network. `from`/`to` are 0-based region
/// indices; the shop is encoded as -1.
struct Node {
  NodeKind kind;
  int from = -1;
  int to = -1;
};

/// Node set and ordering of the closed network: shop, regions, ride roads
/// (origin ascending, destination ascending), removal roads, return roads.
/// Return roads whose dispatch share is zero carry no bikes and are left out.
class Topology {
 public:
  static Topology build(const SystemConfig& config);

  int regions() const { return static_cast<int>(downlink_.size()); }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(std::size_t index) const { return nodes_.at(index); }
  const std::vector<int>& downlink(int region) const { return downlink_.at(region); }

  int shop_node() const { return 0; }
  int region_node(int region) const { return 1 + region; }
  /// -1 when j is not downlink of i.
  int ride_node(int from, int to) const;
  int removal_node(int region) const { return removal_base_ + region; }
  /// -1 when the return road was removed.
  int return_node(int region) const { return return_index_.at(region); }

  /// Ride roads in node order as (from, to) pairs.
  const std::vector<Node>& ride_roads() const { return rides_; }
  int ride_position(int from, int to) const;
  std::size_t ride_count() const { return rides_.size(); }

  std::string label(std::size_t index) const;

  /// Strong connectivity of the routing digraph (every node reaches every
  /// other node along the possible bike movements).
  bool strongly_connected() const;

 private:
  std::vector<std::vector<int>> downlink_;
  std::vector<Node> nodes_;
  std::vector<Node> rides_;
  int ride_base_ = 0;
  int removal_base_ = 0;
  std::vector<int> return_index_;
};

/// One element of the state space: bike counts at every node.
struct NetworkState {
  std::vector<int> usable;       // nG[i]
  std::vector<int> unusable;     // nB[i]
  int shop_usable = 0;           // nG0
  int shop_unusable = 0;         // nB0
  std::vector<int> riding;       // per ride road, Topology::ride_roads() order
  std::vector<int> removing;     // m_{i,0}
  std::vector<int> returning;    // m_{0,i}; always 0 on removed return roads

  static NetworkState empty(const Topology& topology);
  int total() const;
  bool operator==(const NetworkState&) const = default;
};

struct NetworkStateHash {
  std::size_t operator()(const NetworkState& state) const;
};

struct Violation {
  std::string field;
  std::string message;
};

/// Every violated structural constraint; empty means the config is usable.
std::vector<Violation> validate_config(const SystemConfig& config);

/// Throws std::invalid_argument listing all violations.
void require_valid(const SystemConfig& config);

/// Membership in the state space: conservation, the batch lattices at the
/// shop and on truck roads, and per-node bounds.
bool in_state_space(const SystemConfig& config, const Topology& topology,
                    const NetworkState& state);

/// Same rules without the per-road cap of phi/psi dispatch batches. When a
/// dispatch is split over several return roads, one road can drain while
/// another keeps filling, so the running system may exceed that cap.
bool is_admissible(const SystemConfig& config, const Topology& topology,
                   const NetworkState& state);

}  // namespace dbss
