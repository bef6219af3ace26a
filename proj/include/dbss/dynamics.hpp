#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include <Eigen/Sparse>

#include "dbss/marginals.hpp"
#include "dbss/model.hpp"
#include "dbss/state_space.hpp"

namespace dbss {

/// Physical events of the system. Triggers (batch removal at M unusable
/// bikes, dispatch at Z repaired bikes) fire inside the event that causes
/// them and are not separate events.
enum class EventKind {
  Rental,          // a user takes a bike at `where` towards `target`
  LostUser,        // a user finds no usable bike at `where`; state unchanged
  RideEnd,         // a bike on ride road `where` (ride position) is parked
  Failure,         // a parked usable bike at region `where` fails
  RemovalArrival,  // a removal batch from region `where` reaches the shop
  Repair,          // the shop finishes one repair
  ReturnArrival,   // a repaired group reaches region `where`
};

struct Transition {
  EventKind kind;
  int where = -1;
  int target = -1;
  double rate = 0.0;
  NetworkState next;
};

/// All events enabled in `state` with their rates and successor states.
/// LostUser transitions have next == state.
std::vector<Transition> transitions(const SystemConfig& config, const Topology& topology,
                                    const NetworkState& state);

/// Fleet spread as evenly as possible over the regions, all usable.
NetworkState initial_state(const SystemConfig& config, const Topology& topology);

/// Stationary law of the exact network chain over its reachable states.
struct ExactChain {
  std::vector<NetworkState> states;  // breadth-first order from initial_state
  Eigen::VectorXd law;
  MarginalTables marginals;

  /// 0 for states the dynamics never reach.
  double probability(const NetworkState& state) const;

  std::unordered_map<NetworkState, std::size_t, NetworkStateHash> index;
};

/// Generator over `states` (rows are origins; self-loops dropped).
Eigen::SparseMatrix<double> exact_generator(const SystemConfig& config, const Topology& topology,
                                            const std::vector<NetworkState>& states,
                                            const std::unordered_map<NetworkState, std::size_t,
                                                                     NetworkStateHash>& index);

/// Builds the reachable chain and solves pi Q = 0, sum pi = 1. `dense`
/// forces a dense full-pivoting solve instead of a sparse LU.
ExactChain solve_exact_chain(const SystemConfig& config, const Topology& topology,
                             std::uint64_t max_states = 200'000, bool dense = false);

}  // namespace dbss
