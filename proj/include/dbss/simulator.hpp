#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "dbss/marginals.hpp"
#include "dbss/measures.hpp"
#include "dbss/model.hpp"

namespace dbss {

struct SimConfig {
  double horizon = 1e4;
  double warmup = 1e3;
  std::uint64_t seed = 1;
  int replications = 10;
  int threads = 0;  // 0: hardware concurrency
};

/// Thrown when a simulated event breaks conservation or leaves the state space.
class SimulationInvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Estimate {
  double mean = 0.0;
  double se = 0.0;  // standard error across replications (0 for one replication)
};

struct ReplicationResult {
  MarginalTables marginals;  // time-average occupancy over [warmup, horizon]
  MeasureReport measures;
  std::uint64_t events = 0;
  std::uint64_t lost_users = 0;
  std::uint64_t checked_events = 0;  // events that passed the conservation/legality check
};

struct SimEstimates {
  MarginalTables marginals;
  MarginalTables marginal_se;
  Estimate eta, xi, busy, gamma1, gamma2, expected_unusable, expected_usable;
  Estimate lost_user_rate;  // lost users per unit time after warmup
  std::uint64_t events = 0;
  std::uint64_t checked_events = 0;
  std::vector<ReplicationResult> replications;
};

/// One replication, deterministic in (config, sim.seed, replication).
ReplicationResult simulate_replication(const SystemConfig& config, const Topology& topology,
                                       const SimConfig& sim, int replication);

/// Runs sim.replications independent replications (in parallel) and merges
/// them in replication order.
SimEstimates simulate(const SystemConfig& config, const Topology& topology, const SimConfig& sim);

/// query,probability,se rows of the occupancy histograms.
void write_histogram_csv(std::ostream& out, const SystemConfig& config, const Topology& topology,
                         const SimEstimates& estimates);

}  // namespace dbss
