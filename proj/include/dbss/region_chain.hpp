#pragma once

#include <vector>

#include "dbss/block_generator.hpp"
#include "dbss/model.hpp"

namespace dbss {

/// Stationary law of one isolated parking region. The unusable count is the
/// level, the usable count the phase: level l holds usable counts 0..K-l.
class RegionSolution {
 public:
  RegionSolution() = default;
  RegionSolution(int region, std::vector<RowVector> levels);

  int region() const { return region_; }
  int max_unusable() const { return static_cast<int>(levels_.size()) - 1; }
  const std::vector<RowVector>& levels() const { return levels_; }
  const RowVector& level(int unusable) const { return levels_.at(unusable); }

  /// P(usable = good, unusable = bad); 0 outside the support.
  double prob(int good, int bad) const;
  /// Mass of the top level (a removal batch is ready).
  double level_mass(int bad) const { return level(bad).sum(); }
  double total() const;

 private:
  int region_ = -1;
  std::vector<RowVector> levels_;
};

/// Generator of region i with bike inflow rate `inflow` (the region's
/// relative arrival rate). Levels 0..M, level n has K-n+1 phases.
BlockGenerator build_region_generator(const SystemConfig& config, int region, double inflow);

/// Solves region i through the RG-factorization. With a zero failure rate
/// the chain never leaves level 0 and the level-0 birth-death law is
/// returned directly.
RegionSolution solve_region(const SystemConfig& config, int region, double inflow);

}  // namespace dbss
