#pragma once

#include <vector>

#include "dbss/block_generator.hpp"
#include "dbss/model.hpp"

namespace dbss {

/// Admissible unusable counts in the shop when `repaired` repaired bikes are
/// waiting, ascending. With repaired = kM + j:
///   j == 0:  0, M, 2M, ..., (phi-k)M
///   j >  0:  M-j, 2M-j, ..., (phi-k)M-j
std::vector<int> shop_level_support(int removal_batch, int max_batches, int repaired);

/// Repair capacity min(n, r) * w.
double repair_capacity(int unusable, int repairmen, double repair_rate);

/// Aggregate dispatch rate sum_i beta_i mu_{0,i}.
double aggregate_dispatch_rate(const SystemConfig& config);

/// Stationary law of the isolated maintenance shop. The repaired count is
/// the level (0..Z), the unusable count the phase.
class ShopSolution {
 public:
  ShopSolution() = default;
  ShopSolution(int removal_batch, int max_batches, std::vector<RowVector> levels);

  int max_repaired() const { return static_cast<int>(levels_.size()) - 1; }
  const std::vector<RowVector>& levels() const { return levels_; }
  const std::vector<int>& support(int repaired) const { return supports_.at(repaired); }

  /// P(repaired = good, unusable = bad); 0 outside the support.
  double prob(int good, int bad) const;
  double level_mass(int good) const { return levels_.at(good).sum(); }
  double total() const;

 private:
  std::vector<std::vector<int>> supports_;
  std::vector<RowVector> levels_;
};

/// Generator of the shop with unusable-batch arrival rate `inflow`.
BlockGenerator build_shop_generator(const SystemConfig& config, double inflow);

/// Solves the shop through the RG-factorization. A zero inflow leaves the
/// shop empty forever and yields the point mass at (0, 0).
ShopSolution solve_shop(const SystemConfig& config, double inflow);

}  // namespace dbss
