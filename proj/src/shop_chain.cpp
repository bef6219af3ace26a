#include "dbss/shop_chain.hpp"

#include <algorithm>
#include <stdexcept>

namespace dbss {

std::vector<int> shop_level_support(int removal_batch, int max_batches, int repaired) {
  const int m = removal_batch;
  const int k = repaired / m;
  const int j = repaired % m;
  std::vector<int> support;
  if (j == 0) {
    for (int l = 0; l <= max_batches - k; ++l) support.push_back(l * m);
  } else {
    for (int l = 1; l <= max_batches - k; ++l) support.push_back(l * m - j);
  }
  return support;
}

double repair_capacity(int unusable, int repairmen, double repair_rate) {
  return std::min(unusable, repairmen) * repair_rate;
}

double aggregate_dispatch_rate(const SystemConfig& config) {
  double rate = 0.0;
  for (int i = 0; i < config.regions; ++i) rate += config.dispatch_share.at(i) * config.return_rate.at(i);
  return rate;
}

ShopSolution::ShopSolution(int removal_batch, int max_batches, std::vector<RowVector> levels)
    : levels_(std::move(levels)) {
  for (int g = 0; g < static_cast<int>(levels_.size()); ++g) {
    supports_.push_back(shop_level_support(removal_batch, max_batches, g));
    if (static_cast<Eigen::Index>(supports_.back().size()) != levels_[g].size()) {
      throw std::invalid_argument("shop level " + std::to_string(g) + " does not match its support");
    }
  }
}

double ShopSolution::prob(int good, int bad) const {
  if (good < 0 || good > max_repaired()) return 0.0;
  const auto& s = supports_[good];
  const auto it = std::lower_bound(s.begin(), s.end(), bad);
  if (it == s.end() || *it != bad) return 0.0;
  return levels_[good](it - s.begin());
}

double ShopSolution::total() const {
  double sum = 0.0;
  for (const auto& level : levels_) sum += level.sum();
  return sum;
}

BlockGenerator build_shop_generator(const SystemConfig& config, double inflow) {
  if (!(inflow > 0.0)) throw std::invalid_argument("shop inflow rate must be > 0");
  const int m = config.removal_batch;
  const int z = config.dispatch_batch;
  const int phi = config.max_batches();
  if (phi < config.batch_ratio()) throw std::invalid_argument("fleet too small to fill a dispatch batch");
  const int r = config.repairmen;
  const double w = config.repair_rate;
  const double dispatch = aggregate_dispatch_rate(config);

  std::vector<std::vector<int>> support(z + 1);
  for (int g = 0; g <= z; ++g) support[g] = shop_level_support(m, phi, g);
  auto position = [&support](int level, int bad) {
    const auto& s = support[level];
    const auto it = std::lower_bound(s.begin(), s.end(), bad);
    return (it != s.end() && *it == bad) ? static_cast<int>(it - s.begin()) : -1;
  };

  std::vector<Matrix> diag(z + 1);
  std::vector<Matrix> super(z);
  for (int g = 0; g < z; ++g) {
    const int dim = static_cast<int>(support[g].size());
    Matrix d = Matrix::Zero(dim, dim);
    Matrix s = Matrix::Zero(dim, static_cast<Eigen::Index>(support[g + 1].size()));
    for (int p = 0; p < dim; ++p) {
      const int bad = support[g][p];
      double out = 0.0;
      const int arrival = position(g, bad + m);
      if (arrival >= 0) {
        d(p, arrival) = inflow;
        out += inflow;
      }
      if (bad > 0) {
        const int target = position(g + 1, bad - 1);
        if (target < 0) throw std::logic_error("shop repair leaves the support");
        const double rate = repair_capacity(bad, r, w);
        s(p, target) = rate;
        out += rate;
      }
      d(p, p) = -out;
    }
    diag[g] = std::move(d);
    super[g] = std::move(s);
  }

  // Level Z waits for the dispatch truck, then returns to level 0 keeping
  // its unusable bikes.
  const int top = static_cast<int>(support[z].size());
  diag[z] = -dispatch * Matrix::Identity(top, top);
  Matrix corner = Matrix::Zero(top, static_cast<Eigen::Index>(support[0].size()));
  for (int p = 0; p < top; ++p) corner(p, position(0, support[z][p])) = dispatch;
  return BlockGenerator(std::move(diag), std::move(super), std::move(corner));
}

ShopSolution solve_shop(const SystemConfig& config, double inflow) {
  const int m = config.removal_batch;
  const int phi = config.max_batches();
  if (inflow == 0.0) {
    std::vector<RowVector> levels;
    for (int g = 0; g <= config.dispatch_batch; ++g) {
      levels.push_back(RowVector::Zero(static_cast<Eigen::Index>(shop_level_support(m, phi, g).size())));
    }
    levels[0](0) = 1.0;
    return ShopSolution(m, phi, std::move(levels));
  }
  const BlockGenerator gen = build_shop_generator(config, inflow);
  return ShopSolution(m, phi, stationary_vector(rg_factorize(gen)));
}

}  // namespace dbss
