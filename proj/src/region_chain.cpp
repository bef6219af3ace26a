#include "dbss/region_chain.hpp"

#include <stdexcept>

namespace dbss {

RegionSolution::RegionSolution(int region, std::vector<RowVector> levels)
    : region_(region), levels_(std::move(levels)) {}

double RegionSolution::prob(int good, int bad) const {
  if (bad < 0 || bad > max_unusable()) return 0.0;
  const RowVector& row = levels_[bad];
  if (good < 0 || good >= row.size()) return 0.0;
  return row(good);
}

double RegionSolution::total() const {
  double sum = 0.0;
  for (const auto& level : levels_) sum += level.sum();
  return sum;
}

BlockGenerator build_region_generator(const SystemConfig& config, int region, double inflow) {
  if (!(inflow > 0.0)) throw std::invalid_argument("region inflow rate must be > 0");
  const int k = config.fleet;
  const int m = config.removal_batch;
  if (k < m) throw std::invalid_argument("fleet smaller than the removal batch");
  const double lambda = config.arrival_rate.at(region);
  const double alpha = config.failure_rate;
  const double removal = config.removal_rate.at(region);

  std::vector<Matrix> diag(m + 1);
  std::vector<Matrix> super(m);
  for (int n = 0; n <= m; ++n) {
    const int dim = k - n + 1;
    Matrix d = Matrix::Zero(dim, dim);
    for (int good = 0; good < dim; ++good) {
      double out = 0.0;
      if (good + 1 < dim) {
        d(good, good + 1) = inflow;
        out += inflow;
      }
      if (good > 0) {
        d(good, good - 1) = lambda;
        out += lambda;
      }
      // failures only below the removal level; level M waits for the truck
      out += n < m ? good * alpha : removal;
      d(good, good) = -out;
    }
    diag[n] = std::move(d);

    if (n < m) {
      Matrix s = Matrix::Zero(dim, dim - 1);
      for (int good = 1; good < dim; ++good) s(good, good - 1) = good * alpha;
      super[n] = std::move(s);
    }
  }

  Matrix corner = Matrix::Zero(k - m + 1, k + 1);
  for (int good = 0; good <= k - m; ++good) corner(good, good) = removal;
  return BlockGenerator(std::move(diag), std::move(super), std::move(corner));
}

RegionSolution solve_region(const SystemConfig& config, int region, double inflow) {
  const int k = config.fleet;
  const int m = config.removal_batch;
  if (config.failure_rate == 0.0) {
    // Birth-death on usable counts 0..K: up at `inflow`, down at lambda.
    const double ratio = inflow / config.arrival_rate.at(region);
    std::vector<RowVector> levels(m + 1);
    RowVector base(k + 1);
    base(0) = 1.0;
    for (int good = 1; good <= k; ++good) base(good) = base(good - 1) * ratio;
    levels[0] = base / base.sum();
    for (int n = 1; n <= m; ++n) levels[n] = RowVector::Zero(k - n + 1);
    return RegionSolution(region, std::move(levels));
  }
  const BlockGenerator gen = build_region_generator(config, region, inflow);
  return RegionSolution(region, stationary_vector(rg_factorize(gen)));
}

}  // namespace dbss
