#pragma once

#include <cstdint>
#include <vector>

#include "dbss/marginals.hpp"
#include "dbss/model.hpp"
#include "dbss/routing.hpp"
#include "dbss/state_space.hpp"

namespace dbss {

/// Logarithms of the per-node factors of the product-form law:
///   regions and shop: their isolated stationary probabilities;
///   roads: (e/mu)^m / m! on the road's admissible counts.
class NodeFactors {
 public:
  NodeFactors() = default;
  NodeFactors(const SystemConfig& config, const Topology& topology, const RelativeRates& rates,
              const NodeSolutions& nodes);

  double log_region(int region, int usable, int unusable) const;
  double log_shop(int usable, int unusable) const;
  double log_ride(int position, int count) const;
  double log_removal(int region, int count) const;
  double log_return(int region, int count) const;

  /// Sum of the log factors of every node; -inf for zero-probability states.
  double log_product(const NetworkState& state) const;

  /// log((rate/service)^count / count!); a zero rate gives 0 at count 0 and
  /// -inf elsewhere.
  static double log_road_factor(double rate, double service, int count);

 private:
  std::vector<Matrix> region_;               // log pi^(i)(usable, unusable)
  Matrix shop_;                              // log pi^(0)(usable, unusable)
  std::vector<Eigen::VectorXd> ride_;        // per ride position, count 0..K
  std::vector<Eigen::VectorXd> removal_;     // per region, count 0..K
  std::vector<Eigen::VectorXd> returning_;   // per region, count 0..K
};

struct ProductFormOptions {
  std::uint64_t max_states = kDefaultStateCap;
  /// Re-sum the normalized joint law state by state (through
  /// NodeFactors::log_product) as an independent normalization check.
  bool verify_normalization = true;
};

/// Normalized product-form joint law over the state space together with the
/// per-node marginals in two forms: the H * C~ / C form and the direct
/// slice sums of the joint law.
class ProductFormSolution {
 public:
  const SystemConfig& config() const { return config_; }
  const Topology& topology() const { return topology_; }
  const RelativeRates& rates() const { return rates_; }
  const NodeFactors& factors() const { return factors_; }

  /// log C. C itself may overflow a double for large fleets.
  double log_normalization() const { return log_c_; }
  double normalization() const;
  std::uint64_t state_count() const { return state_count_; }

  /// Sum of joint_probability over the state space, re-accumulated
  /// independently of C (NaN when verification was disabled).
  double verified_total() const { return verified_total_; }

  /// Throws std::invalid_argument when the state is outside the space.
  double joint_probability(const NetworkState& state) const;

  /// H(value) * C~(value) / C.
  double marginal(const MarginalQuery& query) const;
  /// Direct sum of the joint law over the matching slice.
  double marginal_slice_sum(const MarginalQuery& query) const;

  const MarginalTables& factor_form() const { return factor_form_; }
  const MarginalTables& slice_form() const { return slice_form_; }

 private:
  friend ProductFormSolution solve_product_form(const SystemConfig&, const Topology&,
                                                const RelativeRates&, const NodeSolutions&,
                                                const ProductFormOptions&);
  ProductFormSolution(const SystemConfig& config, const Topology& topology, RelativeRates rates);

  SystemConfig config_;
  Topology topology_;
  RelativeRates rates_;
  NodeFactors factors_;
  double log_c_ = 0.0;
  std::uint64_t state_count_ = 0;
  double verified_total_ = 0.0;
  MarginalTables factor_form_;
  MarginalTables slice_form_;
};

/// Enumerates the state space once for the maximum log-product and once for
/// C (compensated summation, scaled by the maximum) and the marginal tables.
ProductFormSolution solve_product_form(const SystemConfig& config, const Topology& topology,
                                       const RelativeRates& rates, const NodeSolutions& nodes,
                                       const ProductFormOptions& options = {});

/// log C for the given rates and node laws.
double log_normalization_constant(const SystemConfig& config, const Topology& topology,
                                  const RelativeRates& rates, const NodeSolutions& nodes,
                                  std::uint64_t max_states = kDefaultStateCap);

/// Per-node marginals taken straight from the isolated node laws, with road
/// counts normalized over each road's own support. A decomposition
/// approximation that skips C entirely.
MarginalTables decomposition_tables(const SystemConfig& config, const Topology& topology,
                                    const RelativeRates& rates, const NodeSolutions& nodes);

}  // namespace dbss
