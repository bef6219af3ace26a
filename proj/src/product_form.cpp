#include "dbss/product_form.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dbss {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

/// Kahan-Babuska-Neumaier summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

double lookup_or_neg_inf(const Eigen::VectorXd& v, int index) {
  return index >= 0 && index < v.size() ? v(index) : kNegInf;
}

double lookup_or_neg_inf(const Matrix& m, int row, int col) {
  return row >= 0 && row < m.rows() && col >= 0 && col < m.cols() ? m(row, col) : kNegInf;
}

Eigen::VectorXd road_table(double rate, double service, int fleet, int step, int max_multiple) {
  Eigen::VectorXd table = Eigen::VectorXd::Constant(fleet + 1, kNegInf);
  for (int l = 0; l <= max_multiple && l * step <= fleet; ++l) {
    table(l * step) = NodeFactors::log_road_factor(rate, service, l * step);
  }
  return table;
}

/// Admissible number of batches on a return road: l * psi <= phi.
int return_multiples(const SystemConfig& config) {
  return config.max_batches() / config.batch_ratio();
}

}  // namespace

double NodeFactors::log_road_factor(double rate, double service, int count) {
  if (count == 0) return 0.0;
  if (rate == 0.0) return kNegInf;
  return count * std::log(rate / service) - std::lgamma(count + 1.0);
}

NodeFactors::NodeFactors(const SystemConfig& config, const Topology& topology,
                         const RelativeRates& rates, const NodeSolutions& nodes) {
  const int k = config.fleet;
  const int m = config.removal_batch;
  const int n = topology.regions();

  for (int i = 0; i < n; ++i) {
    Matrix t = Matrix::Constant(k + 1, m + 1, kNegInf);
    for (int bad = 0; bad <= m; ++bad) {
      for (int good = 0; good + bad <= k; ++good) t(good, bad) = safe_log(nodes.regions.at(i).prob(good, bad));
    }
    region_.push_back(std::move(t));
  }

  const int max_bad = config.max_batches() * m;
  shop_ = Matrix::Constant(config.dispatch_batch + 1, max_bad + 1, kNegInf);
  for (int good = 0; good <= config.dispatch_batch; ++good) {
    for (int bad = 0; bad <= max_bad; ++bad) shop_(good, bad) = safe_log(nodes.shop.prob(good, bad));
  }

  for (const auto& road : topology.ride_roads()) {
    const double rate = rates(topology.ride_node(road.from, road.to));
    ride_.push_back(road_table(rate, config.ride_rate[road.from][road.to], k, 1, k));
  }
  for (int i = 0; i < n; ++i) {
    removal_.push_back(road_table(rates(topology.removal_node(i)), config.removal_rate[i], k, m,
                                  config.max_batches()));
    if (topology.return_node(i) < 0) {
      Eigen::VectorXd only_empty = Eigen::VectorXd::Constant(k + 1, kNegInf);
      only_empty(0) = 0.0;
      returning_.push_back(std::move(only_empty));
    } else {
      returning_.push_back(road_table(rates(topology.return_node(i)), config.return_rate[i], k,
                                      config.dispatch_count(i), return_multiples(config)));
    }
  }
}

double NodeFactors::log_region(int region, int usable, int unusable) const {
  return lookup_or_neg_inf(region_.at(region), usable, unusable);
}
double NodeFactors::log_shop(int usable, int unusable) const {
  return lookup_or_neg_inf(shop_, usable, unusable);
}
double NodeFactors::log_ride(int position, int count) const {
  return lookup_or_neg_inf(ride_.at(position), count);
}
double NodeFactors::log_removal(int region, int count) const {
  return lookup_or_neg_inf(removal_.at(region), count);
}
double NodeFactors::log_return(int region, int count) const {
  return lookup_or_neg_inf(returning_.at(region), count);
}

double NodeFactors::log_product(const NetworkState& state) const {
  double total = log_shop(state.shop_usable, state.shop_unusable);
  for (std::size_t i = 0; i < region_.size(); ++i) {
    const int r = static_cast<int>(i);
    total += log_region(r, state.usable[i], state.unusable[i]);
    total += log_removal(r, state.removing[i]);
    total += log_return(r, state.returning[i]);
  }
  for (std::size_t p = 0; p < ride_.size(); ++p) total += log_ride(static_cast<int>(p), state.riding[p]);
  return total;
}

ProductFormSolution::ProductFormSolution(const SystemConfig& config, const Topology& topology,
                                         RelativeRates rates)
    : config_(config), topology_(topology), rates_(std::move(rates)) {}

double ProductFormSolution::normalization() const { return std::exp(log_c_); }

double ProductFormSolution::joint_probability(const NetworkState& state) const {
  if (!in_state_space(config_, topology_, state)) {
    throw std::invalid_argument("state is outside the state space");
  }
  return std::exp(factors_.log_product(state) - log_c_);
}

double ProductFormSolution::marginal(const MarginalQuery& query) const {
  return factor_form_.lookup(topology_, query);
}

double ProductFormSolution::marginal_slice_sum(const MarginalQuery& query) const {
  return slice_form_.lookup(topology_, query);
}

ProductFormSolution solve_product_form(const SystemConfig& config, const Topology& topology,
                                       const RelativeRates& rates, const NodeSolutions& nodes,
                                       const ProductFormOptions& options) {
  const StateSpace space(config, topology);
  space.require_within(options.max_states);

  ProductFormSolution sol(config, topology, rates);
  sol.factors_ = NodeFactors(config, topology, rates, nodes);
  sol.state_count_ = space.size();
  const NodeFactors& factors = sol.factors_;

  // Per-slot, per-option log factors.
  const auto& slots = space.slots();
  std::vector<std::vector<double>> slot_log(slots.size());
  for (std::size_t s = 0; s < slots.size(); ++s) {
    for (const auto& option : slots[s].options) {
      double f = 0.0;
      switch (slots[s].kind) {
        case SlotKind::Shop:
          f = factors.log_shop(option.first, option.second);
          break;
        case SlotKind::Region:
          f = factors.log_region(slots[s].index, option.first, option.second);
          break;
        case SlotKind::Ride:
          f = factors.log_ride(slots[s].index, option.first);
          break;
        case SlotKind::Removal:
          f = factors.log_removal(slots[s].index, option.first);
          break;
        case SlotKind::Return:
          f = factors.log_return(slots[s].index, option.first);
          break;
      }
      slot_log[s].push_back(f);
    }
  }

  double shift = kNegInf;
  space.for_each([&](const NetworkState&, std::span<const int> choice) {
    double lp = 0.0;
    for (std::size_t s = 0; s < slots.size(); ++s) lp += slot_log[s][choice[s]];
    if (lp > shift) shift = lp;
  });
  if (!std::isfinite(shift)) throw std::runtime_error("every state has zero product-form weight");

  CompensatedSum c_sum;
  MarginalTables slice = MarginalTables::zeros(config, topology);
  std::vector<std::vector<double>> ctilde(slots.size());
  for (std::size_t s = 0; s < slots.size(); ++s) ctilde[s].assign(slots[s].options.size(), 0.0);

  space.for_each([&](const NetworkState& state, std::span<const int> choice) {
    double finite = 0.0;
    int infinite = 0;
    std::size_t missing = 0;
    for (std::size_t s = 0; s < slots.size(); ++s) {
      const double f = slot_log[s][choice[s]];
      if (std::isinf(f)) {
        ++infinite;
        missing = s;
      } else {
        finite += f;
      }
    }
    if (infinite == 0) {
      const double weight = std::exp(finite - shift);
      c_sum.add(weight);
      slice.add(state, weight);
      for (std::size_t s = 0; s < slots.size(); ++s) {
        ctilde[s][choice[s]] += std::exp(finite - slot_log[s][choice[s]] - shift);
      }
    } else if (infinite == 1) {
      // the other nodes still contribute to C~ of the zero-weight value
      ctilde[missing][choice[missing]] += std::exp(finite - shift);
    }
  });

  const double scaled_c = c_sum.value();
  const double log_scaled_c = std::log(scaled_c);
  sol.log_c_ = shift + log_scaled_c;
  slice.scale(1.0 / scaled_c);
  sol.slice_form_ = std::move(slice);

  MarginalTables theorem = MarginalTables::zeros(config, topology);
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const Slot& slot = slots[s];
    for (std::size_t o = 0; o < slot.options.size(); ++o) {
      const double f = slot_log[s][o];
      const double c = ctilde[s][o];
      const double value = (std::isinf(f) || c <= 0.0) ? 0.0 : std::exp(f + std::log(c) - log_scaled_c);
      const SlotOption& option = slot.options[o];
      switch (slot.kind) {
        case SlotKind::Shop:
          theorem.shop(option.first, option.second) = value;
          break;
        case SlotKind::Region:
          theorem.region[slot.index](option.first, option.second) = value;
          break;
        case SlotKind::Ride:
          theorem.ride[slot.index](option.first) = value;
          break;
        case SlotKind::Removal:
          theorem.removal[slot.index](option.first) = value;
          break;
        case SlotKind::Return:
          theorem.returning[slot.index](option.first) = value;
          break;
      }
    }
  }
  // removed return roads hold no bikes
  for (int i = 0; i < topology.regions(); ++i) {
    if (topology.return_node(i) < 0) theorem.returning[i](0) = 1.0;
  }
  sol.factor_form_ = std::move(theorem);

  if (options.verify_normalization) {
    double total = 0.0;
    space.for_each([&](const NetworkState& state, std::span<const int>) {
      total += std::exp(factors.log_product(state) - sol.log_c_);
    });
    sol.verified_total_ = total;
  } else {
    sol.verified_total_ = std::numeric_limits<double>::quiet_NaN();
  }
  return sol;
}

double log_normalization_constant(const SystemConfig& config, const Topology& topology,
                                  const RelativeRates& rates, const NodeSolutions& nodes,
                                  std::uint64_t max_states) {
  ProductFormOptions options;
  options.max_states = max_states;
  options.verify_normalization = false;
  return solve_product_form(config, topology, rates, nodes, options).log_normalization();
}

MarginalTables decomposition_tables(const SystemConfig& config, const Topology& topology,
                                    const RelativeRates& rates, const NodeSolutions& nodes) {
  const NodeFactors factors(config, topology, rates, nodes);
  MarginalTables t = MarginalTables::zeros(config, topology);
  const int k = config.fleet;

  for (int i = 0; i < topology.regions(); ++i) {
    for (int bad = 0; bad <= config.removal_batch; ++bad) {
      for (int good = 0; good + bad <= k; ++good) t.region[i](good, bad) = nodes.regions[i].prob(good, bad);
    }
  }
  for (int good = 0; good < t.shop.rows(); ++good) {
    for (int bad = 0; bad < t.shop.cols(); ++bad) t.shop(good, bad) = nodes.shop.prob(good, bad);
  }

  auto normalized = [k](auto&& log_factor) {
    Eigen::VectorXd v(k + 1);
    double peak = kNegInf;
    for (int c = 0; c <= k; ++c) peak = std::max(peak, log_factor(c));
    for (int c = 0; c <= k; ++c) v(c) = std::exp(log_factor(c) - peak);
    return Eigen::VectorXd(v / v.sum());
  };
  for (std::size_t p = 0; p < topology.ride_count(); ++p) {
    t.ride[p] = normalized([&](int c) { return factors.log_ride(static_cast<int>(p), c); });
  }
  for (int i = 0; i < topology.regions(); ++i) {
    t.removal[i] = normalized([&](int c) { return factors.log_removal(i, c); });
    t.returning[i] = normalized([&](int c) { return factors.log_return(i, c); });
  }
  return t;
}

}  // namespace dbss
