#include "dbss/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dbss {

namespace {

constexpr double kSumTolerance = 1e-9;

std::string region_path(const char* field, int i) {
  return std::string(field) + "[" + std::to_string(i + 1) + "]";
}

std::string pair_path(const char* field, int i, int j) {
  return std::string(field) + "[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]";
}

std::string fmt(double value) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << value;
  return out.str();
}

std::vector<std::vector<int>> derive_downlink(const SystemConfig& config) {
  if (!config.downlink.empty()) {
    auto sets = config.downlink;
    for (auto& set : sets) std::sort(set.begin(), set.end());
    return sets;
  }
  std::vector<std::vector<int>> sets(config.regions);
  for (int i = 0; i < config.regions; ++i) {
    if (i >= static_cast<int>(config.route_prob.size())) continue;
    const auto& row = config.route_prob[i];
    for (int j = 0; j < static_cast<int>(row.size()); ++j) {
      if (j != i && row[j] > 0.0) sets[i].push_back(j);
    }
  }
  return sets;
}

}  // namespace

int SystemConfig::dispatch_count(int region) const {
  return static_cast<int>(std::lround(dispatch_share.at(region) * dispatch_batch));
}

Topology Topology::build(const SystemConfig& config) {
  Topology topology;
  topology.downlink_ = derive_downlink(config);
  const int n = config.regions;

  topology.nodes_.push_back({NodeKind::Shop, -1, -1});
  for (int i = 0; i < n; ++i) topology.nodes_.push_back({NodeKind::Region, i, i});

  topology.ride_base_ = static_cast<int>(topology.nodes_.size());
  for (int i = 0; i < n; ++i) {
    for (int j : topology.downlink_[i]) {
      topology.nodes_.push_back({NodeKind::Ride, i, j});
      topology.rides_.push_back({NodeKind::Ride, i, j});
    }
  }

  topology.removal_base_ = static_cast<int>(topology.nodes_.size());
  for (int i = 0; i < n; ++i) topology.nodes_.push_back({NodeKind::Removal, i, -1});

  topology.return_index_.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    const bool carries_bikes = i < static_cast<int>(config.dispatch_share.size()) &&
                               config.dispatch_share[i] > 0.0;
    if (!carries_bikes) continue;
    topology.return_index_[i] = static_cast<int>(topology.nodes_.size());
    topology.nodes_.push_back({NodeKind::Return, -1, i});
  }
  return topology;
}

int Topology::ride_position(int from, int to) const {
  for (std::size_t k = 0; k < rides_.size(); ++k) {
    if (rides_[k].from == from && rides_[k].to == to) return static_cast<int>(k);
  }
  return -1;
}

int Topology::ride_node(int from, int to) const {
  const int position = ride_position(from, to);
  return position < 0 ? -1 : ride_base_ + position;
}

std::string Topology::label(std::size_t index) const {
  const Node& n = nodes_.at(index);
  switch (n.kind) {
    case NodeKind::Shop:
      return "0";
    case NodeKind::Region:
      return std::to_string(n.from + 1);
    case NodeKind::Ride:
      return std::to_string(n.from + 1) + "->" + std::to_string(n.to + 1);
    case NodeKind::Removal:
      return std::to_string(n.from + 1) + "->0";
    case NodeKind::Return:
      return "0->" + std::to_string(n.to + 1);
  }
  return "?";
}

bool Topology::strongly_connected() const {
  const std::size_t count = nodes_.size();
  std::vector<std::vector<int>> forward(count), backward(count);
  auto link = [&](int a, int b) {
    forward[a].push_back(b);
    backward[b].push_back(a);
  };
  for (std::size_t k = 0; k < count; ++k) {
    const Node& n = nodes_[k];
    const int self = static_cast<int>(k);
    switch (n.kind) {
      case NodeKind::Shop:
        for (int i = 0; i < regions(); ++i) {
          if (return_index_[i] >= 0) link(self, return_index_[i]);
        }
        break;
      case NodeKind::Region:
        for (int j : downlink_[n.from]) link(self, ride_node(n.from, j));
        link(self, removal_node(n.from));
        break;
      case NodeKind::Ride:
        link(self, region_node(n.to));
        break;
      case NodeKind::Removal:
        link(self, shop_node());
        break;
      case NodeKind::Return:
        link(self, region_node(n.to));
        break;
    }
  }
  auto reaches_all = [count](const std::vector<std::vector<int>>& adjacency) {
    std::vector<char> seen(count, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::size_t visited = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int u : adjacency[v]) {
        if (!seen[u]) {
          seen[u] = 1;
          ++visited;
          stack.push_back(u);
        }
      }
    }
    return visited == count;
  };
  return reaches_all(forward) && reaches_all(backward);
}

NetworkState NetworkState::empty(const Topology& topology) {
  NetworkState state;
  const auto n = static_cast<std::size_t>(topology.regions());
  state.usable.assign(n, 0);
  state.unusable.assign(n, 0);
  state.riding.assign(topology.ride_count(), 0);
  state.removing.assign(n, 0);
  state.returning.assign(n, 0);
  return state;
}

int NetworkState::total() const {
  auto sum = [](const std::vector<int>& v) { return std::accumulate(v.begin(), v.end(), 0); };
  return sum(usable) + sum(unusable) + shop_usable + shop_unusable + sum(riding) +
         sum(removing) + sum(returning);
}

std::size_t NetworkStateHash::operator()(const NetworkState& state) const {
  std::size_t seed = 0;
  auto mix = [&seed](int value) {
    seed ^= std::hash<int>{}(value) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
  };
  auto mix_all = [&mix](const std::vector<int>& values) {
    for (int v : values) mix(v);
  };
  mix(state.shop_usable);
  mix(state.shop_unusable);
  mix_all(state.usable);
  mix_all(state.unusable);
  mix_all(state.riding);
  mix_all(state.removing);
  mix_all(state.returning);
  return seed;
}

std::vector<Violation> validate_config(const SystemConfig& config) {
  std::vector<Violation> out;
  auto add = [&out](std::string field, std::string message) {
    out.push_back({std::move(field), std::move(message)});
  };

  const int n = config.regions;
  if (n < 1) {
    add("N", "number of regions must be positive");
    return out;
  }
  if (config.fleet < 1) add("K", "fleet size must be positive");

  auto check_size = [&](const auto& v, const char* field) {
    if (static_cast<int>(v.size()) != n) {
      add(field, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
      return false;
    }
    return true;
  };
  const bool lambda_ok = check_size(config.arrival_rate, "lambda");
  const bool p_ok = check_size(config.route_prob, "p");
  const bool mu_ok = check_size(config.ride_rate, "mu_ride");
  const bool beta_ok = check_size(config.dispatch_share, "beta");
  const bool remove_ok = check_size(config.removal_rate, "mu_remove");
  const bool return_ok = check_size(config.return_rate, "mu_return");
  if (!config.downlink.empty()) check_size(config.downlink, "theta");

  if (lambda_ok) {
    for (int i = 0; i < n; ++i) {
      if (!(config.arrival_rate[i] > 0.0)) add(region_path("lambda", i), "arrival rate must be > 0");
    }
  }

  const auto downlink = derive_downlink(config);
  if (p_ok) {
    for (int i = 0; i < n; ++i) {
      const auto& row = config.route_prob[i];
      if (static_cast<int>(row.size()) != n) {
        add(region_path("p", i), "expected " + std::to_string(n) + " entries");
        continue;
      }
      double sum = 0.0;
      for (int j = 0; j < n; ++j) {
        const bool in_theta =
            std::find(downlink[i].begin(), downlink[i].end(), j) != downlink[i].end();
        if (row[j] < 0.0) add(pair_path("p", i, j), "routing probability must be >= 0");
        if (j == i && row[j] != 0.0) add(pair_path("p", i, j), "a region cannot route to itself");
        if (!in_theta && row[j] != 0.0) {
          add(pair_path("p", i, j), "nonzero routing probability outside theta");
        }
        if (in_theta) sum += row[j];
      }
      if (std::abs(sum - 1.0) > kSumTolerance) {
        add(region_path("p", i), "routing probabilities of region " + std::to_string(i + 1) +
                                     " sum to " + fmt(sum) + " != 1");
      }
      for (int j : downlink[i]) {
        if (j < 0 || j >= n || j == i) add(region_path("theta", i), "invalid downlink region");
      }
    }
  }

  if (mu_ok) {
    for (int i = 0; i < n; ++i) {
      const auto& row = config.ride_rate[i];
      if (static_cast<int>(row.size()) != n) {
        add(region_path("mu_ride", i), "expected " + std::to_string(n) + " entries");
        continue;
      }
      for (int j : downlink[i]) {
        if (j >= 0 && j < n && !(row[j] > 0.0)) add(pair_path("mu_ride", i, j), "riding rate must be > 0");
      }
    }
  }

  if (!(config.failure_rate >= 0.0)) add("alpha", "failure rate must be >= 0");
  if (!(config.repair_rate > 0.0)) add("w", "repair rate must be > 0");
  if (config.repairmen < 1) add("r", "repairman count must be positive");
  if (config.removal_batch < 1) add("M", "removal batch size must be positive");
  if (config.dispatch_batch < 1) add("Z", "redistribution batch size must be positive");

  const bool batches_ok = config.removal_batch >= 1 && config.dispatch_batch >= 1;
  if (batches_ok && config.dispatch_batch % config.removal_batch != 0) {
    add("Z", "Z not an integer multiple of M");
  }
  if (batches_ok && config.fleet >= 1 && config.fleet < config.dispatch_batch) {
    add("K", "fleet smaller than Z: the shop could never complete a redistribution batch");
  }

  if (beta_ok) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double beta = config.dispatch_share[i];
      sum += beta;
      if (beta < 0.0) add(region_path("beta", i), "share must be >= 0");
      const double z = beta * config.dispatch_batch;
      if (std::abs(z - std::round(z)) > kSumTolerance) {
        add(region_path("beta", i), "beta*Z = " + fmt(z) + " is not an integer");
      }
    }
    if (std::abs(sum - 1.0) > kSumTolerance) add("beta", "shares sum to " + fmt(sum) + " != 1");
  }

  if (remove_ok) {
    for (int i = 0; i < n; ++i) {
      if (!(config.removal_rate[i] > 0.0)) add(region_path("mu_remove", i), "removal rate must be > 0");
    }
  }
  if (return_ok && beta_ok) {
    for (int i = 0; i < n; ++i) {
      const double mu = config.return_rate[i];
      const double beta = config.dispatch_share[i];
      if (mu < 0.0) add(region_path("mu_return", i), "return rate must be >= 0");
      if (beta > 0.0 && !(mu > 0.0)) {
        add(region_path("mu_return", i), "return rate must be > 0 when beta > 0");
      }
      if (mu == 0.0 && beta != 0.0) add(region_path("beta", i), "beta must be 0 when mu_return is 0");
    }
  }

  if (out.empty()) {
    if (!Topology::build(config).strongly_connected()) {
      add("theta", "the node graph is not strongly connected (system is not path irreducible)");
    }
  }
  return out;
}

void require_valid(const SystemConfig& config) {
  const auto violations = validate_config(config);
  if (violations.empty()) return;
  std::string message = "invalid configuration:";
  for (const auto& v : violations) message += "\n  " + v.field + ": " + v.message;
  throw std::invalid_argument(message);
}

namespace {

bool check_state(const SystemConfig& config, const Topology& topology, const NetworkState& state,
                 bool cap_return_roads) {
  const int n = topology.regions();
  const int m = config.removal_batch;
  const int phi = config.max_batches();
  const int k = config.fleet;
  if (static_cast<int>(state.usable.size()) != n || static_cast<int>(state.unusable.size()) != n ||
      static_cast<int>(state.removing.size()) != n || static_cast<int>(state.returning.size()) != n ||
      state.riding.size() != topology.ride_count()) {
    return false;
  }
  for (int i = 0; i < n; ++i) {
    if (state.usable[i] < 0 || state.usable[i] > k) return false;
    if (state.unusable[i] < 0 || state.unusable[i] > m) return false;
    const int removing = state.removing[i];
    if (removing < 0 || removing % m != 0 || removing / m > phi) return false;
    const int returning = state.returning[i];
    if (topology.return_node(i) < 0) {
      if (returning != 0) return false;
    } else {
      const int zi = config.dispatch_count(i);
      // m_{0,i} = l * Z_i with l <= phi / psi
      if (returning < 0 || returning % zi != 0) return false;
      if (cap_return_roads && static_cast<long>(returning / zi) * config.batch_ratio() > phi) {
        return false;
      }
      if (returning > k) return false;
    }
  }
  for (int r : state.riding) {
    if (r < 0 || r > k) return false;
  }
  if (state.shop_usable < 0 || state.shop_usable > config.dispatch_batch) return false;
  if (state.shop_unusable < 0 || state.shop_unusable > phi * m) return false;
  const int shop_total = state.shop_usable + state.shop_unusable;
  if (shop_total % m != 0 || shop_total / m > phi) return false;
  return state.total() == k;
}

}  // namespace

bool in_state_space(const SystemConfig& config, const Topology& topology,
                    const NetworkState& state) {
  return check_state(config, topology, state, true);
}

bool is_admissible(const SystemConfig& config, const Topology& topology,
                   const NetworkState& state) {
  return check_state(config, topology, state, false);
}

}  // namespace dbss
