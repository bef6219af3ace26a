#include "dbss/state_space.hpp"

#include <limits>
#include <string>

namespace dbss {

namespace {

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  return a > max - b ? max : a + b;
}

}  // namespace

StateCapExceeded::StateCapExceeded(std::uint64_t count, std::uint64_t cap)
    : std::runtime_error("state space has " + std::to_string(count) +
                         " states, above the enumeration cap of " + std::to_string(cap)),
      count_(count),
      cap_(cap) {}

StateSpace::StateSpace(const SystemConfig& config, const Topology& topology)
    : topology_(topology), fleet_(config.fleet) {
  const int k = config.fleet;
  const int m = config.removal_batch;
  const int z = config.dispatch_batch;
  const int phi = config.max_batches();
  const int psi = config.batch_ratio();
  const int n = topology.regions();

  Slot shop{SlotKind::Shop, -1, topology.shop_node(), {}};
  for (int g = 0; g <= z; ++g) {
    for (int b = 0; b <= phi * m; ++b) {
      const int total = g + b;
      if (total % m == 0 && total / m <= phi) shop.options.push_back({g, b, total});
    }
  }
  slots_.push_back(std::move(shop));

  for (int i = 0; i < n; ++i) {
    Slot region{SlotKind::Region, i, topology.region_node(i), {}};
    for (int g = 0; g <= k; ++g) {
      for (int b = 0; b <= m && g + b <= k; ++b) region.options.push_back({g, b, g + b});
    }
    slots_.push_back(std::move(region));
  }

  const auto& rides = topology.ride_roads();
  for (std::size_t r = 0; r < rides.size(); ++r) {
    Slot ride{SlotKind::Ride, static_cast<int>(r), topology.ride_node(rides[r].from, rides[r].to), {}};
    for (int c = 0; c <= k; ++c) ride.options.push_back({c, 0, c});
    slots_.push_back(std::move(ride));
  }

  for (int i = 0; i < n; ++i) {
    Slot removal{SlotKind::Removal, i, topology.removal_node(i), {}};
    for (int h = 0; h <= phi; ++h) removal.options.push_back({h * m, 0, h * m});
    slots_.push_back(std::move(removal));
  }

  for (int i = 0; i < n; ++i) {
    if (topology.return_node(i) < 0) continue;
    const int zi = config.dispatch_count(i);
    Slot ret{SlotKind::Return, i, topology.return_node(i), {}};
    for (int l = 0; l * psi <= phi; ++l) {
      if (l * zi > k) break;
      ret.options.push_back({l * zi, 0, l * zi});
    }
    slots_.push_back(std::move(ret));
  }

  ways_.assign(slots_.size() + 1, std::vector<std::uint64_t>(k + 1, 0));
  ways_[slots_.size()][0] = 1;
  for (std::size_t s = slots_.size(); s-- > 0;) {
    for (int b = 0; b <= k; ++b) {
      std::uint64_t total = 0;
      for (const auto& option : slots_[s].options) {
        if (option.bikes <= b) total = saturating_add(total, ways_[s + 1][b - option.bikes]);
      }
      ways_[s][b] = total;
    }
  }
}

void StateSpace::assign(const Slot& slot, const SlotOption& option, NetworkState& state) {
  switch (slot.kind) {
    case SlotKind::Shop:
      state.shop_usable = option.first;
      state.shop_unusable = option.second;
      break;
    case SlotKind::Region:
      state.usable[slot.index] = option.first;
      state.unusable[slot.index] = option.second;
      break;
    case SlotKind::Ride:
      state.riding[slot.index] = option.first;
      break;
    case SlotKind::Removal:
      state.removing[slot.index] = option.first;
      break;
    case SlotKind::Return:
      state.returning[slot.index] = option.first;
      break;
  }
}

void StateSpace::require_within(std::uint64_t cap) const {
  if (size() > cap) throw StateCapExceeded(size(), cap);
}

std::vector<NetworkState> StateSpace::enumerate(std::uint64_t cap) const {
  require_within(cap);
  std::vector<NetworkState> states;
  states.reserve(static_cast<std::size_t>(size()));
  for_each([&states](const NetworkState& s, std::span<const int>) { states.push_back(s); });
  return states;
}

std::vector<NetworkState> enumerate_states(const SystemConfig& config, const Topology& topology,
                                           std::uint64_t cap) {
  return StateSpace(config, topology).enumerate(cap);
}

}  // namespace dbss
