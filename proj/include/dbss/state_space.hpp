#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dbss/model.hpp"

namespace dbss {

inline constexpr std::uint64_t kDefaultStateCap = 100'000'000;

class StateCapExceeded : public std::runtime_error {
 public:
  StateCapExceeded(std::uint64_t count, std::uint64_t cap);
  std::uint64_t count() const { return count_; }
  std::uint64_t cap() const { return cap_; }

 private:
  std::uint64_t count_;
  std::uint64_t cap_;
};

enum class SlotKind { Shop, Region, Ride, Removal, Return };

/// One admissible value of a slot. Pair slots (shop, region) use
/// (usable, unusable); scalar slots use `first` only.
struct SlotOption {
  int first = 0;
  int second = 0;
  int bikes = 0;
};

/// A coordinate group of the state vector. `index` is the region index for
/// region/removal/return slots and the ride position for ride slots.
struct Slot {
  SlotKind kind;
  int index = -1;
  int node = -1;
  std::vector<SlotOption> options;  // lexicographically ascending
};

/// The constrained state space as a product of slots with a global
/// bike-count constraint. Enumeration is lexicographic over the node order
/// (shop, regions, ride roads, removal roads, return roads), each pair slot
/// ordered by (usable, unusable).
class StateSpace {
 public:
  StateSpace(const SystemConfig& config, const Topology& topology);

  const std::vector<Slot>& slots() const { return slots_; }
  const Topology& topology() const { return topology_; }

  /// Exact number of states (saturates at UINT64_MAX).
  std::uint64_t size() const { return ways_.empty() ? 0 : ways_[0][fleet_]; }

  /// Calls visit(const NetworkState&, std::span<const int> choice) for every
  /// state in order; `choice[s]` is the option index taken in slot s.
  template <class Visitor>
  void for_each(Visitor&& visit) const {
    NetworkState state = NetworkState::empty(topology_);
    std::vector<int> choice(slots_.size(), 0);
    if (size() == 0) return;
    walk(0, fleet_, state, choice, visit);
  }

  /// Materialized states; throws StateCapExceeded when size() > cap.
  std::vector<NetworkState> enumerate(std::uint64_t cap = kDefaultStateCap) const;

  void require_within(std::uint64_t cap) const;

 private:
  template <class Visitor>
  void walk(std::size_t s, int remaining, NetworkState& state, std::vector<int>& choice,
            Visitor& visit) const {
    if (s == slots_.size()) {
      visit(static_cast<const NetworkState&>(state), std::span<const int>(choice));
      return;
    }
    const Slot& slot = slots_[s];
    for (std::size_t o = 0; o < slot.options.size(); ++o) {
      const SlotOption& option = slot.options[o];
      if (option.bikes > remaining) continue;
      if (ways_[s + 1][remaining - option.bikes] == 0) continue;
      assign(slot, option, state);
      choice[s] = static_cast<int>(o);
      walk(s + 1, remaining - option.bikes, state, choice, visit);
    }
    assign(slot, SlotOption{}, state);
  }

  static void assign(const Slot& slot, const SlotOption& option, NetworkState& state);

  Topology topology_;
  int fleet_ = 0;
  std::vector<Slot> slots_;
  // ways_[s][b]: number of completions of slots s.. holding exactly b bikes
  std::vector<std::vector<std::uint64_t>> ways_;
};

/// Convenience wrapper: all states of the config, in enumeration order.
std::vector<NetworkState> enumerate_states(const SystemConfig& config, const Topology& topology,
                                           std::uint64_t cap = kDefaultStateCap);

}  // namespace dbss
