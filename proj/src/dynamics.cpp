#include "dbss/dynamics.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

namespace dbss {

namespace {

// Applies the dispatch trigger after a repair.
void maybe_dispatch(const SystemConfig& config, const Topology& topology, NetworkState& s) {
  if (s.shop_usable < config.dispatch_batch) return;
  s.shop_usable -= config.dispatch_batch;
  for (int i = 0; i < topology.regions(); ++i) s.returning[i] += config.dispatch_count(i);
}

}  // namespace

std::vector<Transition> transitions(const SystemConfig& config, const Topology& topology,
                                    const NetworkState& state) {
  std::vector<Transition> out;
  const int m = config.removal_batch;

  for (int i = 0; i < topology.regions(); ++i) {
    const double lambda = config.arrival_rate[i];
    if (state.usable[i] == 0) {
      if (lambda > 0.0) out.push_back({EventKind::LostUser, i, -1, lambda, state});
    } else {
      for (int j : topology.downlink(i)) {
        const double rate = lambda * config.route_prob[i][j];
        if (rate <= 0.0) continue;
        NetworkState next = state;
        --next.usable[i];
        ++next.riding[topology.ride_position(i, j)];
        out.push_back({EventKind::Rental, i, j, rate, std::move(next)});
      }
      if (config.failure_rate > 0.0) {
        NetworkState next = state;
        --next.usable[i];
        if (++next.unusable[i] == m) {
          next.unusable[i] = 0;
          next.removing[i] += m;
        }
        out.push_back({EventKind::Failure, i, -1, state.usable[i] * config.failure_rate, std::move(next)});
      }
    }
    if (state.removing[i] > 0) {
      NetworkState next = state;
      next.removing[i] -= m;
      next.shop_unusable += m;
      out.push_back({EventKind::RemovalArrival, i, -1, (state.removing[i] / m) * config.removal_rate[i],
                     std::move(next)});
    }
    if (state.returning[i] > 0) {
      const int zi = config.dispatch_count(i);
      NetworkState next = state;
      next.returning[i] -= zi;
      next.usable[i] += zi;
      out.push_back({EventKind::ReturnArrival, i, -1, (state.returning[i] / zi) * config.return_rate[i],
                     std::move(next)});
    }
  }

  const auto& roads = topology.ride_roads();
  for (std::size_t p = 0; p < roads.size(); ++p) {
    if (state.riding[p] == 0) continue;
    NetworkState next = state;
    --next.riding[p];
    ++next.usable[roads[p].to];
    out.push_back({EventKind::RideEnd, static_cast<int>(p), roads[p].to,
                   state.riding[p] * config.ride_rate[roads[p].from][roads[p].to], std::move(next)});
  }

  if (state.shop_unusable > 0 && config.repair_rate > 0.0) {
    NetworkState next = state;
    --next.shop_unusable;
    ++next.shop_usable;
    maybe_dispatch(config, topology, next);
    out.push_back({EventKind::Repair, -1, -1,
                   std::min(state.shop_unusable, config.repairmen) * config.repair_rate,
                   std::move(next)});
  }
  return out;
}

NetworkState initial_state(const SystemConfig& config, const Topology& topology) {
  NetworkState s = NetworkState::empty(topology);
  const int n = topology.regions();
  for (int i = 0; i < n; ++i) s.usable[i] = config.fleet / n + (i < config.fleet % n ? 1 : 0);
  return s;
}

double ExactChain::probability(const NetworkState& state) const {
  const auto it = index.find(state);
  return it == index.end() ? 0.0 : law(static_cast<Eigen::Index>(it->second));
}

Eigen::SparseMatrix<double> exact_generator(
    const SystemConfig& config, const Topology& topology, const std::vector<NetworkState>& states,
    const std::unordered_map<NetworkState, std::size_t, NetworkStateHash>& index) {
  const auto n = static_cast<Eigen::Index>(states.size());
  std::vector<Eigen::Triplet<double>> entries;
  for (Eigen::Index r = 0; r < n; ++r) {
    double out_rate = 0.0;
    for (const auto& t : transitions(config, topology, states[r])) {
      if (t.kind == EventKind::LostUser) continue;
      const auto it = index.find(t.next);
      if (it == index.end()) throw std::logic_error("transition leaves the state list");
      entries.emplace_back(r, static_cast<Eigen::Index>(it->second), t.rate);
      out_rate += t.rate;
    }
    entries.emplace_back(r, r, -out_rate);
  }
  Eigen::SparseMatrix<double> q(n, n);
  q.setFromTriplets(entries.begin(), entries.end());
  return q;
}

ExactChain solve_exact_chain(const SystemConfig& config, const Topology& topology,
                             std::uint64_t max_states, bool dense) {
  ExactChain chain;
  std::deque<std::size_t> queue;
  const NetworkState start = initial_state(config, topology);
  chain.index.emplace(start, 0);
  chain.states.push_back(start);
  queue.push_back(0);
  while (!queue.empty()) {
    const std::size_t at = queue.front();
    queue.pop_front();
    const NetworkState current = chain.states[at];
    for (auto& t : transitions(config, topology, current)) {
      if (chain.index.contains(t.next)) continue;
      if (chain.states.size() >= max_states) throw StateCapExceeded(chain.states.size() + 1, max_states);
      chain.index.emplace(t.next, chain.states.size());
      chain.states.push_back(std::move(t.next));
      queue.push_back(chain.states.size() - 1);
    }
  }

  const auto n = static_cast<Eigen::Index>(chain.states.size());
  Eigen::SparseMatrix<double> qt = exact_generator(config, topology, chain.states, chain.index).transpose();
  // replace the last balance equation by the normalization
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  if (dense) {
    Matrix a = Matrix(qt);
    a.row(n - 1).setOnes();
    Eigen::FullPivLU<Matrix> lu(a);
    if (lu.rank() < n) throw std::runtime_error("exact chain has more than one closed class");
    chain.law = lu.solve(rhs);
  } else {
    Eigen::SparseMatrix<double> a = qt;
    a.prune([n](Eigen::Index row, Eigen::Index, double) { return row != n - 1; });
    std::vector<Eigen::Triplet<double>> ones;
    for (Eigen::Index c = 0; c < n; ++c) ones.emplace_back(n - 1, c, 1.0);
    Eigen::SparseMatrix<double> norm(n, n);
    norm.setFromTriplets(ones.begin(), ones.end());
    a += norm;
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw std::runtime_error("exact chain has more than one closed class");
    chain.law = lu.solve(rhs);
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    if (chain.law(k) < 0.0 && chain.law(k) > -1e-12) chain.law(k) = 0.0;
  }
  chain.law /= chain.law.sum();

  chain.marginals = MarginalTables::zeros(config, topology);
  for (Eigen::Index k = 0; k < n; ++k) chain.marginals.add(chain.states[k], chain.law(k));
  return chain;
}

}  // namespace dbss
