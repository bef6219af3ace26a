#include "dbss/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <random>
#include <thread>

#include "dbss/dynamics.hpp"

namespace dbss {

namespace {

Estimate summarize(const std::vector<double>& xs) {
  Estimate e;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) e.mean += x;
  e.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    e.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return e;
}

void check_invariants(const SystemConfig& config, const Topology& topology, const NetworkState& s,
                      double time) {
  if (s.total() != config.fleet) {
    throw SimulationInvariantError("bike count " + std::to_string(s.total()) + " != " +
                                   std::to_string(config.fleet) + " at t=" + std::to_string(time));
  }
  if (!is_admissible(config, topology, s)) {
    throw SimulationInvariantError("illegal state at t=" + std::to_string(time));
  }
}

}  // namespace

ReplicationResult simulate_replication(const SystemConfig& config, const Topology& topology,
                                       const SimConfig& sim, int replication) {
  if (!(sim.horizon > sim.warmup) || sim.warmup < 0.0) {
    throw std::invalid_argument("need horizon > warmup >= 0");
  }
  std::seed_seq seq{static_cast<std::uint32_t>(sim.seed), static_cast<std::uint32_t>(sim.seed >> 32),
                    static_cast<std::uint32_t>(replication)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  ReplicationResult out;
  out.marginals = MarginalTables::zeros(config, topology);
  NetworkState state = initial_state(config, topology);
  check_invariants(config, topology, state, 0.0);

  double t = 0.0;
  while (true) {
    const std::vector<Transition> moves = transitions(config, topology, state);
    double total = 0.0;
    for (const auto& m : moves) total += m.rate;
    const double dwell = total > 0.0 ? std::exponential_distribution<double>(total)(rng)
                                     : sim.horizon - t;
    const double end = std::min(t + dwell, sim.horizon);
    const double counted = end - std::max(t, sim.warmup);
    if (counted > 0.0) out.marginals.add(state, counted);
    t = end;
    if (t >= sim.horizon || total <= 0.0) break;

    double pick = unit(rng) * total;
    std::size_t k = 0;
    while (k + 1 < moves.size() && pick >= moves[k].rate) pick -= moves[k++].rate;
    const Transition& move = moves[k];
    ++out.events;
    if (move.kind == EventKind::LostUser) {
      if (t >= sim.warmup) ++out.lost_users;
    } else {
      state = move.next;
    }
    check_invariants(config, topology, state, t);
    ++out.checked_events;
  }
  out.marginals.scale(1.0 / (sim.horizon - sim.warmup));
  out.measures = compute_measures(out.marginals, config, topology);
  return out;
}

SimEstimates simulate(const SystemConfig& config, const Topology& topology, const SimConfig& sim) {
  if (sim.replications < 1) throw std::invalid_argument("need at least one replication");
  const int r = sim.replications;
  std::vector<ReplicationResult> results(r);
  std::vector<std::exception_ptr> errors(r);
  std::atomic<int> next{0};
  int workers = sim.threads > 0 ? sim.threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, r);
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int k = next++; k < r; k = next++) {
          try {
            results[k] = simulate_replication(config, topology, sim, k);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SimEstimates est;
  est.marginals = MarginalTables::zeros(config, topology);
  est.marginal_se = MarginalTables::zeros(config, topology);
  for (const auto& res : results) est.marginals.add_scaled(res.marginals, 1.0 / r);
  if (r > 1) {
    // se of each bin: sqrt(sum (x - mean)^2 / (r - 1) / r)
    auto accumulate_sq = [&](auto& se, const auto& x, const auto& mean) {
      se += (x - mean).array().square().matrix();
    };
    for (const auto& res : results) {
      for (std::size_t i = 0; i < est.marginals.region.size(); ++i) {
        accumulate_sq(est.marginal_se.region[i], res.marginals.region[i], est.marginals.region[i]);
        accumulate_sq(est.marginal_se.removal[i], res.marginals.removal[i], est.marginals.removal[i]);
        accumulate_sq(est.marginal_se.returning[i], res.marginals.returning[i], est.marginals.returning[i]);
      }
      accumulate_sq(est.marginal_se.shop, res.marginals.shop, est.marginals.shop);
      for (std::size_t p = 0; p < est.marginals.ride.size(); ++p) {
        accumulate_sq(est.marginal_se.ride[p], res.marginals.ride[p], est.marginals.ride[p]);
      }
    }
    const double f = 1.0 / ((r - 1.0) * r);
    auto finish = [f](auto& se) { se = (se * f).array().sqrt().matrix(); };
    for (auto& m : est.marginal_se.region) finish(m);
    finish(est.marginal_se.shop);
    for (auto& v : est.marginal_se.ride) finish(v);
    for (auto& v : est.marginal_se.removal) finish(v);
    for (auto& v : est.marginal_se.returning) finish(v);
  }

  auto collect = [&](auto field) {
    std::vector<double> xs;
    for (const auto& res : results) xs.push_back(field(res));
    return summarize(xs);
  };
  est.eta = collect([](const ReplicationResult& x) { return x.measures.eta; });
  est.xi = collect([](const ReplicationResult& x) { return x.measures.xi; });
  est.busy = collect([](const ReplicationResult& x) { return x.measures.busy; });
  est.gamma1 = collect([](const ReplicationResult& x) { return x.measures.gamma1; });
  est.gamma2 = collect([](const ReplicationResult& x) { return x.measures.gamma2; });
  est.expected_unusable = collect([](const ReplicationResult& x) { return x.measures.expected_unusable; });
  est.expected_usable = collect([](const ReplicationResult& x) { return x.measures.expected_usable; });
  const double window = sim.horizon - sim.warmup;
  est.lost_user_rate = collect([window](const ReplicationResult& x) { return x.lost_users / window; });
  for (const auto& res : results) {
    est.events += res.events;
    est.checked_events += res.checked_events;
  }
  est.replications = std::move(results);
  return est;
}

void write_histogram_csv(std::ostream& out, const SystemConfig& config, const Topology& topology,
                         const SimEstimates& est) {
  out << "query,probability,se\n";
  const auto precision = out.precision(17);
  for (const auto& q : all_queries(config, topology)) {
    out << describe(q) << ',' << est.marginals.lookup(topology, q) << ','
        << est.marginal_se.lookup(topology, q) << '\n';
  }
  out.precision(precision);
}

}  // namespace dbss
