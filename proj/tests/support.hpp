#pragma once

// Instances and independent oracles shared by the unit tests and the
// acceptance runner. Oracles here are built state by state from the model
// definitions, never from the library's block or slot machinery.

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dbss/block_generator.hpp"
#include "dbss/model.hpp"

namespace testkit {

using dbss::SystemConfig;

/// Two regions with the rates of the two-region example: lambda = (10, 8),
/// rides and returns at 0.2, removals at 0.3, alpha = 0.01, w = 1, r = 2.
/// Without explicit shares an even Z is split evenly and an odd Z goes to
/// region 1.
inline SystemConfig two_region_unchecked(int k, int m, int z, std::vector<double> beta = {}) {
  if (beta.empty()) beta = z % 2 == 0 ? std::vector<double>{0.5, 0.5} : std::vector<double>{1.0, 0.0};
  SystemConfig c;
  c.regions = 2;
  c.fleet = k;
  c.arrival_rate = {10.0, 8.0};
  c.ride_rate = {{0.0, 0.2}, {0.2, 0.0}};
  c.route_prob = {{0.0, 1.0}, {1.0, 0.0}};
  c.failure_rate = 0.01;
  c.repair_rate = 1.0;
  c.repairmen = 2;
  c.removal_batch = m;
  c.dispatch_batch = z;
  c.dispatch_share = std::move(beta);
  c.removal_rate = {0.3, 0.3};
  c.return_rate = {0.2, 0.2};
  for (int i = 0; i < 2; ++i) {
    if (c.dispatch_share[i] == 0.0) c.return_rate[i] = 0.0;
  }
  return c;
}

inline SystemConfig two_region(int k, int m, int z, std::vector<double> beta = {}) {
  SystemConfig c = two_region_unchecked(k, m, z, std::move(beta));
  dbss::require_valid(c);
  return c;
}

inline SystemConfig example_one(int k) { return two_region(k, 5, 10); }

/// Five-region star: region 1 sends riders uniformly to 2..5, which all
/// send back to 1.
inline SystemConfig star(int k) {
  SystemConfig c;
  c.regions = 5;
  c.fleet = k;
  c.route_prob.assign(5, std::vector<double>(5, 0.0));
  c.ride_rate.assign(5, std::vector<double>(5, 0.0));
  for (int j = 1; j < 5; ++j) {
    c.route_prob[0][j] = 0.25;
    c.route_prob[j][0] = 1.0;
  }
  c.repair_rate = 1.0;
  c.repairmen = 2;
  c.failure_rate = 0.01;
  return c;
}

/// Star with the rates of the alpha/w experiments (M = Z = 5).
inline SystemConfig star_alpha_w(int k) {
  SystemConfig c = star(k);
  c.arrival_rate = {0.30, 0.35, 15, 10, 10};
  c.return_rate = {8, 8, 0.40, 0.35, 0.35};
  c.removal_rate = {0.30, 0.20, 0.20, 0.20, 0.20};
  const double out[] = {0.30, 0.20, 0.30, 0.35};
  const double back[] = {0.30, 0.30, 0.35, 0.35};
  for (int j = 1; j < 5; ++j) {
    c.ride_rate[0][j] = out[j - 1];
    c.ride_rate[j][0] = back[j - 1];
  }
  c.removal_batch = 5;
  c.dispatch_batch = 5;
  c.dispatch_share = {0.2, 0.2, 0.2, 0.2, 0.2};
  return c;
}

/// Star with the rates of the batch-size experiments; everything repaired
/// returns to region 1.
inline SystemConfig star_batches(int k, int m, int z) {
  SystemConfig c = star(k);
  c.arrival_rate = {15, 10, 10, 8, 8};
  c.return_rate = {0.40, 0, 0, 0, 0};
  c.removal_rate = {0.20, 0.20, 0.20, 0.20, 0.20};
  const double out[] = {0.30, 0.30, 0.35, 0.35};
  const double back[] = {0.30, 0.30, 0.35, 0.35};
  for (int j = 1; j < 5; ++j) {
    c.ride_rate[0][j] = out[j - 1];
    c.ride_rate[j][0] = back[j - 1];
  }
  c.removal_batch = m;
  c.dispatch_batch = z;
  c.dispatch_share = {1, 0, 0, 0, 0};
  return c;
}

/// Random conservative block generator; entries positive with probability
/// `density`, redrawn until irreducible.
inline dbss::BlockGenerator random_generator(std::mt19937_64& rng, int max_levels = 5, int max_dim = 6,
                                double density = 0.6) {
  std::uniform_int_distribution<int> levels_dist(2, max_levels);
  std::uniform_int_distribution<int> dim_dist(1, max_dim);
  std::uniform_real_distribution<double> rate(0.05, 5.0);
  std::bernoulli_distribution keep(density);
  while (true) {
    const int levels = levels_dist(rng);
    std::vector<int> dims(levels);
    for (int& d : dims) d = dim_dist(rng);
    auto fill = [&](int rows, int cols, bool skip_diagonal) {
      dbss::Matrix b = dbss::Matrix::Zero(rows, cols);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          if (skip_diagonal && r == c) continue;
          if (keep(rng)) b(r, c) = rate(rng);
        }
      }
      return b;
    };
    std::vector<dbss::Matrix> diag, super;
    for (int k = 0; k < levels; ++k) diag.push_back(fill(dims[k], dims[k], true));
    for (int k = 0; k + 1 < levels; ++k) super.push_back(fill(dims[k], dims[k + 1], false));
    dbss::Matrix corner = fill(dims.back(), dims.front(), false);
    for (int k = 0; k < levels; ++k) {
      for (int r = 0; r < dims[k]; ++r) {
        double out = diag[k].row(r).sum();
        if (k + 1 < levels) out += super[k].row(r).sum();
        if (k + 1 == levels) out += corner.row(r).sum();
        diag[k](r, r) = -out;
      }
    }
    dbss::BlockGenerator gen(diag, super, corner);
    if (gen.irreducible()) return gen;
  }
}

inline dbss::RowVector flatten(const std::vector<dbss::RowVector>& levels) {
  Eigen::Index n = 0;
  for (const auto& l : levels) n += l.size();
  dbss::RowVector out(n);
  Eigen::Index at = 0;
  for (const auto& l : levels) {
    out.segment(at, l.size()) = l;
    at += l.size();
  }
  return out;
}

/// Stationary law as the normalized left null vector of a generator, from
/// the kernel of Q^T. Throws unless the kernel is one-dimensional.
inline Eigen::RowVectorXd null_space_stationary(const Eigen::MatrixXd& q) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(q.transpose());
  lu.setThreshold(1e-10);
  const Eigen::MatrixXd kernel = lu.kernel();
  if (kernel.cols() != 1) throw std::runtime_error("generator kernel is not one-dimensional");
  Eigen::RowVectorXd pi = kernel.col(0).transpose();
  return pi / pi.sum();
}

/// Dense generator of a chain given as a list of states and a successor
/// function returning (target state, rate) pairs.
template <class State, class Successors>
Eigen::MatrixXd dense_generator(const std::vector<State>& states, Successors&& successors) {
  std::map<State, int> index;
  for (int k = 0; k < static_cast<int>(states.size()); ++k) index[states[k]] = k;
  const auto n = static_cast<Eigen::Index>(states.size());
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    for (const auto& [target, rate] : successors(states[k])) {
      if (rate == 0.0) continue;
      const auto it = index.find(target);
      if (it == index.end()) throw std::runtime_error("successor outside the state list");
      q(k, it->second) += rate;
      q(k, k) -= rate;
    }
  }
  return q;
}

/// Region chain written state by state: (unusable, usable) with
/// unusable 0..M, usable 0..K-unusable.
///   usable +1 at `inflow` (while room), usable -1 at lambda (usable > 0);
///   below M a usable bike fails at usable * alpha (usable -1, unusable +1);
///   at M the truck empties the unusable count at mu_remove.
/// Returns P(usable, unusable) as a (K+1) x (M+1) table.
inline Eigen::MatrixXd region_oracle(int k, int m, double lambda, double alpha, double mu_remove,
                                     double inflow) {
  using S = std::pair<int, int>;
  std::vector<S> states;
  for (int bad = 0; bad <= m; ++bad) {
    for (int good = 0; good + bad <= k; ++good) states.push_back({bad, good});
  }
  auto next = [&](const S& s) {
    const auto [bad, good] = s;
    std::vector<std::pair<S, double>> out;
    if (good + bad < k) out.push_back({{bad, good + 1}, inflow});
    if (good > 0) out.push_back({{bad, good - 1}, lambda});
    if (bad < m && good > 0) out.push_back({{bad + 1, good - 1}, good * alpha});
    if (bad == m) out.push_back({{0, good}, mu_remove});
    return out;
  };
  const Eigen::RowVectorXd pi = null_space_stationary(dense_generator(states, next));
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(k + 1, m + 1);
  for (std::size_t s = 0; s < states.size(); ++s) table(states[s].second, states[s].first) = pi(s);
  return table;
}

/// Shop chain written state by state: (repaired g, unusable b) with
/// (g + b) a multiple of M, g + b <= phi*M, g <= Z.
///   below level Z: a batch of M unusable arrives at `inflow` while the
///   total stays <= phi*M; a repair at min(b, r) * w moves one bike to g+1;
///   at level Z only the dispatch truck acts, at mu0, resetting g to 0.
inline Eigen::MatrixXd shop_oracle(int m, int z, int phi, int r, double w, double mu0,
                                   double inflow) {
  using S = std::pair<int, int>;
  std::vector<S> states;
  for (int g = 0; g <= z; ++g) {
    for (int b = 0; g + b <= phi * m; ++b) {
      if ((g + b) % m == 0) states.push_back({g, b});
    }
  }
  auto next = [&](const S& s) {
    const auto [g, b] = s;
    std::vector<std::pair<S, double>> out;
    if (g == z) {
      out.push_back({{0, b}, mu0});
      return out;
    }
    if (g + b + m <= phi * m) out.push_back({{g, b + m}, inflow});
    if (b > 0) out.push_back({{g + 1, b - 1}, std::min(b, r) * w});
    return out;
  };
  const Eigen::RowVectorXd pi = null_space_stationary(dense_generator(states, next));
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(z + 1, phi * m + 1);
  for (std::size_t s = 0; s < states.size(); ++s) table(states[s].first, states[s].second) = pi(s);
  return table;
}

/// Every state of the network by brute force: each coordinate runs over
/// 0..K independently and the tuple is kept when it satisfies the state
/// space rules as written in the model description.
inline std::vector<dbss::NetworkState> brute_force_states(const SystemConfig& c,
                                                          const dbss::Topology& topo) {
  const int n = c.regions;
  const int k = c.fleet;
  const int m = c.removal_batch;
  const int phi = k / m;
  const int psi = c.dispatch_batch / m;
  const int coords = 2 * n + 2 + static_cast<int>(topo.ride_count()) + 2 * n;
  std::vector<int> x(coords, 0);
  std::vector<dbss::NetworkState> out;
  while (true) {
    int total = 0;
    for (int v : x) total += v;
    if (total == k) {
      dbss::NetworkState s = dbss::NetworkState::empty(topo);
      int at = 0;
      for (int i = 0; i < n; ++i) s.usable[i] = x[at++];
      for (int i = 0; i < n; ++i) s.unusable[i] = x[at++];
      s.shop_usable = x[at++];
      s.shop_unusable = x[at++];
      for (std::size_t p = 0; p < topo.ride_count(); ++p) s.riding[p] = x[at++];
      for (int i = 0; i < n; ++i) s.removing[i] = x[at++];
      for (int i = 0; i < n; ++i) s.returning[i] = x[at++];

      bool ok = true;
      for (int i = 0; i < n; ++i) {
        ok = ok && s.unusable[i] <= m;
        ok = ok && s.removing[i] % m == 0 && s.removing[i] / m <= phi;
        const int zi = static_cast<int>(std::lround(c.dispatch_share[i] * c.dispatch_batch));
        if (zi == 0) {
          ok = ok && s.returning[i] == 0;
        } else {
          ok = ok && s.returning[i] % zi == 0 && (s.returning[i] / zi) * psi <= phi;
        }
      }
      const int shop = s.shop_usable + s.shop_unusable;
      ok = ok && shop % m == 0 && shop / m <= phi && s.shop_usable <= c.dispatch_batch &&
           s.shop_unusable <= phi * m;
      if (ok) out.push_back(std::move(s));
    }
    int pos = 0;
    while (pos < coords && x[pos] == k) x[pos++] = 0;
    if (pos == coords) break;
    ++x[pos];
  }
  return out;
}

/// log((e/mu)^m / m!) for a road; 0 at m = 0, -inf when e = 0 and m > 0.
inline double log_road(double e, double mu, int count) {
  if (count == 0) return 0.0;
  if (e == 0.0) return -INFINITY;
  return count * std::log(e / mu) - std::lgamma(count + 1.0);
}

}  // namespace testkit
