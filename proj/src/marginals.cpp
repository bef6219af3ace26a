#include "dbss/marginals.hpp"

#include <ostream>
#include <stdexcept>

namespace dbss {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double at(const Eigen::VectorXd& v, int index) {
  return index >= 0 && index < v.size() ? v(index) : 0.0;
}

double at(const Matrix& m, int row, int col) {
  return row >= 0 && row < m.rows() && col >= 0 && col < m.cols() ? m(row, col) : 0.0;
}

void check_region(const Topology& topology, int region) {
  if (region < 0 || region >= topology.regions()) {
    throw std::invalid_argument("no region " + std::to_string(region + 1));
  }
}

}  // namespace

MarginalTables MarginalTables::zeros(const SystemConfig& config, const Topology& topology) {
  const int k = config.fleet;
  const int n = topology.regions();
  MarginalTables t;
  t.region.assign(n, Matrix::Zero(k + 1, config.removal_batch + 1));
  t.shop = Matrix::Zero(config.dispatch_batch + 1, config.max_batches() * config.removal_batch + 1);
  t.ride.assign(topology.ride_count(), Eigen::VectorXd::Zero(k + 1));
  t.removal.assign(n, Eigen::VectorXd::Zero(k + 1));
  t.returning.assign(n, Eigen::VectorXd::Zero(k + 1));
  return t;
}

void MarginalTables::add(const NetworkState& state, double weight) {
  for (std::size_t i = 0; i < region.size(); ++i) {
    region[i](state.usable[i], state.unusable[i]) += weight;
    removal[i](state.removing[i]) += weight;
    returning[i](state.returning[i]) += weight;
  }
  shop(state.shop_usable, state.shop_unusable) += weight;
  for (std::size_t r = 0; r < ride.size(); ++r) ride[r](state.riding[r]) += weight;
}

void MarginalTables::scale(double factor) {
  for (auto& m : region) m *= factor;
  shop *= factor;
  for (auto& v : ride) v *= factor;
  for (auto& v : removal) v *= factor;
  for (auto& v : returning) v *= factor;
}

void MarginalTables::add_scaled(const MarginalTables& other, double factor) {
  for (std::size_t i = 0; i < region.size(); ++i) region[i] += factor * other.region[i];
  shop += factor * other.shop;
  for (std::size_t r = 0; r < ride.size(); ++r) ride[r] += factor * other.ride[r];
  for (std::size_t i = 0; i < removal.size(); ++i) removal[i] += factor * other.removal[i];
  for (std::size_t i = 0; i < returning.size(); ++i) returning[i] += factor * other.returning[i];
}

double MarginalTables::lookup(const Topology& topology, const MarginalQuery& query) const {
  return std::visit(
      overloaded{
          [&](const RegionQuery& q) {
            check_region(topology, q.region);
            return at(region[q.region], q.usable, q.unusable);
          },
          [&](const ShopQuery& q) { return at(shop, q.usable, q.unusable); },
          [&](const RideQuery& q) {
            const int position = topology.ride_position(q.from, q.to);
            if (position < 0) {
              throw std::invalid_argument("no ride road " + std::to_string(q.from + 1) + "->" +
                                          std::to_string(q.to + 1));
            }
            return at(ride[position], q.count);
          },
          [&](const RemovalQuery& q) {
            check_region(topology, q.region);
            return at(removal[q.region], q.count);
          },
          [&](const ReturnQuery& q) {
            check_region(topology, q.region);
            if (topology.return_node(q.region) < 0) {
              throw std::invalid_argument("no return road 0->" + std::to_string(q.region + 1));
            }
            return at(returning[q.region], q.count);
          },
      },
      query);
}

std::string describe(const MarginalQuery& query) {
  return std::visit(
      overloaded{
          [](const RegionQuery& q) {
            return "region[" + std::to_string(q.region + 1) + "](nG=" + std::to_string(q.usable) +
                   ";nB=" + std::to_string(q.unusable) + ")";
          },
          [](const ShopQuery& q) {
            return "shop(nG=" + std::to_string(q.usable) + ";nB=" + std::to_string(q.unusable) + ")";
          },
          [](const RideQuery& q) {
            return "ride[" + std::to_string(q.from + 1) + "->" + std::to_string(q.to + 1) +
                   "](m=" + std::to_string(q.count) + ")";
          },
          [](const RemovalQuery& q) {
            return "removal[" + std::to_string(q.region + 1) + "->0](m=" + std::to_string(q.count) + ")";
          },
          [](const ReturnQuery& q) {
            return "return[0->" + std::to_string(q.region + 1) + "](m=" + std::to_string(q.count) + ")";
          },
      },
      query);
}

std::vector<MarginalQuery> all_queries(const SystemConfig& config, const Topology& topology) {
  const int k = config.fleet;
  const int m = config.removal_batch;
  const int phi = config.max_batches();
  std::vector<MarginalQuery> out;
  for (int i = 0; i < topology.regions(); ++i) {
    for (int bad = 0; bad <= m; ++bad) {
      for (int good = 0; good + bad <= k; ++good) out.push_back(RegionQuery{i, good, bad});
    }
  }
  for (int good = 0; good <= config.dispatch_batch; ++good) {
    for (int bad = 0; bad <= phi * m; ++bad) {
      if ((good + bad) % m == 0 && (good + bad) / m <= phi) out.push_back(ShopQuery{good, bad});
    }
  }
  for (const auto& road : topology.ride_roads()) {
    for (int c = 0; c <= k; ++c) out.push_back(RideQuery{road.from, road.to, c});
  }
  for (int i = 0; i < topology.regions(); ++i) {
    for (int h = 0; h <= phi; ++h) out.push_back(RemovalQuery{i, h * m});
  }
  for (int i = 0; i < topology.regions(); ++i) {
    if (topology.return_node(i) < 0) continue;
    const int zi = config.dispatch_count(i);
    for (int l = 0; l * config.batch_ratio() <= phi && l * zi <= k; ++l) {
      out.push_back(ReturnQuery{i, l * zi});
    }
  }
  return out;
}

void write_marginals_csv(std::ostream& out, const SystemConfig& config, const Topology& topology,
                         const MarginalTables& tables) {
  out << "query,probability\n";
  const auto precision = out.precision(17);
  for (const auto& q : all_queries(config, topology)) {
    out << describe(q) << ',' << tables.lookup(topology, q) << '\n';
  }
  out.precision(precision);
}

}  // namespace dbss
