#include <random>
#include <sstream>

#include "doctest.h"
#include "dbss/routing.hpp"
#include "support.hpp"

using namespace dbss;

namespace {

/// Solves e = e P with sum(e) = n for a fixed stochastic P, directly from
/// the kernel of (P^T - I).
RowVector fixed_routing_rates(const Matrix& p) {
  const Eigen::Index n = p.rows();
  RowVector e = testkit::null_space_stationary(p - Matrix::Identity(n, n));
  return e * static_cast<double>(n);
}

}  // namespace

TEST_CASE("routing matrix rows are distributions") {
  const SystemConfig c = testkit::example_one(15);
  const Topology t = Topology::build(c);
  const RelativeRates e = RelativeRates::Ones(static_cast<Eigen::Index>(t.size()));
  const NodeSolutions nodes = solve_nodes(c, t, e);
  RoutingDiagnostics diag;
  const Matrix p = build_routing_matrix(c, t, nodes.regions, nodes.shop, &diag);
  CHECK((p.array() >= 0.0).all());
  CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
  CHECK(diag.max_clamp <= 1e-12);
  // roads always deliver to their end node
  CHECK(p(t.ride_node(0, 1), t.region_node(1)) == 1.0);
  CHECK(p(t.removal_node(0), t.shop_node()) == 1.0);
  CHECK(p(t.return_node(1), t.region_node(1)) == 1.0);
}

TEST_CASE("converged rates solve the traffic equations of their own routing matrix") {
  for (int k : {10, 15, 20}) {
    const SystemConfig c = testkit::example_one(k);
    const Topology t = Topology::build(c);
    const FixedPointResult fp = solve_relative_rates(c, t);
    CHECK(fp.residual < 1e-10);
    const NodeSolutions nodes = solve_nodes(c, t, fp.rates);
    const Matrix p = build_routing_matrix(c, t, nodes.regions, nodes.shop);
    const RowVector oracle = fixed_routing_rates(p);
    CHECK((oracle - fp.rates).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(fixed_point_residual(c, t, fp.rates, RateAnchor::NodeCount) < 1e-9);
  }
}

TEST_CASE("fixed point does not depend on the starting vector") {
  const SystemConfig c = testkit::two_region(6, 2, 2);
  const Topology t = Topology::build(c);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  std::vector<RelativeRates> starts;
  for (int s = 0; s < 20; ++s) {
    RelativeRates e(static_cast<Eigen::Index>(t.size()));
    for (Eigen::Index k = 0; k < e.size(); ++k) e(k) = u(rng);
    starts.push_back(e);
  }
  const auto found = distinct_fixed_points(c, t, starts, {}, 1e-8);
  CHECK(found.size() == 1);
}

// The node chains see absolute inflows, so the two anchors are different
// fixed points rather than rescalings of one another.
TEST_CASE("each anchor yields its own fixed point") {
  const SystemConfig c = testkit::example_one(10);
  const Topology t = Topology::build(c);
  FixedPointOptions first;
  first.anchor = RateAnchor::FirstRegion;
  const RelativeRates a = solve_relative_rates(c, t).rates;
  const RelativeRates b = solve_relative_rates(c, t, first).rates;
  CHECK(a.sum() == doctest::Approx(9.0));
  CHECK(b(t.region_node(0)) == doctest::Approx(1.0));
  CHECK(fixed_point_residual(c, t, a) <= 1e-9);
  CHECK(fixed_point_residual(c, t, b, first.anchor) <= 1e-9);
}

TEST_CASE("failure-free system sends nothing to the shop") {
  SystemConfig c = testkit::two_region(6, 2, 2);
  c.failure_rate = 0.0;
  const Topology t = Topology::build(c);
  const FixedPointResult fp = solve_relative_rates(c, t);
  CHECK(fp.rates(t.shop_node()) == 0.0);
  CHECK(fp.rates(t.removal_node(0)) == 0.0);
  CHECK(fp.rates(t.return_node(1)) == 0.0);
  CHECK(fp.rates(t.region_node(0)) > 0.0);
}

TEST_CASE("non-convergence carries the trace") {
  const SystemConfig c = testkit::example_one(10);
  const Topology t = Topology::build(c);
  FixedPointOptions opt;
  opt.max_iterations = 3;
  try {
    solve_relative_rates(c, t, opt);
    FAIL("expected NonConvergence");
  } catch (const NonConvergence& e) {
    CHECK(e.trace().size() == 3);
  }
}

TEST_CASE("trace CSV has one row per iteration") {
  const SystemConfig c = testkit::example_one(10);
  const Topology t = Topology::build(c);
  const FixedPointResult fp = solve_relative_rates(c, t);
  std::ostringstream out;
  write_trace_csv(out, t, fp.trace);
  const std::string text = out.str();
  CHECK(text.rfind("iteration,residual,damping,e[0],e[1],e[2],e[1->2]", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(fp.trace.size() + 1));
}

TEST_CASE("bad starting vectors are rejected") {
  const SystemConfig c = testkit::example_one(10);
  const Topology t = Topology::build(c);
  FixedPointOptions opt;
  opt.initial = RelativeRates::Ones(3);
  CHECK_THROWS_AS(solve_relative_rates(c, t, opt), std::invalid_argument);
  opt.initial = -RelativeRates::Ones(static_cast<Eigen::Index>(t.size()));
  CHECK_THROWS_AS(solve_relative_rates(c, t, opt), std::invalid_argument);
}
