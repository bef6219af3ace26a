#include "doctest.h"
#include "dbss/dynamics.hpp"
#include "dbss/measures.hpp"
#include "support.hpp"

using namespace dbss;

namespace {

int sum(const std::vector<int>& v) {
  int s = 0;
  for (int x : v) s += x;
  return s;
}

/// Measures evaluated directly as expectations under a law over states.
struct Direct {
  double unusable = 0, usable = 0, shop_empty = 0, shop_good = 0, shop_bad = 0;
};

Direct direct(const ExactChain& chain) {
  Direct d;
  for (std::size_t k = 0; k < chain.states.size(); ++k) {
    const NetworkState& s = chain.states[k];
    const double p = chain.law(static_cast<Eigen::Index>(k));
    d.unusable += p * (sum(s.unusable) + s.shop_unusable + sum(s.removing));
    d.usable += p * (sum(s.usable) + sum(s.riding) + sum(s.returning));
    d.shop_empty += s.shop_unusable == 0 ? p : 0.0;
    d.shop_good += p * s.shop_usable;
    d.shop_bad += p * s.shop_unusable;
  }
  return d;
}

}  // namespace

TEST_CASE("measures of the exact chain equal expectations taken state by state") {
  for (const auto& c : {testkit::two_region(2, 1, 1), testkit::two_region(4, 2, 2)}) {
    const Topology t = Topology::build(c);
    const ExactChain chain = solve_exact_chain(c, t, 100000, true);
    const MeasureReport r = compute_measures(chain.marginals, c, t);
    const Direct d = direct(chain);
    CHECK(r.expected_unusable == doctest::Approx(d.unusable).epsilon(1e-12));
    CHECK(r.expected_usable == doctest::Approx(d.usable).epsilon(1e-12));
    CHECK(r.eta == doctest::Approx(d.unusable / c.fleet).epsilon(1e-12));
    CHECK(r.xi == doctest::Approx(d.usable / c.fleet).epsilon(1e-12));
    CHECK(r.busy == doctest::Approx(1.0 - d.shop_empty).epsilon(1e-12));
    CHECK(r.gamma1 == doctest::Approx(d.shop_good / (d.shop_good + d.shop_bad)).epsilon(1e-12));
    CHECK(r.gamma2 == doctest::Approx(d.shop_bad / d.unusable).epsilon(1e-12));
    CHECK(r.audit_gap <= 1e-8);
  }
}

TEST_CASE("product-form measures pass the bike audit") {
  for (const auto& c : {testkit::example_one(10), testkit::two_region(4, 2, 2)}) {
    const Topology t = Topology::build(c);
    const FixedPointResult fp = solve_relative_rates(c, t);
    const MeasureReport r = compute_measures(solve_product_form(c, t, fp.rates, fp.nodes));
    CHECK(r.audit_gap <= 1e-8);
    for (double x : {r.eta, r.xi, r.busy, r.gamma1, r.gamma2}) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
    // shop-usable bikes are neither in eta nor in xi
    CHECK(r.eta + r.xi + r.audit.shop_usable / c.fleet == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("decomposition shares are taken over the bikes it accounts for") {
  const SystemConfig c = testkit::star_alpha_w(8);
  const Topology t = Topology::build(c);
  const FixedPointResult fp = solve_relative_rates(c, t);
  const MarginalTables m = decomposition_tables(c, t, fp.rates, fp.nodes);
  const MeasureReport r = compute_measures(m, c, t, MeasureScale::Accounted);
  CHECK(r.eta >= 0.0);
  CHECK(r.eta <= 1.0);
  CHECK(r.eta + r.xi + r.audit.shop_usable / r.audit.total() == doctest::Approx(1.0).epsilon(1e-12));
  // independent nodes do not conserve the fleet; the audit says so
  CHECK(r.audit_gap == doctest::Approx(std::abs(r.audit.total() - c.fleet)));
  // on an exact law the two scales agree
  const SystemConfig small = testkit::two_region(3, 1, 1);
  const Topology ts = Topology::build(small);
  const ExactChain chain = solve_exact_chain(small, ts);
  CHECK(compute_measures(chain.marginals, small, ts, MeasureScale::Accounted).eta ==
        doctest::Approx(compute_measures(chain.marginals, small, ts).eta).epsilon(1e-12));
}

TEST_CASE("failure-free system has no unusable bikes") {
  SystemConfig c = testkit::two_region(4, 2, 2);
  c.failure_rate = 0.0;
  const Topology t = Topology::build(c);
  const FixedPointResult fp = solve_relative_rates(c, t);
  const MeasureReport r = compute_measures(solve_product_form(c, t, fp.rates, fp.nodes));
  CHECK(r.eta == 0.0);
  CHECK(r.busy == 0.0);
  CHECK(r.expected_unusable == 0.0);
  CHECK(r.gamma2 == 0.0);
  CHECK(r.gamma2_degenerate);
  CHECK(r.gamma1_degenerate);
  CHECK(r.xi == doctest::Approx(1.0));
}

TEST_CASE("measures CSV row matches its header") {
  MeasureReport r;
  r.eta = 0.25;
  const std::string header = measures_csv_header();
  const std::string row = measures_csv_row(r);
  CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));
  CHECK(row.rfind("0.25,", 0) == 0);
}
