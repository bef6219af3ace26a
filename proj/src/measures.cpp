#include "dbss/measures.hpp"

#include <algorithm>
#include <cmath>
#include <locale>
#include <ostream>
#include <sstream>

namespace dbss {

namespace {

double mean_count(const Eigen::VectorXd& law) {
  double sum = 0.0;
  for (Eigen::Index c = 0; c < law.size(); ++c) sum += static_cast<double>(c) * law(c);
  return sum;
}

std::string format(double x) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.precision(17);
  out << x;
  return out.str();
}

}  // namespace

double BikeAudit::total() const {
  return region_usable + region_unusable + ride + removal + shop_usable + shop_unusable + returning;
}

MeasureReport compute_measures(const MarginalTables& tables, const SystemConfig& config,
                               const Topology& topology, MeasureScale scale) {
  MeasureReport r;
  BikeAudit& a = r.audit;

  for (int i = 0; i < topology.regions(); ++i) {
    const Matrix& law = tables.region[i];
    for (Eigen::Index good = 0; good < law.rows(); ++good) {
      for (Eigen::Index bad = 0; bad < law.cols(); ++bad) {
        a.region_usable += static_cast<double>(good) * law(good, bad);
        a.region_unusable += static_cast<double>(bad) * law(good, bad);
      }
    }
    a.removal += mean_count(tables.removal[i]);
    a.returning += mean_count(tables.returning[i]);
  }
  for (const auto& law : tables.ride) a.ride += mean_count(law);

  double empty_shop = 0.0;  // P(nB0 = 0)
  for (Eigen::Index good = 0; good < tables.shop.rows(); ++good) {
    for (Eigen::Index bad = 0; bad < tables.shop.cols(); ++bad) {
      const double p = tables.shop(good, bad);
      a.shop_usable += static_cast<double>(good) * p;
      a.shop_unusable += static_cast<double>(bad) * p;
      if (bad == 0) empty_shop += p;
    }
  }

  const double k = config.fleet;
  r.expected_unusable = a.region_unusable + a.removal + a.shop_unusable;
  r.expected_usable = a.region_usable + a.ride + a.returning;
  const double base = scale == MeasureScale::Fleet ? k : a.total();
  r.eta = base > 0.0 ? r.expected_unusable / base : 0.0;
  r.xi = base > 0.0 ? r.expected_usable / base : 0.0;
  r.busy = std::clamp(1.0 - empty_shop, 0.0, 1.0);

  const double in_shop = a.shop_usable + a.shop_unusable;
  if (in_shop > 0.0) {
    r.gamma1 = a.shop_usable / in_shop;
  } else {
    r.gamma1_degenerate = true;
  }
  if (r.expected_unusable > 0.0) {
    r.gamma2 = a.shop_unusable / r.expected_unusable;
  } else {
    r.gamma2_degenerate = true;
  }
  r.audit_gap = std::abs(a.total() - k);
  return r;
}

MeasureReport compute_measures(const ProductFormSolution& solution) {
  return compute_measures(solution.factor_form(), solution.config(), solution.topology());
}

std::string measures_csv_header() {
  return "eta,xi,F_A,gamma1,gamma2,E_unusable,E_usable,E_shop_usable,E_removal,audit_gap,"
         "gamma1_degenerate,gamma2_degenerate";
}

std::string measures_csv_row(const MeasureReport& r) {
  std::string row;
  for (double x : {r.eta, r.xi, r.busy, r.gamma1, r.gamma2, r.expected_unusable, r.expected_usable,
                   r.audit.shop_usable, r.audit.removal, r.audit_gap}) {
    row += format(x);
    row += ',';
  }
  row += r.gamma1_degenerate ? "1," : "0,";
  row += r.gamma2_degenerate ? "1" : "0";
  return row;
}

void write_measures(std::ostream& out, const MeasureReport& r) {
  out << "eta: " << format(r.eta) << '\n'
      << "xi: " << format(r.xi) << '\n'
      << "F_A: " << format(r.busy) << '\n'
      << "gamma1: " << format(r.gamma1) << (r.gamma1_degenerate ? " (empty shop, reported as 0)" : "")
      << '\n'
      << "gamma2: " << format(r.gamma2)
      << (r.gamma2_degenerate ? " (no unusable bikes, reported as 0)" : "") << '\n'
      << "E_unusable: " << format(r.expected_unusable) << '\n'
      << "E_usable: " << format(r.expected_usable) << '\n'
      << "audit: region_usable=" << format(r.audit.region_usable)
      << " region_unusable=" << format(r.audit.region_unusable) << " ride=" << format(r.audit.ride)
      << " removal=" << format(r.audit.removal) << " shop_usable=" << format(r.audit.shop_usable)
      << " shop_unusable=" << format(r.audit.shop_unusable)
      << " returning=" << format(r.audit.returning) << " gap=" << format(r.audit_gap) << '\n';
}

}  // namespace dbss
