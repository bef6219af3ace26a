#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dbss/marginals.hpp"
#include "dbss/model.hpp"
#include "dbss/product_form.hpp"

namespace dbss {

/// Expected bike counts per location class. Together they account for the
/// whole fleet.
struct BikeAudit {
  double region_usable = 0.0;
  double region_unusable = 0.0;
  double ride = 0.0;
  double removal = 0.0;        // unusable bikes on trucks to the shop
  double shop_usable = 0.0;    // repaired, waiting for dispatch
  double shop_unusable = 0.0;
  double returning = 0.0;      // repaired bikes on trucks to regions

  double total() const;
};

struct MeasureReport {
  double eta = 0.0;       // E[unusable] / K
  double xi = 0.0;        // E[usable in regions and on roads] / K
  double busy = 0.0;      // 1 - P(no unusable bike in the shop)
  double gamma1 = 0.0;    // repaired share of the bikes in the shop
  double gamma2 = 0.0;    // shop share of all unusable bikes
  double expected_unusable = 0.0;
  double expected_usable = 0.0;

  /// Set when a ratio had a zero denominator and was reported as 0.
  bool gamma1_degenerate = false;
  bool gamma2_degenerate = false;

  BikeAudit audit;
  /// |audit.total() - K|
  double audit_gap = 0.0;
};

/// Denominator of eta and xi. Exact laws account for K bikes, so Fleet and
/// Accounted agree there. Independent node marginals (the decomposition) do
/// not conserve bikes, and Accounted keeps their shares within [0, 1];
/// audit_gap still reports the mismatch.
enum class MeasureScale { Fleet, Accounted };

/// Measures from any set of per-node marginals over the state space.
MeasureReport compute_measures(const MarginalTables& tables, const SystemConfig& config,
                               const Topology& topology, MeasureScale scale = MeasureScale::Fleet);

/// Measures from the H * C~ / C marginals of a product-form solution.
MeasureReport compute_measures(const ProductFormSolution& solution);

/// Comma-separated names matching measures_csv_row.
std::string measures_csv_header();
std::string measures_csv_row(const MeasureReport& report);

/// name: value lines, for human-readable summaries.
void write_measures(std::ostream& out, const MeasureReport& report);

}  // namespace dbss
