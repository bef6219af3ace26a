#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dbss {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

/// Raised when a generator cannot be factorized: singular diagonal block,
/// reducible chain or malformed block shapes.
class GeneratorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Level-structured CTMC generator with levels 0..L whose only nonzero
/// blocks are the diagonal Q(k,k), the superdiagonal Q(k,k+1) and the
/// corner Q(L,0):
///
///   | Q00 Q01             |
///   |     Q11 Q12         |
///   |         ...  ...    |
///   | QL0             QLL |
class BlockGenerator {
 public:
  BlockGenerator(std::vector<Matrix> diag, std::vector<Matrix> super, Matrix corner);

  /// L + 1.
  int num_levels() const { return static_cast<int>(diag_.size()); }
  int last_level() const { return num_levels() - 1; }
  std::vector<int> level_dims() const;
  int total_dim() const;
  /// Offset of the first phase of `level` in the assembled matrix.
  int level_offset(int level) const;

  const Matrix& diag(int level) const { return diag_.at(level); }
  const Matrix& super(int level) const { return super_.at(level); }
  const Matrix& corner() const { return corner_; }

  Matrix assemble() const;

  /// Checks shapes, signs and zero row sums (to `tolerance`); throws
  /// GeneratorError with the offending location.
  void check_conservative(double tolerance = 1e-9) const;
  /// Strong connectivity of the state-level transition digraph.
  bool irreducible() const;

 private:
  std::vector<Matrix> diag_;
  std::vector<Matrix> super_;
  Matrix corner_;
};

/// UL-type RG-factorization Q = (I - R_U) Psi_D (I - G_L) of a
/// BlockGenerator. Only the structurally nonzero blocks are stored:
/// R(k,k+1) and G(k,0); every other R/G block is exactly zero.
struct RGFactors {
  std::vector<Matrix> psi;      // Psi_k, k = 0..L
  std::vector<Matrix> r_up;     // R(k,k+1), k = 0..L-1
  std::vector<Matrix> g_low;    // G(k,0) at index k, k = 1..L (index 0 unused, empty)
  std::vector<Matrix> corners;  // censored corner Q^{[<=k]}(k,0) at index k, k = 1..L

  int num_levels() const { return static_cast<int>(psi.size()); }
  /// Dense (I - R_U) Psi_D (I - G_L).
  Matrix reconstruct() const;
};

/// Censored corner block: Q(k,k+1)(-Q(k+1,k+1))^{-1} ... Q(L-1,L)(-Q(L,L))^{-1} Q(L,0),
/// valid for 1 <= k <= L - 1. Level L returns the corner itself.
Matrix censored_corner(const BlockGenerator& gen, int level);

/// Generator of the chain censored to level 0.
Matrix censored_level0(const BlockGenerator& gen);

RGFactors rg_factorize(const BlockGenerator& gen);

/// Stationary probability vector per level, from the level-0 censored chain
/// and the R-measure recursion pi_k = pi_{k-1} R(k-1,k).
std::vector<RowVector> stationary_vector(const RGFactors& factors);

/// Stationary vector of a small irreducible conservative generator, by
/// replacing one balance equation with the normalization.
RowVector stationary_of_generator(const Matrix& generator);

/// Dumps in a MatrixMarket-like coordinate format.
void write_matrix_market(std::ostream& out, const Matrix& matrix, const std::string& comment = {});
void dump_generator(std::ostream& out, const BlockGenerator& gen);
void dump_factors(std::ostream& out, const RGFactors& factors);

}  // namespace dbss
