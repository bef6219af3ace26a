#include "dbss/block_generator.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace dbss {

namespace {

std::string level_name(int level) { return "level " + std::to_string(level); }

/// LU of -block; throws when the block is numerically singular.
Eigen::PartialPivLU<Matrix> negated_lu(const Matrix& block, int level) {
  Eigen::PartialPivLU<Matrix> lu(-block);
  const double rcond = lu.rcond();
  if (!(rcond > std::numeric_limits<double>::epsilon())) {
    throw GeneratorError("singular diagonal block at " + level_name(level) +
                         " (invalid generator)");
  }
  return lu;
}

/// (-block)^{-1} * rhs
Matrix left_solve(const Matrix& block, const Matrix& rhs, int level) {
  return negated_lu(block, level).solve(rhs);
}

/// lhs * (-block)^{-1}
Matrix right_solve(const Matrix& lhs, const Matrix& block, int level) {
  Eigen::PartialPivLU<Matrix> lu = negated_lu(block.transpose(), level);
  return lu.solve(lhs.transpose()).transpose();
}

}  // namespace

BlockGenerator::BlockGenerator(std::vector<Matrix> diag, std::vector<Matrix> super, Matrix corner)
    : diag_(std::move(diag)), super_(std::move(super)), corner_(std::move(corner)) {
  if (diag_.size() < 2) throw GeneratorError("a block generator needs at least two levels");
  if (super_.size() + 1 != diag_.size()) {
    throw GeneratorError("expected " + std::to_string(diag_.size() - 1) + " superdiagonal blocks");
  }
  for (std::size_t k = 0; k < diag_.size(); ++k) {
    if (diag_[k].rows() != diag_[k].cols() || diag_[k].rows() == 0) {
      throw GeneratorError("diagonal block at " + level_name(static_cast<int>(k)) +
                           " must be square and nonempty");
    }
  }
  for (std::size_t k = 0; k < super_.size(); ++k) {
    if (super_[k].rows() != diag_[k].rows() || super_[k].cols() != diag_[k + 1].rows()) {
      throw GeneratorError("superdiagonal block at " + level_name(static_cast<int>(k)) +
                           " has the wrong shape");
    }
  }
  if (corner_.rows() != diag_.back().rows() || corner_.cols() != diag_.front().rows()) {
    throw GeneratorError("corner block has the wrong shape");
  }
}

std::vector<int> BlockGenerator::level_dims() const {
  std::vector<int> dims;
  dims.reserve(diag_.size());
  for (const auto& d : diag_) dims.push_back(static_cast<int>(d.rows()));
  return dims;
}

int BlockGenerator::total_dim() const {
  int total = 0;
  for (const auto& d : diag_) total += static_cast<int>(d.rows());
  return total;
}

int BlockGenerator::level_offset(int level) const {
  int offset = 0;
  for (int k = 0; k < level; ++k) offset += static_cast<int>(diag_[k].rows());
  return offset;
}

Matrix BlockGenerator::assemble() const {
  const int n = total_dim();
  Matrix q = Matrix::Zero(n, n);
  for (int k = 0; k < num_levels(); ++k) {
    const int off = level_offset(k);
    q.block(off, off, diag_[k].rows(), diag_[k].cols()) = diag_[k];
    if (k + 1 < num_levels()) {
      q.block(off, level_offset(k + 1), super_[k].rows(), super_[k].cols()) = super_[k];
    }
  }
  q.block(level_offset(last_level()), 0, corner_.rows(), corner_.cols()) = corner_;
  return q;
}

void BlockGenerator::check_conservative(double tolerance) const {
  const Matrix q = assemble();
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    double scale = 0.0;
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      const double v = q(i, j);
      if (!std::isfinite(v)) throw GeneratorError("non-finite generator entry");
      if (i == j && v > 0.0) throw GeneratorError("positive diagonal entry in row " + std::to_string(i));
      if (i != j && v < 0.0) throw GeneratorError("negative off-diagonal entry in row " + std::to_string(i));
      scale = std::max(scale, std::abs(v));
    }
    if (std::abs(q.row(i).sum()) > tolerance * std::max(1.0, scale)) {
      throw GeneratorError("row " + std::to_string(i) + " of the generator does not sum to zero");
    }
  }
}

bool BlockGenerator::irreducible() const {
  const Matrix q = assemble();
  const Eigen::Index n = q.rows();
  auto reach_all = [&](bool forward) {
    std::vector<char> seen(n, 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    Eigen::Index visited = 1;
    while (!stack.empty()) {
      const Eigen::Index v = stack.back();
      stack.pop_back();
      for (Eigen::Index u = 0; u < n; ++u) {
        if (u == v || seen[u]) continue;
        const double rate = forward ? q(v, u) : q(u, v);
        if (rate > 0.0) {
          seen[u] = 1;
          ++visited;
          stack.push_back(u);
        }
      }
    }
    return visited == n;
  };
  return reach_all(true) && reach_all(false);
}

Matrix censored_corner(const BlockGenerator& gen, int level) {
  const int last = gen.last_level();
  if (level < 1 || level > last) {
    throw std::out_of_range("censored corner defined for levels 1.." + std::to_string(last));
  }
  Matrix c = gen.corner();
  for (int l = last - 1; l >= level; --l) {
    c = gen.super(l) * left_solve(gen.diag(l + 1), c, l + 1);
  }
  return c;
}

Matrix censored_level0(const BlockGenerator& gen) {
  const Matrix c1 = censored_corner(gen, 1);
  return gen.diag(0) + gen.super(0) * left_solve(gen.diag(1), c1, 1);
}

RGFactors rg_factorize(const BlockGenerator& gen) {
  gen.check_conservative();
  if (!gen.irreducible()) throw GeneratorError("generator is not irreducible");

  const int last = gen.last_level();
  RGFactors f;
  f.psi.resize(last + 1);
  f.r_up.resize(last);
  f.g_low.resize(last + 1);
  f.corners.resize(last + 1);

  // Censored corners from the top level down; each reuses the one above.
  f.corners[last] = gen.corner();
  for (int k = last - 1; k >= 1; --k) {
    f.corners[k] = gen.super(k) * left_solve(gen.diag(k + 1), f.corners[k + 1], k + 1);
  }

  f.psi[0] = gen.diag(0) + gen.super(0) * left_solve(gen.diag(1), f.corners[1], 1);
  for (int k = 1; k <= last; ++k) f.psi[k] = gen.diag(k);

  for (int k = 0; k < last; ++k) f.r_up[k] = right_solve(gen.super(k), f.psi[k + 1], k + 1);
  for (int k = 1; k <= last; ++k) f.g_low[k] = left_solve(f.psi[k], f.corners[k], k);
  return f;
}

Matrix RGFactors::reconstruct() const {
  const int levels = num_levels();
  std::vector<int> offset(levels + 1, 0);
  for (int k = 0; k < levels; ++k) offset[k + 1] = offset[k] + static_cast<int>(psi[k].rows());
  const int n = offset[levels];

  Matrix r = Matrix::Zero(n, n);
  Matrix d = Matrix::Zero(n, n);
  Matrix g = Matrix::Zero(n, n);
  for (int k = 0; k < levels; ++k) {
    d.block(offset[k], offset[k], psi[k].rows(), psi[k].cols()) = psi[k];
    if (k + 1 < levels) {
      r.block(offset[k], offset[k + 1], r_up[k].rows(), r_up[k].cols()) = r_up[k];
    }
    if (k >= 1) g.block(offset[k], 0, g_low[k].rows(), g_low[k].cols()) = g_low[k];
  }
  const Matrix identity = Matrix::Identity(n, n);
  return (identity - r) * d * (identity - g);
}

RowVector stationary_of_generator(const Matrix& generator) {
  const Eigen::Index n = generator.rows();
  if (n == 1) return RowVector::Ones(1);
  Matrix a = generator.transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::FullPivLU<Matrix> lu(a);
  if (lu.rank() < n) throw GeneratorError("stationary solve failed: chain is not irreducible");
  return lu.solve(b).transpose();
}

std::vector<RowVector> stationary_vector(const RGFactors& factors) {
  RowVector x0;
  try {
    x0 = stationary_of_generator(factors.psi[0]);
  } catch (const GeneratorError&) {
    throw GeneratorError("level-0 censored chain not irreducible");
  }

  std::vector<RowVector> pi(factors.num_levels());
  pi[0] = x0;
  for (int k = 1; k < factors.num_levels(); ++k) pi[k] = pi[k - 1] * factors.r_up[k - 1];

  constexpr double kNoise = 1e-12;
  double total = 0.0;
  for (const auto& level : pi) total += level.sum();
  for (auto& level : pi) {
    level /= total;
    for (Eigen::Index j = 0; j < level.size(); ++j) {
      if (level(j) < -kNoise) {
        throw GeneratorError("negative stationary probability " + std::to_string(level(j)));
      }
      if (level(j) < 0.0) level(j) = 0.0;
    }
  }
  total = 0.0;
  for (const auto& level : pi) total += level.sum();
  for (auto& level : pi) level /= total;
  return pi;
}

void write_matrix_market(std::ostream& out, const Matrix& matrix, const std::string& comment) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  if (!comment.empty()) out << "% " << comment << '\n';
  Eigen::Index nnz = 0;
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) nnz += matrix(i, j) != 0.0;
  }
  out << matrix.rows() << ' ' << matrix.cols() << ' ' << nnz << '\n';
  const auto precision = out.precision(17);
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      if (matrix(i, j) != 0.0) out << i + 1 << ' ' << j + 1 << ' ' << matrix(i, j) << '\n';
    }
  }
  out.precision(precision);
}

void dump_generator(std::ostream& out, const BlockGenerator& gen) {
  for (int k = 0; k < gen.num_levels(); ++k) {
    write_matrix_market(out, gen.diag(k), "Q(" + std::to_string(k) + "," + std::to_string(k) + ")");
    if (k + 1 < gen.num_levels()) {
      write_matrix_market(out, gen.super(k),
                          "Q(" + std::to_string(k) + "," + std::to_string(k + 1) + ")");
    }
  }
  write_matrix_market(out, gen.corner(), "Q(" + std::to_string(gen.last_level()) + ",0)");
}

void dump_factors(std::ostream& out, const RGFactors& factors) {
  for (int k = 0; k < factors.num_levels(); ++k) {
    write_matrix_market(out, factors.psi[k], "Psi(" + std::to_string(k) + ")");
  }
  for (std::size_t k = 0; k < factors.r_up.size(); ++k) {
    write_matrix_market(out, factors.r_up[k],
                        "R(" + std::to_string(k) + "," + std::to_string(k + 1) + ")");
  }
  for (int k = 1; k < factors.num_levels(); ++k) {
    write_matrix_market(out, factors.g_low[k], "G(" + std::to_string(k) + ",0)");
  }
}

}  // namespace dbss
