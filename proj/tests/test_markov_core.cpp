#include <random>
#include <sstream>

#include "doctest.h"
#include "dbss/block_generator.hpp"
#include "support.hpp"

using namespace dbss;

namespace {

/// Level-0 censored generator by a Schur complement over all higher levels.
Matrix schur_level0(const Matrix& q, int d0) {
  const Eigen::Index rest = q.rows() - d0;
  const Matrix a = q.topLeftCorner(d0, d0);
  const Matrix b = q.topRightCorner(d0, rest);
  const Matrix c = q.bottomLeftCorner(rest, d0);
  const Matrix d = q.bottomRightCorner(rest, rest);
  return a - b * d.fullPivLu().solve(c);
}

}  // namespace

TEST_CASE("random generators: stationary vector and reconstruction match dense oracles") {
  std::mt19937_64 rng(20240611);
  double worst_pi = 0.0, worst_rebuild = 0.0;
  for (int trial = 0; trial < 250; ++trial) {
    const BlockGenerator gen = testkit::random_generator(rng);
    const Matrix q = gen.assemble();
    const RGFactors f = rg_factorize(gen);
    const RowVector pi = testkit::flatten(stationary_vector(f));
    const RowVector oracle = testkit::null_space_stationary(q);
    worst_pi = std::max(worst_pi, (pi - oracle).cwiseAbs().maxCoeff());
    worst_rebuild = std::max(worst_rebuild, (f.reconstruct() - q).cwiseAbs().maxCoeff());
  }
  CHECK(worst_pi <= 1e-9);
  CHECK(worst_rebuild <= 1e-10);
}

TEST_CASE("censored level-0 chain equals the Schur complement") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const BlockGenerator gen = testkit::random_generator(rng);
    const Matrix censored = censored_level0(gen);
    const Matrix oracle = schur_level0(gen.assemble(), gen.level_dims()[0]);
    CHECK((censored - oracle).cwiseAbs().maxCoeff() <= 1e-10);
    // a censored generator is conservative
    CHECK(censored.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("two-level scalar chain has the closed-form law") {
  // 0 -> 1 at a, 1 -> 0 at b: pi = (b, a) / (a + b)
  const double a = 3.0, b = 0.5;
  BlockGenerator gen({Matrix::Constant(1, 1, -a), Matrix::Constant(1, 1, -b)},
                     {Matrix::Constant(1, 1, a)}, Matrix::Constant(1, 1, b));
  const auto pi = stationary_vector(rg_factorize(gen));
  CHECK(pi[0](0) == doctest::Approx(b / (a + b)).epsilon(1e-14));
  CHECK(pi[1](0) == doctest::Approx(a / (a + b)).epsilon(1e-14));
}

TEST_CASE("generator checks") {
  SUBCASE("rows that do not sum to zero") {
    BlockGenerator gen({Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, -1.0)},
                       {Matrix::Constant(1, 1, 0.5)}, Matrix::Constant(1, 1, 1.0));
    CHECK_THROWS_AS(gen.check_conservative(), GeneratorError);
    CHECK_THROWS_AS(rg_factorize(gen), GeneratorError);
  }
  SUBCASE("reducible chain") {
    // level 1 never returns
    BlockGenerator gen({Matrix::Constant(1, 1, -1.0), Matrix::Zero(1, 1)},
                       {Matrix::Constant(1, 1, 1.0)}, Matrix::Zero(1, 1));
    CHECK_FALSE(gen.irreducible());
    CHECK_THROWS_AS(rg_factorize(gen), GeneratorError);
  }
  SUBCASE("mismatched block shapes") {
    CHECK_THROWS_AS(BlockGenerator({Matrix::Zero(2, 2), Matrix::Zero(1, 1)}, {Matrix::Zero(1, 1)},
                                   Matrix::Zero(1, 2)),
                    GeneratorError);
  }
  SUBCASE("single level") {
    CHECK_THROWS_AS(BlockGenerator({Matrix::Zero(1, 1)}, {}, Matrix::Zero(1, 1)), GeneratorError);
  }
}

TEST_CASE("stationary_of_generator agrees with the null-space oracle") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix q = testkit::random_generator(rng).assemble();
    CHECK((stationary_of_generator(q) - testkit::null_space_stationary(q)).cwiseAbs().maxCoeff() <=
          1e-10);
  }
}

TEST_CASE("matrix dumps are readable coordinate lists") {
  std::mt19937_64 rng(3);
  const BlockGenerator gen = testkit::random_generator(rng, 2, 2, 1.0);
  std::ostringstream out;
  dump_generator(out, gen);
  CHECK(out.str().find("%%MatrixMarket") != std::string::npos);
}
