#include <catch2/catch_amalgamated.hpp>

#include "fedmc/masked_matrix.hpp"
#include "support/test_util.hpp"

using fedmc::MaskedMatrix;
using fedmc::Matrix;

TEST_CASE("masked matrix validates entries") {
    CHECK_THROWS_AS(MaskedMatrix(2, 2, {{2, 0, 1.0}}), fedmc::DimensionError);
    CHECK_THROWS_AS(MaskedMatrix(2, 2, {{0, 3, 1.0}}), fedmc::DimensionError);
    CHECK_THROWS_AS(MaskedMatrix(2, 2, {{0, 0, 1.0}, {0, 0, 2.0}}), fedmc::DimensionError);
}

TEST_CASE("row and column indexes enumerate the same entry set") {
    fedmc::rng::Engine eng(11);
    const MaskedMatrix m = testutil::random_mask(9, 7, 0.4, eng);

    std::size_t via_rows = 0;
    for (std::size_t t = 0; t < m.rows(); ++t) via_rows += m.row(t).size();
    CHECK(via_rows == m.nnz());

    std::size_t via_cols = 0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        const auto rows = m.col_rows(j);
        const auto vals = m.col_values(j);
        REQUIRE(rows.size() == vals.size());
        via_cols += rows.size();
        for (std::size_t s = 0; s < rows.size(); ++s) {
            bool found = false;
            for (const MaskedMatrix::Entry& e : m.row(rows[s]))
                if (e.col == j && e.value == vals[s]) found = true;
            CHECK(found);
        }
    }
    CHECK(via_cols == m.nnz());
}

TEST_CASE("residual_on_mask exact fit gives zeros") {
    Matrix u(2, 1);
    u << 1.0, 2.0;
    Matrix v(1, 2);
    v << 3.0, 4.0;
    const MaskedMatrix m = testutil::full_mask(u * v);
    const MaskedMatrix res = fedmc::residual_on_mask(m, u, v);
    for (const MaskedMatrix::Entry& e : res.entries()) CHECK(e.value == 0.0);
}

TEST_CASE("residual_on_mask hand instance") {
    Matrix u(2, 1);
    u << 1.0, 0.0;
    Matrix v(1, 2);
    v << 1.0, 2.0;
    const MaskedMatrix m = testutil::full_mask(Matrix::Zero(2, 2));
    const MaskedMatrix res = fedmc::residual_on_mask(m, u, v);
    const Matrix dense = testutil::densify(res);
    CHECK(dense(0, 0) == 1.0);
    CHECK(dense(0, 1) == 2.0);
    CHECK(dense(1, 0) == 0.0);
    CHECK(dense(1, 1) == 0.0);
}

TEST_CASE("residual_on_mask rejects shape mismatch") {
    const MaskedMatrix m = testutil::full_mask(Matrix::Zero(3, 3));
    CHECK_THROWS_AS(fedmc::residual_on_mask(m, Matrix::Zero(2, 2), Matrix::Zero(2, 3)),
                    fedmc::DimensionError);
    CHECK_THROWS_AS(fedmc::residual_on_mask(m, Matrix::Zero(3, 2), Matrix::Zero(1, 3)),
                    fedmc::DimensionError);
}

TEST_CASE("residual_on_mask matches the dense oracle on random instances") {
    fedmc::rng::Engine eng(42);
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t rows = 1 + static_cast<std::size_t>(eng.below(50));
        const std::size_t cols = 1 + static_cast<std::size_t>(eng.below(50));
        const Eigen::Index r = 1 + static_cast<Eigen::Index>(eng.below(4));
        const MaskedMatrix m = testutil::random_mask(rows, cols, 0.3, eng);
        const Matrix u = testutil::random_matrix(static_cast<Eigen::Index>(rows), r, eng);
        const Matrix v = testutil::random_matrix(r, static_cast<Eigen::Index>(cols), eng);

        const Matrix dense_oracle = testutil::indicator(m).cwiseProduct(u * v - testutil::densify(m));
        const Matrix got = testutil::densify(fedmc::residual_on_mask(m, u, v));
        const double scale = 1.0 + dense_oracle.cwiseAbs().maxCoeff();
        CHECK((got - dense_oracle).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    }
}

TEST_CASE("masked gradients and loss match dense oracles") {
    fedmc::rng::Engine eng(7);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t rows = 2 + static_cast<std::size_t>(eng.below(20));
        const std::size_t cols = 2 + static_cast<std::size_t>(eng.below(20));
        const Eigen::Index r = 1 + static_cast<Eigen::Index>(eng.below(3));
        const MaskedMatrix m = testutil::random_mask(rows, cols, 0.5, eng);
        const Matrix u = testutil::random_matrix(static_cast<Eigen::Index>(rows), r, eng);
        const Matrix w = testutil::random_matrix(r, static_cast<Eigen::Index>(cols), eng);

        const Matrix masked = testutil::indicator(m).cwiseProduct(u * w - testutil::densify(m));
        CHECK(fedmc::masked_loss(m, u, w) ==
              Catch::Approx(0.5 * masked.squaredNorm()).epsilon(1e-12));
        CHECK((fedmc::masked_grad_U(m, u, w) - masked * w.transpose()).norm() <=
              1e-12 * (1.0 + masked.norm()));
        CHECK((fedmc::masked_grad_V(m, u, w) - u.transpose() * masked).norm() <=
              1e-12 * (1.0 + masked.norm()));
    }
}
