#pragma once

#include <cstdint>
#include <vector>

#include "fedmc/masked_matrix.hpp"
#include "fedmc/rng.hpp"

namespace testutil {

using fedmc::MaskedMatrix;
using fedmc::Matrix;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, fedmc::rng::Engine& eng,
                            double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = lo + (hi - lo) * eng.uniform01();
    return m;
}

/// Random mask with every entry kept independently; guarantees at least one
/// entry by forcing (0,0) when the draw comes up empty.
inline MaskedMatrix random_mask(std::size_t rows, std::size_t cols, double density,
                                fedmc::rng::Engine& eng, double lo = -1.0, double hi = 1.0) {
    std::vector<MaskedMatrix::Entry> entries;
    for (std::size_t t = 0; t < rows; ++t)
        for (std::size_t j = 0; j < cols; ++j)
            if (eng.uniform01() < density) entries.push_back({t, j, lo + (hi - lo) * eng.uniform01()});
    if (entries.empty()) entries.push_back({0, 0, lo + (hi - lo) * eng.uniform01()});
    return MaskedMatrix(rows, cols, std::move(entries));
}

/// Fully observed mask holding the given dense values.
inline MaskedMatrix full_mask(const Matrix& dense) {
    std::vector<MaskedMatrix::Entry> entries;
    entries.reserve(static_cast<std::size_t>(dense.size()));
    for (Eigen::Index i = 0; i < dense.rows(); ++i)
        for (Eigen::Index j = 0; j < dense.cols(); ++j)
            entries.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                               dense(i, j)});
    return MaskedMatrix(static_cast<std::size_t>(dense.rows()),
                        static_cast<std::size_t>(dense.cols()), std::move(entries));
}

/// Dense 0/1 indicator of a mask's index set.
inline Matrix indicator(const MaskedMatrix& m) {
    Matrix ind = Matrix::Zero(static_cast<Eigen::Index>(m.rows()),
                              static_cast<Eigen::Index>(m.cols()));
    for (const MaskedMatrix::Entry& e : m.entries())
        ind(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = 1.0;
    return ind;
}

/// Dense matrix holding the mask's values (zero elsewhere).
inline Matrix densify(const MaskedMatrix& m) {
    Matrix d = Matrix::Zero(static_cast<Eigen::Index>(m.rows()),
                            static_cast<Eigen::Index>(m.cols()));
    for (const MaskedMatrix::Entry& e : m.entries())
        d(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = e.value;
    return d;
}

} // namespace testutil
