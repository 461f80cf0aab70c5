#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fedmc/errors.hpp"

namespace fedmc {

using Matrix = Eigen::MatrixXd;

/// Sparse matrix of observed ratings: the index set Omega plus values.
/// Unobserved cells are absent, never stored zeros (a literal 0 rating counts
/// as observed). Immutable after construction; indexed both by row and by
/// column, since the U-step needs row slices and the per-column exact W
/// solver needs column slices.
class MaskedMatrix {
public:
    struct Entry {
        std::size_t row;
        std::size_t col;
        double value;
    };

    MaskedMatrix() = default;

    MaskedMatrix(std::size_t rows, std::size_t cols, std::vector<Entry> entries)
        : rows_(rows), cols_(cols), entries_(std::move(entries)) {
        for (const Entry& e : entries_) {
            if (e.row >= rows_ || e.col >= cols_)
                throw DimensionError("masked matrix entry (" + std::to_string(e.row) + "," +
                                     std::to_string(e.col) + ") out of range for " +
                                     std::to_string(rows_) + "x" + std::to_string(cols_));
        }
        std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        for (std::size_t i = 1; i < entries_.size(); ++i) {
            if (entries_[i].row == entries_[i - 1].row && entries_[i].col == entries_[i - 1].col)
                throw DimensionError("duplicate masked matrix entry (" +
                                     std::to_string(entries_[i].row) + "," +
                                     std::to_string(entries_[i].col) + ")");
        }
        build_indexes();
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return entries_.size(); }

    const std::vector<Entry>& entries() const { return entries_; }

    /// Observed entries of row t, in ascending column order.
    std::span<const Entry> row(std::size_t t) const {
        return {entries_.data() + row_ptr_[t], row_ptr_[t + 1] - row_ptr_[t]};
    }

    std::size_t col_size(std::size_t j) const { return col_ptr_[j + 1] - col_ptr_[j]; }
    std::span<const std::size_t> col_rows(std::size_t j) const {
        return {col_rows_.data() + col_ptr_[j], col_size(j)};
    }
    std::span<const double> col_values(std::size_t j) const {
        return {col_vals_.data() + col_ptr_[j], col_size(j)};
    }

    /// Sum of squared observed values.
    double frobenius_sq() const {
        double s = 0.0;
        for (const Entry& e : entries_) s += e.value * e.value;
        return s;
    }

private:
    void build_indexes() {
        row_ptr_.assign(rows_ + 1, 0);
        col_ptr_.assign(cols_ + 1, 0);
        for (const Entry& e : entries_) {
            ++row_ptr_[e.row + 1];
            ++col_ptr_[e.col + 1];
        }
        for (std::size_t t = 0; t < rows_; ++t) row_ptr_[t + 1] += row_ptr_[t];
        for (std::size_t j = 0; j < cols_; ++j) col_ptr_[j + 1] += col_ptr_[j];
        col_rows_.resize(entries_.size());
        col_vals_.resize(entries_.size());
        std::vector<std::size_t> cursor(col_ptr_.begin(), col_ptr_.end() - 1);
        for (const Entry& e : entries_) {
            const std::size_t slot = cursor[e.col]++;
            col_rows_[slot] = e.row;
            col_vals_[slot] = e.value;
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Entry> entries_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> col_ptr_;
    std::vector<std::size_t> col_rows_;
    std::vector<double> col_vals_;
};

namespace detail {

inline void check_factor_shapes(const MaskedMatrix& m, const Matrix& u, const Matrix& w) {
    if (static_cast<std::size_t>(u.rows()) != m.rows() ||
        static_cast<std::size_t>(w.cols()) != m.cols() || u.cols() != w.rows())
        throw DimensionError("factor shapes (" + std::to_string(u.rows()) + "x" +
                             std::to_string(u.cols()) + ")*(" + std::to_string(w.rows()) + "x" +
                             std::to_string(w.cols()) + ") incompatible with mask " +
                             std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

/// Calls fn(t, j, (UW)_tj - M_tj) for every observed entry; never forms UW densely.
template <typename Fn>
void for_each_masked_residual(const MaskedMatrix& m, const Matrix& u, const Matrix& w, Fn&& fn) {
    check_factor_shapes(m, u, w);
    const Eigen::Index r = u.cols();
    for (const MaskedMatrix::Entry& e : m.entries()) {
        double pred = 0.0;
        for (Eigen::Index q = 0; q < r; ++q)
            pred += u(static_cast<Eigen::Index>(e.row), q) * w(q, static_cast<Eigen::Index>(e.col));
        fn(e.row, e.col, pred - e.value);
    }
}

} // namespace detail

/// P_Omega(UV - M) as a masked matrix over M's index set.
inline MaskedMatrix residual_on_mask(const MaskedMatrix& m, const Matrix& u, const Matrix& v) {
    std::vector<MaskedMatrix::Entry> out;
    out.reserve(m.nnz());
    detail::for_each_masked_residual(m, u, v, [&](std::size_t t, std::size_t j, double res) {
        out.push_back({t, j, res});
    });
    return MaskedMatrix(m.rows(), m.cols(), std::move(out));
}

/// f(U, W) = 0.5 * ||P_Omega(M - UW)||_F^2
inline double masked_loss(const MaskedMatrix& m, const Matrix& u, const Matrix& w) {
    double s = 0.0;
    detail::for_each_masked_residual(m, u, w,
                                     [&](std::size_t, std::size_t, double res) { s += res * res; });
    return 0.5 * s;
}

/// grad_U f = P_Omega(UW - M) W^T, an m_i x r matrix.
inline Matrix masked_grad_U(const MaskedMatrix& m, const Matrix& u, const Matrix& w) {
    Matrix g = Matrix::Zero(u.rows(), u.cols());
    const Eigen::Index r = u.cols();
    detail::for_each_masked_residual(m, u, w, [&](std::size_t t, std::size_t j, double res) {
        for (Eigen::Index q = 0; q < r; ++q)
            g(static_cast<Eigen::Index>(t), q) += res * w(q, static_cast<Eigen::Index>(j));
    });
    return g;
}

/// grad_V f = U^T P_Omega(UW - M), an r x n matrix.
inline Matrix masked_grad_V(const MaskedMatrix& m, const Matrix& u, const Matrix& w) {
    Matrix g = Matrix::Zero(w.rows(), w.cols());
    const Eigen::Index r = u.cols();
    detail::for_each_masked_residual(m, u, w, [&](std::size_t t, std::size_t j, double res) {
        for (Eigen::Index q = 0; q < r; ++q)
            g(q, static_cast<Eigen::Index>(j)) += res * u(static_cast<Eigen::Index>(t), q);
    });
    return g;
}

} // namespace fedmc
