#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fedmc/errors.hpp"
#include "fedmc/masked_matrix.hpp"
#include "fedmc/rng.hpp"

namespace fedmc {

struct SyntheticSpec {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t rank = 1;   // true rank
    double density = 1.0;   // observation probability per cell
    double noise = 0.0;     // additive gaussian sigma
    std::uint64_t seed = 0;

    void validate() const {
        if (rows == 0 || cols == 0) throw ConfigError("synthetic matrix needs positive dims");
        if (rank > std::min(rows, cols))
            throw ConfigError("synthetic rank exceeds min(rows, cols)");
        if (rank == 0) throw ConfigError("synthetic rank must be >= 1");
        if (!(density > 0.0 && density <= 1.0))
            throw ConfigError("observation density must lie in (0, 1]");
        if (!(noise >= 0.0)) throw ConfigError("noise sigma must be nonnegative");
        if (density * static_cast<double>(rows) * static_cast<double>(cols) < 1.0)
            throw ConfigError("expected observation count below 1");
    }
};

struct SyntheticData {
    MaskedMatrix matrix;
    Matrix true_U; // rows x rank
    Matrix true_V; // rank x cols
};

inline double density_estimate(std::size_t rows, std::size_t cols, double density) {
    return density * static_cast<double>(rows) * static_cast<double>(cols) * 1.05 + 16.0;
}

/// M = U* V* + noise, entrywise-uniform [0,1] factors, each cell kept
/// independently with probability `density`. |Omega| ~ Binomial(m n, rho).
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    rng::Engine eng(rng::derive(spec.seed, 3));

    SyntheticData out;
    out.true_U.resize(spec.rows, spec.rank);
    for (Eigen::Index i = 0; i < out.true_U.rows(); ++i)
        for (Eigen::Index j = 0; j < out.true_U.cols(); ++j) out.true_U(i, j) = eng.uniform01();
    out.true_V.resize(spec.rank, spec.cols);
    for (Eigen::Index i = 0; i < out.true_V.rows(); ++i)
        for (Eigen::Index j = 0; j < out.true_V.cols(); ++j) out.true_V(i, j) = eng.uniform01();

    std::vector<MaskedMatrix::Entry> entries;
    entries.reserve(static_cast<std::size_t>(
        density_estimate(spec.rows, spec.cols, spec.density)));
    for (std::size_t t = 0; t < spec.rows; ++t) {
        for (std::size_t j = 0; j < spec.cols; ++j) {
            if (eng.uniform01() >= spec.density) continue;
            double value = out.true_U.row(static_cast<Eigen::Index>(t))
                               .dot(out.true_V.col(static_cast<Eigen::Index>(j)));
            if (spec.noise > 0.0) value += spec.noise * eng.gaussian();
            entries.push_back({t, j, value});
        }
    }
    out.matrix = MaskedMatrix(spec.rows, spec.cols, std::move(entries));
    return out;
}

} // namespace fedmc
