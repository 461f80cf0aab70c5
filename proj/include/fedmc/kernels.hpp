#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedmc/errors.hpp"
#include "fedmc/masked_matrix.hpp"
#include "fedmc/rng.hpp"

namespace fedmc {

/// Keeps the Frobenius-rule Lipschitz constants strictly positive at a zero
/// factor, where the rule itself gives 0 and the proximal denominators would
/// degenerate.
inline constexpr double kLipschitzFloor = 1e-12;

enum class RegKind { ridge, l1 };

/// Which client/server regularizer pair is active: ridge means
/// R_i(U) = lambda/2 ||U||_F^2, R(V) = gamma/2 ||V||_F^2; l1 means
/// lambda ||U||_1 and gamma ||V||_1.
struct RegularizerSpec {
    RegKind kind = RegKind::ridge;
    double lambda = 0.0;
    double gamma = 0.0;

    void validate() const {
        if (!(lambda >= 0.0) || !std::isfinite(lambda))
            throw ConfigError("lambda must be finite and nonnegative");
        if (!(gamma >= 0.0) || !std::isfinite(gamma))
            throw ConfigError("gamma must be finite and nonnegative");
    }

    double client_value(const Matrix& u) const {
        return kind == RegKind::ridge ? 0.5 * lambda * u.squaredNorm()
                                      : lambda * u.cwiseAbs().sum();
    }
    double server_value(const Matrix& v) const {
        return kind == RegKind::ridge ? 0.5 * gamma * v.squaredNorm()
                                      : gamma * v.cwiseAbs().sum();
    }
};

/// Entrywise [|q| - tau]_+ sign(q), the prox of tau||.||_1.
inline Matrix soft_threshold(const Matrix& q, double tau) {
    if (!(tau >= 0.0)) throw DomainError("soft_threshold needs tau >= 0");
    return q.unaryExpr([tau](double x) {
        const double mag = std::abs(x) - tau;
        return mag > 0.0 ? (x > 0.0 ? mag : -mag) : 0.0;
    });
}

/// Lipschitz constant of grad_U f(., W): ||W W^T||_F, floored.
inline double lipschitz_for_U_step(const Matrix& w) {
    if (!w.allFinite()) throw NumericError("non-finite factor in Lipschitz rule");
    const double l = (w * w.transpose()).norm();
    return l > kLipschitzFloor ? l : kLipschitzFloor;
}

/// Lipschitz constant of grad_V f(U, .): ||U^T U||_F, floored.
inline double lipschitz_for_W_step(const Matrix& u) {
    if (!u.allFinite()) throw NumericError("non-finite factor in Lipschitz rule");
    const double l = (u.transpose() * u).norm();
    return l > kLipschitzFloor ? l : kLipschitzFloor;
}

/// Largest eigenvalue of a small symmetric PSD matrix by power iteration with
/// a fixed seeded start vector.
inline double spectral_max(const Matrix& a, double tol = 1e-6, int max_iters = 200) {
    if (a.rows() != a.cols()) throw DomainError("spectral_max needs a square matrix");
    const double scale = 1.0 + a.cwiseAbs().maxCoeff();
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw DomainError("spectral_max needs a symmetric matrix");

    rng::Engine eng(0x9d2c5680u);
    Eigen::VectorXd v(a.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = eng.uniform01() + 0.5;
    v.normalize();

    double lambda = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        Eigen::VectorXd av = a * v;
        const double norm = av.norm();
        if (norm == 0.0) return 0.0;
        v = av / norm;
        const double next = v.dot(a * v);
        if (std::abs(next - lambda) <= tol * std::abs(next)) return next;
        lambda = next;
    }
    return lambda;
}

/// One proximal gradient step on U: argmin <G,U> + L/2 ||U - U0||^2 + R_i(U).
inline Matrix prox_U_step(const Matrix& u0, const Matrix& grad, double lipschitz,
                          const RegularizerSpec& reg) {
    if (reg.kind == RegKind::ridge)
        return (lipschitz * u0 - grad) / (lipschitz + reg.lambda);
    return soft_threshold(u0 - grad / lipschitz, reg.lambda / lipschitz);
}

/// Entrywise uniform [0,1] factors V (r x n) and U_i (m_i x r), filled in a
/// fixed order (V first, then clients) so runs are seed-reproducible.
inline std::pair<Matrix, std::vector<Matrix>> init_uniform_factors(
    std::size_t rank, std::size_t cols, const std::vector<std::size_t>& client_rows,
    std::uint64_t init_seed) {
    rng::Engine eng(rng::derive(init_seed, 2));
    Matrix v(rank, cols);
    for (Eigen::Index i = 0; i < v.rows(); ++i)
        for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = eng.uniform01();
    std::vector<Matrix> us;
    us.reserve(client_rows.size());
    for (const std::size_t m_i : client_rows) {
        Matrix u(m_i, rank);
        for (Eigen::Index i = 0; i < u.rows(); ++i)
            for (Eigen::Index j = 0; j < u.cols(); ++j) u(i, j) = eng.uniform01();
        us.push_back(std::move(u));
    }
    return {std::move(v), std::move(us)};
}

} // namespace fedmc
