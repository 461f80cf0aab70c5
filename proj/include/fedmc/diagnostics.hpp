#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "fedmc/errors.hpp"
#include "fedmc/fedmc_admm.hpp"
#include "fedmc/kernels.hpp"
#include "fedmc/masked_matrix.hpp"

namespace fedmc {

/// One metrics row. stationarity_sq is NaN on rounds where the residual was
/// not evaluated; the non-applicable columns are NaN for FedMAvg runs.
struct RoundRecord {
    std::size_t round = 0;
    double wall_time_s = 0.0;
    double objective = 0.0;
    double rmse_test = 0.0;
    double aug_lagrangian = std::numeric_limits<double>::quiet_NaN();
    double consensus_gap = std::numeric_limits<double>::quiet_NaN();
    double stationarity_sq = std::numeric_limits<double>::quiet_NaN();
    double nnz_U = 0.0;
    double nnz_V = 0.0;
    std::vector<std::size_t> sampled;
};

/// Training objective F of the original problem, evaluated with the global V:
/// (1/p) sum_i [0.5 ||P_Omega_i(M_i - U_i V)||^2 + R_i(U_i)] + R(V).
inline double objective(const std::vector<Matrix>& u_blocks,
                        const std::vector<MaskedMatrix>& train, const Matrix& v,
                        const RegularizerSpec& reg) {
    const double p = static_cast<double>(u_blocks.size());
    // Per-client terms are divided before accumulating so that this matches
    // augmented_lagrangian bit-for-bit when every W_i equals V.
    double acc = 0.0;
    for (std::size_t i = 0; i < u_blocks.size(); ++i)
        acc += (masked_loss(train[i], u_blocks[i], v) + reg.client_value(u_blocks[i])) / p;
    return acc + reg.server_value(v);
}

/// RMSE over the held-out entries: sqrt(sum_i ||P_T_i(M_i - U_i V)||^2 / N_T).
/// Raw predictions, no clipping to the rating scale.
inline double rmse(const std::vector<Matrix>& u_blocks, const std::vector<MaskedMatrix>& test,
                   const Matrix& v) {
    double sq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < u_blocks.size(); ++i) {
        sq += 2.0 * masked_loss(test[i], u_blocks[i], v);
        count += test[i].nnz();
    }
    if (count == 0) throw ConfigError("RMSE needs a nonempty test set");
    return std::sqrt(sq / static_cast<double>(count));
}

/// The augmented Lagrangian
/// sum_i [(1/p)(f_i(U_i,W_i) + R_i(U_i)) + <Y_i, W_i - V> + beta/2 ||W_i - V||^2] + R(V).
inline double augmented_lagrangian(const std::vector<ClientState>& clients,
                                   const std::vector<MaskedMatrix>& train, const Matrix& v,
                                   double beta, const RegularizerSpec& reg) {
    const double p = static_cast<double>(clients.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < clients.size(); ++i) {
        const ClientState& c = clients[i];
        const Matrix gap = c.W - v;
        acc += (masked_loss(train[i], c.U, c.W) + reg.client_value(c.U)) / p +
               (c.Y.cwiseProduct(gap).sum() + 0.5 * beta * gap.squaredNorm());
    }
    return acc + reg.server_value(v);
}

inline double consensus_gap(const std::vector<ClientState>& clients, const Matrix& v) {
    double worst = 0.0;
    for (const ClientState& c : clients) worst = std::max(worst, (c.W - v).norm());
    return worst;
}

/// Fraction of entries with |x| > tol.
inline double nnz_fraction(const Matrix& x, double tol = 0.0) {
    if (x.size() == 0) return 0.0;
    std::size_t count = 0;
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            if (std::abs(x(i, j)) > tol) ++count;
    return static_cast<double>(count) / static_cast<double>(x.size());
}

/// nnz fraction of the stacked client factors.
inline double nnz_fraction_stacked(const std::vector<Matrix>& u_blocks, double tol = 0.0) {
    std::size_t count = 0;
    std::size_t total = 0;
    for (const Matrix& u : u_blocks) {
        total += static_cast<std::size_t>(u.size());
        for (Eigen::Index j = 0; j < u.cols(); ++j)
            for (Eigen::Index i = 0; i < u.rows(); ++i)
                if (std::abs(u(i, j)) > tol) ++count;
    }
    return total == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(total);
}

/// Squared stationarity residual bounding dist(0, dPhi)^2 at the virtual
/// point (U_bar^{k+1,1}, V^{k+1}): the V-block term
/// ||(1/p) sum_i grad_V f_i(U_bar_i, V) + nu||^2 with
/// nu = sum_i [Y_i + beta (W_i - V)], plus the U-block terms
/// ||(1/p)[grad_U f_i(U_bar_i, V) + zeta_i]||^2 with
/// zeta_i = -grad_U f_i(U_i, W_i) - L_{W_i} (U_bar_i - U_i).
/// The one-step virtual iterates U_bar_i are computed for every client and
/// never touch algorithm state.
inline double stationarity_residual(const std::vector<ClientState>& clients,
                                    const std::vector<MaskedMatrix>& train, const Matrix& v,
                                    double beta, const RegularizerSpec& reg) {
    const double p = static_cast<double>(clients.size());
    Matrix v_term = Matrix::Zero(v.rows(), v.cols());
    double u_terms = 0.0;
    for (std::size_t i = 0; i < clients.size(); ++i) {
        const ClientState& c = clients[i];
        const double lipschitz = lipschitz_for_U_step(c.W);
        const Matrix grad_at_state = masked_grad_U(train[i], c.U, c.W);
        const Matrix u_bar = prox_U_step(c.U, grad_at_state, lipschitz, reg);
        const Matrix zeta = -grad_at_state - lipschitz * (u_bar - c.U);
        u_terms += ((masked_grad_U(train[i], u_bar, v) + zeta) / p).squaredNorm();
        v_term += masked_grad_V(train[i], u_bar, v) / p + c.Y + beta * (c.W - v);
    }
    return v_term.squaredNorm() + u_terms;
}

/// The descent surrogate of the convergence proof for the round this trace
/// describes: L_hat^{k+1} = L^{k+1} + p beta/2 ||V^{k+1}-V^k||^2
/// + sum_i [A_i sum_l ||dU||^2 + B_i sum_l ||dW||^2], with
/// A_i = L_{W_i^k}/(2p) - 4 N L^2/(p^2 beta) and
/// B_i = L_{U_i^{k+1}}/(2p) - (16 L_{U_i^{k+1}}^2 + 4 N L_{U_i^k}^2)/(p^2 beta).
inline double surrogate_lagrangian(const RoundTrace& trace, double aug_lagrangian_value,
                                   std::size_t p, double beta, std::size_t n_steps,
                                   double cross_l) {
    const double pd = static_cast<double>(p);
    const double n = static_cast<double>(n_steps);
    double acc = aug_lagrangian_value + 0.5 * pd * beta * trace.dV_sq;
    for (const ClientRoundTrace& c : trace.clients) {
        const double a = c.L_W / (2.0 * pd) - 4.0 * n * cross_l * cross_l / (pd * pd * beta);
        const double b = c.L_U_cur / (2.0 * pd) -
                         (16.0 * c.L_U_cur * c.L_U_cur + 4.0 * n * c.L_U_prev * c.L_U_prev) /
                             (pd * pd * beta);
        acc += a * c.sum_dU_sq + b * c.sum_dW_sq;
    }
    return acc;
}

} // namespace fedmc
