#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <thread>
#include <utility>
#include <vector>

#include "fedmc/errors.hpp"
#include "fedmc/kernels.hpp"
#include "fedmc/masked_matrix.hpp"
#include "fedmc/sampling.hpp"

namespace fedmc {

struct HyperParams {
    std::size_t inner_iters = 10; // N
    double beta = 0.1;
    RegularizerSpec reg;
    std::size_t rounds = 100;
    std::size_t rank = 5;
    std::uint64_t init_seed = 0;

    void validate() const {
        if (inner_iters < 1) throw ConfigError("inner iteration count must be >= 1");
        if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be positive");
        if (rounds < 1) throw ConfigError("round count must be >= 1");
        if (rank < 1) throw ConfigError("rank must be >= 1");
        reg.validate();
    }
};

/// One client's (U_i, W_i, Y_i) plus the bookkeeping the dual identity and the
/// descent diagnostics need. Y_i carries the 1/p scaling of the augmented
/// Lagrangian. W_penultimate is W_i^{k-1,N-1}, the second-to-last inner W
/// iterate of the round this client last updated.
struct ClientState {
    Matrix U;
    Matrix W;
    Matrix Y;
    Matrix W_penultimate;
    double L_U_last = 0.0; // ||U^T U||_F of the current U
    double L_U_prev = 0.0; // same, before the last local update
    double L_W_last = 0.0; // ||W W^T||_F used by the last U-loop
    double sum_dU_sq = 0.0; // sum_l ||U^{k,l} - U^{k,l-1}||^2, last round
    double sum_dW_sq = 0.0; // sum_l ||W^{k,l} - W^{k,l-1}||^2, carried when idle
};

struct ServerState {
    Matrix V;
    double beta = 0.0;
    std::size_t num_clients = 0;
    std::size_t round = 0; // completed communication rounds
};

/// Running min/max of the Frobenius-rule constants, for the convergence beta
/// threshold.
struct LipschitzBounds {
    double min_LU = std::numeric_limits<double>::infinity();
    double max_LU = 0.0;
    double min_LW = std::numeric_limits<double>::infinity();
    double max_LW = 0.0;

    void observe_U(double l) {
        min_LU = std::min(min_LU, l);
        max_LU = std::max(max_LU, l);
    }
    void observe_W(double l) {
        min_LW = std::min(min_LW, l);
        max_LW = std::max(max_LW, l);
    }
};

/// beta threshold of the convergence analysis,
/// min{ 8 N L^2 / (p L_V_min), 8 (8+N) L_U_max^2 / (p_min p L_U_min) },
/// evaluated from running estimates. Diagnostic only.
inline double beta_lower_bound(std::size_t n_steps, std::size_t p, double p_min,
                               const LipschitzBounds& lb, double cross_l) {
    const double n = static_cast<double>(n_steps);
    const double pd = static_cast<double>(p);
    const double term_u_loop = 8.0 * n * cross_l * cross_l / (pd * lb.min_LW);
    const double term_w_loop = 8.0 * (8.0 + n) * lb.max_LU * lb.max_LU / (p_min * pd * lb.min_LU);
    return std::min(term_u_loop, term_w_loop);
}

/// Initial state: U_i^0, V^0 entrywise uniform [0,1] from hp.init_seed,
/// W_i^0 = V^0, Y_i^0 = -(1/p) grad_V f_i(U_i^0, W_i^0).
inline std::pair<ServerState, std::vector<ClientState>> init_run(
    const std::vector<MaskedMatrix>& blocks, const HyperParams& hp) {
    hp.validate();
    if (blocks.empty()) throw ConfigError("need at least one client block");
    const std::size_t n = blocks.front().cols();
    std::vector<std::size_t> client_rows;
    client_rows.reserve(blocks.size());
    for (const MaskedMatrix& b : blocks) {
        if (b.cols() != n) throw DimensionError("client blocks disagree on column count");
        client_rows.push_back(b.rows());
    }

    auto [v, us] = init_uniform_factors(hp.rank, n, client_rows, hp.init_seed);
    const double p = static_cast<double>(blocks.size());
    const double l_w0 = lipschitz_for_U_step(v);

    std::vector<ClientState> clients(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        ClientState& c = clients[i];
        c.U = std::move(us[i]);
        c.W = v;
        c.Y = -masked_grad_V(blocks[i], c.U, c.W) / p;
        c.W_penultimate = c.W;
        c.L_U_last = lipschitz_for_W_step(c.U);
        c.L_U_prev = c.L_U_last;
        c.L_W_last = l_w0;
    }

    ServerState server;
    server.V = std::move(v);
    server.beta = hp.beta;
    server.num_clients = blocks.size();
    server.round = 0;
    return {std::move(server), std::move(clients)};
}

struct UUpdateResult {
    std::vector<double> step_norms; // ||U^{k,l} - U^{k,l-1}|| per inner step
};

/// N proximal gradient steps on U with W_i fixed. Updates c.U, c.L_W_last and
/// c.sum_dU_sq. When cross_ratio is given, folds the observed
/// ||grad_V f(U^l,W) - grad_V f(U^{l-1},W)|| / ||U^l - U^{l-1}|| ratios into
/// it (the Assumption-1(c) estimate).
inline UUpdateResult local_U_update(ClientState& c, const MaskedMatrix& m, std::size_t n_steps,
                                    const RegularizerSpec& reg, double* cross_ratio = nullptr) {
    const double lipschitz = lipschitz_for_U_step(c.W);
    c.L_W_last = lipschitz;
    c.sum_dU_sq = 0.0;

    UUpdateResult result;
    result.step_norms.reserve(n_steps);
    Matrix grad_v_prev;
    if (cross_ratio != nullptr) grad_v_prev = masked_grad_V(m, c.U, c.W);

    for (std::size_t l = 0; l < n_steps; ++l) {
        const Matrix grad = masked_grad_U(m, c.U, c.W);
        Matrix next = prox_U_step(c.U, grad, lipschitz, reg);
        if (!next.allFinite()) throw DivergenceError("non-finite U iterate");
        const double step = (next - c.U).norm();
        result.step_norms.push_back(step);
        c.sum_dU_sq += step * step;
        if (cross_ratio != nullptr && step > 1e-150) {
            Matrix grad_v = masked_grad_V(m, next, c.W);
            *cross_ratio = std::max(*cross_ratio, (grad_v - grad_v_prev).norm() / step);
            grad_v_prev = std::move(grad_v);
        }
        c.U = std::move(next);
    }
    return result;
}

/// N closed-form steps on W with U_i^{k+1} and Y_i^k fixed. Updates c.W,
/// c.L_U_last/L_U_prev and c.sum_dW_sq; returns the new penultimate iterate
/// W_i^{k,N-1}, which the caller commits to c.W_penultimate only after the
/// dual update (the dual identity of the *previous* round reads the old one).
inline Matrix local_W_update(ClientState& c, const MaskedMatrix& m, const Matrix& v, double beta,
                             std::size_t n_steps, std::size_t p) {
    const double lipschitz = lipschitz_for_W_step(c.U);
    c.L_U_prev = c.L_U_last;
    c.L_U_last = lipschitz;
    c.sum_dW_sq = 0.0;

    const double pd = static_cast<double>(p);
    const double l_over_p = lipschitz / pd;
    Matrix penultimate = c.W;
    for (std::size_t l = 1; l <= n_steps; ++l) {
        const Matrix grad = masked_grad_V(m, c.U, c.W);
        Matrix next = (l_over_p * c.W + beta * v - grad / pd - c.Y) / (l_over_p + beta);
        if (!next.allFinite()) throw DivergenceError("non-finite W iterate");
        c.sum_dW_sq += (next - c.W).squaredNorm();
        if (l == n_steps) penultimate = c.W;
        c.W = std::move(next);
    }
    return penultimate;
}

/// Y_i <- Y_i + beta (W_i^{k+1} - V^k). V must be the pre-update server
/// factor; updating Y before V is the scheme's defining reordering.
inline void dual_update(ClientState& c, const Matrix& v_pre_update, double beta) {
    c.Y += beta * (c.W - v_pre_update);
}

/// Server prox step over all p clients (idle ones contribute their carried
/// (W, Y)). Ridge: V = sum_i (beta W_i + Y_i) / (p beta + gamma); l1:
/// V = soft_threshold(sum_i (W_i + Y_i / beta) / p, gamma / (p beta)).
inline void server_update(ServerState& s, const std::vector<ClientState>& clients,
                          const RegularizerSpec& reg) {
    const double p = static_cast<double>(clients.size());
    Matrix acc = Matrix::Zero(s.V.rows(), s.V.cols());
    if (reg.kind == RegKind::ridge) {
        for (const ClientState& c : clients) acc += s.beta * c.W + c.Y;
        s.V = acc / (p * s.beta + reg.gamma);
    } else {
        for (const ClientState& c : clients) acc += c.W + c.Y / s.beta;
        s.V = soft_threshold(acc / p, reg.gamma / (p * s.beta));
    }
}

/// Relative violation of the dual identity
/// Y_i^k = -(1/p) [grad_V f_i(U_i^k, W_i^{k-1,N-1}) + L_{U_i^k} (W_i^k - W_i^{k-1,N-1})].
inline double dual_identity_residual(const ClientState& c, const MaskedMatrix& m, std::size_t p) {
    const Matrix rhs = -(masked_grad_V(m, c.U, c.W_penultimate) +
                         c.L_U_last * (c.W - c.W_penultimate)) /
                       static_cast<double>(p);
    return (c.Y - rhs).norm() / (1.0 + rhs.norm());
}

struct RoundOptions {
    bool check_dual_identity = false;
    bool track_cross_lipschitz = false;
    std::size_t threads = 1;
};

struct ClientRoundTrace {
    double sum_dU_sq = 0.0;
    double sum_dW_sq = 0.0;
    double L_W = 0.0;      // L_{W_i^k}
    double L_U_cur = 0.0;  // L_{U_i^{k+1}}
    double L_U_prev = 0.0; // L_{U_i^k}
};

struct RoundTrace {
    std::size_t round = 0; // 1-based communication round
    std::vector<std::size_t> sampled;
    std::vector<ClientRoundTrace> clients;
    double dV_sq = 0.0; // ||V^{k+1} - V^k||^2
    double cross_lipschitz = 0.0; // running estimate after this round
    double dual_identity_rel = std::numeric_limits<double>::quiet_NaN(); // max over clients
};

/// Drives Algorithm rounds over owned client blocks. Sampled clients are
/// independent within a round (optionally executed on a small thread pool);
/// the server reduction always runs in client-index order so results are
/// bit-reproducible for any thread count.
class AdmmRun {
public:
    AdmmRun(std::vector<MaskedMatrix> blocks, const HyperParams& hp, const SamplingPolicy& policy,
            const RoundOptions& opts = {})
        : data_(std::move(blocks)), hp_(hp), policy_(policy), opts_(opts) {
        policy_.validate(data_.size());
        std::tie(server_, clients_) = init_run(data_, hp_);
        for (const ClientState& c : clients_) {
            bounds_.observe_U(c.L_U_last);
            bounds_.observe_W(c.L_W_last);
        }
        for (std::size_t i = 0; i < clients_.size(); ++i) probe_cross_lipschitz(i);
    }

    /// Executes one communication round and reports its trace.
    RoundTrace step() {
        const std::size_t round = server_.round + 1;
        const std::size_t p = clients_.size();
        const std::vector<std::size_t> sampled = sample_clients(policy_, p, server_.round);
        const Matrix v_broadcast = server_.V;

        std::vector<double> cross_candidates(sampled.size(), 0.0);
        run_local_updates(sampled, v_broadcast, round, cross_candidates);

        std::vector<bool> is_sampled(p, false);
        for (const std::size_t i : sampled) is_sampled[i] = true;
        for (std::size_t i = 0; i < p; ++i)
            if (!is_sampled[i]) clients_[i].sum_dU_sq = 0.0; // U_i^{k,l} := U_i^k

        server_update(server_, clients_, hp_.reg);
        server_.round = round;

        for (const double ratio : cross_candidates) cross_ = std::max(cross_, ratio);
        for (const std::size_t i : sampled) {
            bounds_.observe_U(clients_[i].L_U_last);
            bounds_.observe_W(clients_[i].L_W_last);
        }

        RoundTrace trace;
        trace.round = round;
        trace.sampled = sampled;
        trace.clients.resize(p);
        for (std::size_t i = 0; i < p; ++i) {
            const ClientState& c = clients_[i];
            trace.clients[i] = {c.sum_dU_sq, c.sum_dW_sq, c.L_W_last, c.L_U_last,
                                is_sampled[i] ? c.L_U_prev : c.L_U_last};
        }
        trace.dV_sq = (server_.V - v_broadcast).squaredNorm();
        trace.cross_lipschitz = cross_;
        if (opts_.check_dual_identity) {
            double worst = 0.0;
            for (std::size_t i = 0; i < p; ++i)
                worst = std::max(worst, dual_identity_residual(clients_[i], data_[i], p));
            trace.dual_identity_rel = worst;
        }
        return trace;
    }

    const ServerState& server() const { return server_; }
    const std::vector<ClientState>& clients() const { return clients_; }
    const std::vector<MaskedMatrix>& data() const { return data_; }
    const HyperParams& hyper_params() const { return hp_; }

    /// Mutable state access, for restoring from a checkpoint.
    ServerState& mutable_server() { return server_; }
    std::vector<ClientState>& mutable_clients() { return clients_; }
    const LipschitzBounds& lipschitz_bounds() const { return bounds_; }
    double cross_lipschitz() const { return cross_; }

    double min_sampling_prob() const {
        if (policy_.mode == SamplingMode::fixed_size)
            return static_cast<double>(policy_.size) / static_cast<double>(clients_.size());
        return *std::min_element(policy_.probs.begin(), policy_.probs.end());
    }

    /// Convergence beta threshold from the estimates gathered so far.
    double beta_bound() const {
        return beta_lower_bound(hp_.inner_iters, clients_.size(), min_sampling_prob(), bounds_,
                                cross_);
    }

private:
    void run_one_client(std::size_t i, const Matrix& v_broadcast, std::size_t round,
                        double* cross_candidate) {
        ClientState& c = clients_[i];
        try {
            Matrix u_before;
            if (cross_candidate != nullptr) u_before = c.U;
            local_U_update(c, data_[i], hp_.inner_iters, hp_.reg, cross_candidate);
            Matrix penultimate =
                local_W_update(c, data_[i], v_broadcast, hp_.beta, hp_.inner_iters,
                               clients_.size());
            dual_update(c, v_broadcast, hp_.beta);
            c.W_penultimate = std::move(penultimate);
            if (cross_candidate != nullptr) {
                const double du = (c.U - u_before).norm();
                if (du > 1e-150) {
                    const double diff =
                        (masked_grad_V(data_[i], u_before, c.W) - masked_grad_V(data_[i], c.U, c.W))
                            .norm();
                    *cross_candidate = std::max(*cross_candidate, diff / du);
                }
            }
        } catch (const DivergenceError& e) {
            throw DivergenceError(e.what(), round, i);
        }
    }

    void run_local_updates(const std::vector<std::size_t>& sampled, const Matrix& v_broadcast,
                           std::size_t round, std::vector<double>& cross_candidates) {
        const std::size_t workers = std::min(opts_.threads, sampled.size());
        if (workers <= 1) {
            for (std::size_t s = 0; s < sampled.size(); ++s)
                run_one_client(sampled[s], v_broadcast, round,
                               opts_.track_cross_lipschitz ? &cross_candidates[s] : nullptr);
            return;
        }
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t s = w; s < sampled.size(); s += workers)
                        run_one_client(sampled[s], v_broadcast, round,
                                       opts_.track_cross_lipschitz ? &cross_candidates[s]
                                                                   : nullptr);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (std::thread& t : pool) t.join();
        for (const std::exception_ptr& e : errors)
            if (e) std::rethrow_exception(e);
    }

    /// Seeds the cross-Lipschitz estimate with one virtual prox step per
    /// client so the beta diagnostic has a value before any round has run.
    void probe_cross_lipschitz(std::size_t i) {
        const ClientState& c = clients_[i];
        const Matrix grad = masked_grad_U(data_[i], c.U, c.W);
        const Matrix probe = prox_U_step(c.U, grad, c.L_W_last, hp_.reg);
        const double du = (probe - c.U).norm();
        if (du > 1e-150) {
            const double diff =
                (masked_grad_V(data_[i], probe, c.W) - masked_grad_V(data_[i], c.U, c.W)).norm();
            cross_ = std::max(cross_, diff / du);
        }
    }

    std::vector<MaskedMatrix> data_;
    HyperParams hp_;
    SamplingPolicy policy_;
    RoundOptions opts_;
    ServerState server_;
    std::vector<ClientState> clients_;
    LipschitzBounds bounds_;
    double cross_ = 0.0;
};

} // namespace fedmc
