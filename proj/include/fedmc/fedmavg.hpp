#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "fedmc/errors.hpp"
#include "fedmc/kernels.hpp"
#include "fedmc/masked_matrix.hpp"
#include "fedmc/sampling.hpp"

namespace fedmc {

/// The model-averaging baseline: Q1 gradient steps on U_i from the broadcast
/// V^k, Q2 gradient steps on W_i started at V^k, then a plain mean over the
/// sampled clients' W. Only U_i persists client-side between rounds.
struct FedMAvgParams {
    std::size_t q1 = 10;
    std::size_t q2 = 10;
    double lambda = 0.0;
    double gamma = 0.0;
    std::size_t rounds = 100;
    std::size_t rank = 5;
    std::uint64_t init_seed = 0;
    double c_override = 0.0; // 0 means use the c_rule

    void validate() const {
        if (q1 < 1 || q2 < 1) throw ConfigError("inner iteration counts must be >= 1");
        if (!(lambda >= 0.0) || !(gamma >= 0.0))
            throw ConfigError("regularizer weights must be nonnegative");
        if (rounds < 1) throw ConfigError("round count must be >= 1");
        if (rank < 1) throw ConfigError("rank must be >= 1");
    }
};

struct FedMAvgClient {
    Matrix U;
};

struct FedMAvgServer {
    Matrix V;
    std::size_t round = 0;
};

inline double floored_spectral_max(const Matrix& a) {
    const double l = spectral_max(a);
    return l > kLipschitzFloor ? l : kLipschitzFloor;
}

/// Step denominator for the U loop, mirroring the d rule on the W side
/// (the baseline leaves c unspecified): c = 5 lambda_max(V V^T) + lambda.
inline double fedmavg_c_rule(const Matrix& v, double lambda) {
    return 5.0 * floored_spectral_max(v * v.transpose()) + lambda;
}

/// Q1 steps of U^l = U^{l-1} - [P_Omega(U^{l-1} V - M)(V)^T + lambda U^{l-1}] / c.
inline void fedmavg_U_update(FedMAvgClient& c, const MaskedMatrix& m, const Matrix& v,
                             std::size_t q1, double lambda, double step_denom) {
    if (!(step_denom > 0.0)) throw ConfigError("FedMAvg step denominator must be positive");
    for (std::size_t l = 0; l < q1; ++l) {
        Matrix next = c.U - (masked_grad_U(m, c.U, v) + lambda * c.U) / step_denom;
        if (!next.allFinite()) throw DivergenceError("non-finite U iterate");
        c.U = std::move(next);
    }
}

/// Q2 steps of W^l = W^{l-1} - [U^T P_Omega(U W^{l-1} - M)/p + gamma W^{l-1}] / d
/// from W^0 = V, with d = 5 lambda_max(U^T U).
inline Matrix fedmavg_W_update(const FedMAvgClient& c, const MaskedMatrix& m, const Matrix& v,
                               std::size_t q2, double gamma, std::size_t p) {
    const double d = 5.0 * floored_spectral_max(c.U.transpose() * c.U);
    const double pd = static_cast<double>(p);
    Matrix w = v;
    for (std::size_t l = 0; l < q2; ++l) {
        Matrix next = w - (masked_grad_V(m, c.U, w) / pd + gamma * w) / d;
        if (!next.allFinite()) throw DivergenceError("non-finite W iterate");
        w = std::move(next);
    }
    return w;
}

/// V^{k+1} = mean of the sampled clients' W^{k+1}.
inline void fedmavg_server_update(FedMAvgServer& s, const std::vector<Matrix>& sampled_w) {
    if (sampled_w.empty()) throw ConfigError("FedMAvg server update needs a nonempty sample");
    Matrix acc = Matrix::Zero(sampled_w.front().rows(), sampled_w.front().cols());
    for (const Matrix& w : sampled_w) acc += w;
    s.V = acc / static_cast<double>(sampled_w.size());
}

class FedMAvgRun {
public:
    FedMAvgRun(std::vector<MaskedMatrix> blocks, const FedMAvgParams& params,
               const SamplingPolicy& policy)
        : data_(std::move(blocks)), params_(params), policy_(policy) {
        params_.validate();
        policy_.validate(data_.size());
        std::vector<std::size_t> client_rows;
        client_rows.reserve(data_.size());
        for (const MaskedMatrix& b : data_) client_rows.push_back(b.rows());
        auto [v, us] = init_uniform_factors(params_.rank, data_.front().cols(), client_rows,
                                            params_.init_seed);
        server_.V = std::move(v);
        clients_.resize(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) clients_[i].U = std::move(us[i]);
    }

    /// One communication round; returns the sampled client ids.
    std::vector<std::size_t> step() {
        const std::size_t round = server_.round + 1;
        const std::vector<std::size_t> sampled =
            sample_clients(policy_, clients_.size(), server_.round);
        const Matrix v_broadcast = server_.V;
        const double c_step = params_.c_override > 0.0
                                  ? params_.c_override
                                  : fedmavg_c_rule(v_broadcast, params_.lambda);

        std::vector<Matrix> sampled_w;
        sampled_w.reserve(sampled.size());
        for (const std::size_t i : sampled) {
            try {
                fedmavg_U_update(clients_[i], data_[i], v_broadcast, params_.q1, params_.lambda,
                                 c_step);
                sampled_w.push_back(fedmavg_W_update(clients_[i], data_[i], v_broadcast,
                                                     params_.q2, params_.gamma, data_.size()));
            } catch (const DivergenceError& e) {
                throw DivergenceError(e.what(), round, i);
            }
        }
        fedmavg_server_update(server_, sampled_w);
        server_.round = round;
        return sampled;
    }

    const FedMAvgServer& server() const { return server_; }
    const std::vector<FedMAvgClient>& clients() const { return clients_; }
    const std::vector<MaskedMatrix>& data() const { return data_; }

    /// Mutable state access, for restoring from a checkpoint.
    FedMAvgServer& mutable_server() { return server_; }
    std::vector<FedMAvgClient>& mutable_clients() { return clients_; }

private:
    std::vector<MaskedMatrix> data_;
    FedMAvgParams params_;
    SamplingPolicy policy_;
    FedMAvgServer server_;
    std::vector<FedMAvgClient> clients_;
};

} // namespace fedmc
