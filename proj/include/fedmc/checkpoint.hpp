#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "fedmc/errors.hpp"
#include "fedmc/fedmc_admm.hpp"
#include "fedmc/fedmavg.hpp"

// Versioned little-endian binary checkpoint. Doubles are stored as raw
// IEEE-754 bytes so a round trip is lossless.

namespace fedmc {

struct Checkpoint {
    std::uint8_t algo = 0; // 0 = fedmc-admm, 1 = fedmavg
    std::uint64_t round = 0;
    std::uint64_t seed_split = 0;
    std::uint64_t seed_init = 0;
    std::uint64_t seed_sample = 0;
    double beta = 0.0;
    Matrix V;
    std::vector<ClientState> clients;       // fedmc-admm
    std::vector<FedMAvgClient> avg_clients; // fedmavg
};

namespace detail {

inline constexpr char kCheckpointMagic[4] = {'F', 'M', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void put_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

inline std::uint64_t get_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw ConfigError("truncated checkpoint");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

inline void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

inline double get_f64(std::istream& in) {
    const std::uint64_t bits = get_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline void put_matrix(std::ostream& out, const Matrix& m) {
    put_u64(out, static_cast<std::uint64_t>(m.rows()));
    put_u64(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
}

inline Matrix get_matrix(std::istream& in) {
    const auto rows = static_cast<Eigen::Index>(get_u64(in));
    const auto cols = static_cast<Eigen::Index>(get_u64(in));
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = get_f64(in);
    return m;
}

} // namespace detail

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open checkpoint file '" + path + "' for writing");
    out.write(detail::kCheckpointMagic, 4);
    detail::put_u64(out, detail::kCheckpointVersion);
    detail::put_u64(out, ck.algo);
    detail::put_u64(out, ck.round);
    detail::put_u64(out, ck.seed_split);
    detail::put_u64(out, ck.seed_init);
    detail::put_u64(out, ck.seed_sample);
    detail::put_f64(out, ck.beta);
    detail::put_matrix(out, ck.V);
    if (ck.algo == 0) {
        detail::put_u64(out, ck.clients.size());
        for (const ClientState& c : ck.clients) {
            detail::put_matrix(out, c.U);
            detail::put_matrix(out, c.W);
            detail::put_matrix(out, c.Y);
            detail::put_matrix(out, c.W_penultimate);
            detail::put_f64(out, c.L_U_last);
            detail::put_f64(out, c.L_U_prev);
            detail::put_f64(out, c.L_W_last);
            detail::put_f64(out, c.sum_dU_sq);
            detail::put_f64(out, c.sum_dW_sq);
        }
    } else {
        detail::put_u64(out, ck.avg_clients.size());
        for (const FedMAvgClient& c : ck.avg_clients) detail::put_matrix(out, c.U);
    }
    if (!out) throw ConfigError("failed writing checkpoint '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint file '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, detail::kCheckpointMagic, 4) != 0)
        throw ConfigError("not a checkpoint file: '" + path + "'");
    const std::uint64_t version = detail::get_u64(in);
    if (version != detail::kCheckpointVersion)
        throw ConfigError("unsupported checkpoint version " + std::to_string(version));

    Checkpoint ck;
    ck.algo = static_cast<std::uint8_t>(detail::get_u64(in));
    ck.round = detail::get_u64(in);
    ck.seed_split = detail::get_u64(in);
    ck.seed_init = detail::get_u64(in);
    ck.seed_sample = detail::get_u64(in);
    ck.beta = detail::get_f64(in);
    ck.V = detail::get_matrix(in);
    const std::uint64_t p = detail::get_u64(in);
    if (ck.algo == 0) {
        ck.clients.resize(p);
        for (ClientState& c : ck.clients) {
            c.U = detail::get_matrix(in);
            c.W = detail::get_matrix(in);
            c.Y = detail::get_matrix(in);
            c.W_penultimate = detail::get_matrix(in);
            c.L_U_last = detail::get_f64(in);
            c.L_U_prev = detail::get_f64(in);
            c.L_W_last = detail::get_f64(in);
            c.sum_dU_sq = detail::get_f64(in);
            c.sum_dW_sq = detail::get_f64(in);
        }
    } else {
        ck.avg_clients.resize(p);
        for (FedMAvgClient& c : ck.avg_clients) c.U = detail::get_matrix(in);
    }
    return ck;
}

} // namespace fedmc
