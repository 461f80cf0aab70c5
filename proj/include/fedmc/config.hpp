#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fedmc/dataset.hpp"
#include "fedmc/errors.hpp"
#include "fedmc/kernels.hpp"
#include "fedmc/sampling.hpp"
#include "fedmc/synthetic.hpp"

namespace fedmc {

enum class Algo { fedmc_admm, fedmavg };
enum class TimingMode { wall, zero };

/// Full run description. Either `data` names a ratings file or `synthetic`
/// describes a generated instance; exactly one must be present.
struct RunConfig {
    Algo algo = Algo::fedmc_admm;

    std::string data;
    RatingsFormat format = RatingsFormat::triplet_csv;
    std::optional<SyntheticSpec> synthetic;

    std::size_t clients = 100;
    std::size_t rank = 5;
    std::size_t rounds = 100;

    RegularizerSpec reg{RegKind::ridge, 1e-6, 1e-6};
    double beta = 0.1;
    std::size_t inner_iters = 10; // N, and Q1 = Q2 for FedMAvg
    double fedmavg_c = 0.0;       // 0 = derive from the c rule

    SamplingMode sampling = SamplingMode::fixed_size;
    std::size_t sample_size = 10;
    double sample_prob = 0.1; // bernoulli, broadcast to every client

    std::uint64_t seed_split = 1;
    std::uint64_t seed_init = 2;
    std::uint64_t seed_sample = 3;

    double train_fraction = 0.8;
    bool shuffle_rows = false;

    std::size_t eval_every = 10; // stationarity-residual cadence
    std::size_t window = 0;      // trailing-mean window, 0 = off
    TimingMode timing = TimingMode::wall;
    bool check_invariants = false;
    bool track_cross_lipschitz = false;
    std::size_t threads = 1;

    std::string out;        // metrics CSV path; empty = don't write
    std::string checkpoint; // final checkpoint path; empty = don't write

    void validate() const {
        if (data.empty() == !synthetic.has_value())
            throw ConfigError("exactly one of a dataset path or a synthetic spec is required");
        if (synthetic) synthetic->validate();
        if (clients == 0) throw ConfigError("clients must be positive");
        if (rank == 0) throw ConfigError("rank must be positive");
        if (rounds == 0) throw ConfigError("rounds must be positive");
        reg.validate();
        if (algo == Algo::fedmc_admm && (!(beta > 0.0) || !std::isfinite(beta)))
            throw ConfigError("beta must be positive");
        if (inner_iters == 0) throw ConfigError("inner iteration count must be positive");
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw ConfigError("train fraction must lie in (0,1)");
        if (eval_every == 0) throw ConfigError("eval cadence must be positive");
        if (threads == 0) throw ConfigError("threads must be positive");
        SamplingPolicy policy = sampling_policy();
        policy.validate(clients);
    }

    SamplingPolicy sampling_policy() const {
        SamplingPolicy sp;
        sp.mode = sampling;
        sp.seed = seed_sample;
        if (sampling == SamplingMode::fixed_size)
            sp.size = sample_size;
        else
            sp.probs.assign(clients, sample_prob);
        return sp;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace detail

/// Flat `key = value` settings with optional `[section]` headers that prefix
/// keys as `section.key`. `#` starts a comment.
inline std::map<std::string, std::string> parse_key_values(std::istream& in,
                                                           const std::string& origin) {
    std::map<std::string, std::string> kv;
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value' in " + origin, lineno);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key in " + origin, lineno);
        kv[section.empty() ? key : section + "." + key] = value;
    }
    return kv;
}

inline std::map<std::string, std::string> parse_key_value_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_key_values(in, path);
}

namespace detail {

inline double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for '" + key + "': '" + value + "'");
    }
}

inline std::uint64_t to_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad integer value for '" + key + "': '" + value + "'");
    }
}

inline bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("bad boolean value for '" + key + "': '" + value + "'");
}

} // namespace detail

inline Algo parse_algo(const std::string& value) {
    if (value == "fedmc-admm") return Algo::fedmc_admm;
    if (value == "fedmavg") return Algo::fedmavg;
    throw ConfigError("unknown algo '" + value + "' (expected fedmc-admm or fedmavg)");
}

inline RegKind parse_reg_kind(const std::string& value) {
    if (value == "l2" || value == "ridge") return RegKind::ridge;
    if (value == "l1") return RegKind::l1;
    throw ConfigError("unknown regularizer '" + value + "' (expected l2 or l1)");
}

inline RatingsFormat parse_format(const std::string& value) {
    if (value == "movielens-delimited") return RatingsFormat::movielens_delimited;
    if (value == "triplet-csv") return RatingsFormat::triplet_csv;
    throw ConfigError("unknown format '" + value + "'");
}

/// Applies parsed key/values onto a config. Unknown keys are rejected so
/// typos fail loudly.
inline void apply_settings(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
    using detail::to_bool;
    using detail::to_double;
    using detail::to_u64;
    for (const auto& [key, value] : kv) {
        if (key == "algo") cfg.algo = parse_algo(value);
        else if (key == "data") cfg.data = value;
        else if (key == "format") cfg.format = parse_format(value);
        else if (key == "clients") cfg.clients = to_u64(key, value);
        else if (key == "rank") cfg.rank = to_u64(key, value);
        else if (key == "rounds") cfg.rounds = to_u64(key, value);
        else if (key == "reg") cfg.reg.kind = parse_reg_kind(value);
        else if (key == "lambda") cfg.reg.lambda = to_double(key, value);
        else if (key == "gamma") cfg.reg.gamma = to_double(key, value);
        else if (key == "beta") cfg.beta = to_double(key, value);
        else if (key == "inner_iters") cfg.inner_iters = to_u64(key, value);
        else if (key == "fedmavg_c") cfg.fedmavg_c = to_double(key, value);
        else if (key == "sampling") {
            if (value == "fixed-size") cfg.sampling = SamplingMode::fixed_size;
            else if (value == "bernoulli") cfg.sampling = SamplingMode::bernoulli;
            else throw ConfigError("unknown sampling mode '" + value + "'");
        }
        else if (key == "sample_size") cfg.sample_size = to_u64(key, value);
        else if (key == "sample_prob") cfg.sample_prob = to_double(key, value);
        else if (key == "seed_split") cfg.seed_split = to_u64(key, value);
        else if (key == "seed_init") cfg.seed_init = to_u64(key, value);
        else if (key == "seed_sample") cfg.seed_sample = to_u64(key, value);
        else if (key == "train_fraction") cfg.train_fraction = to_double(key, value);
        else if (key == "shuffle_rows") cfg.shuffle_rows = to_bool(key, value);
        else if (key == "eval_every") cfg.eval_every = to_u64(key, value);
        else if (key == "window") cfg.window = to_u64(key, value);
        else if (key == "timing") {
            if (value == "wall") cfg.timing = TimingMode::wall;
            else if (value == "zero") cfg.timing = TimingMode::zero;
            else throw ConfigError("unknown timing mode '" + value + "'");
        }
        else if (key == "check_invariants") cfg.check_invariants = to_bool(key, value);
        else if (key == "track_cross_lipschitz") cfg.track_cross_lipschitz = to_bool(key, value);
        else if (key == "threads") cfg.threads = to_u64(key, value);
        else if (key == "out") cfg.out = value;
        else if (key == "checkpoint") cfg.checkpoint = value;
        else if (key.rfind("synthetic.", 0) == 0) {
            if (!cfg.synthetic) cfg.synthetic.emplace();
            const std::string field = key.substr(10);
            if (field == "m" || field == "rows") cfg.synthetic->rows = to_u64(key, value);
            else if (field == "n" || field == "cols") cfg.synthetic->cols = to_u64(key, value);
            else if (field == "rank") cfg.synthetic->rank = to_u64(key, value);
            else if (field == "density") cfg.synthetic->density = to_double(key, value);
            else if (field == "noise") cfg.synthetic->noise = to_double(key, value);
            else if (field == "seed") cfg.synthetic->seed = to_u64(key, value);
            else throw ConfigError("unknown synthetic key '" + key + "'");
        }
        else throw ConfigError("unknown config key '" + key + "'");
    }
}

inline RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    apply_settings(cfg, parse_key_value_file(path));
    return cfg;
}

inline SyntheticSpec load_synthetic_spec(const std::string& path) {
    const auto kv = parse_key_value_file(path);
    SyntheticSpec spec;
    for (const auto& [key, value] : kv) {
        if (key == "m" || key == "rows") spec.rows = detail::to_u64(key, value);
        else if (key == "n" || key == "cols") spec.cols = detail::to_u64(key, value);
        else if (key == "rank") spec.rank = detail::to_u64(key, value);
        else if (key == "density") spec.density = detail::to_double(key, value);
        else if (key == "noise") spec.noise = detail::to_double(key, value);
        else if (key == "seed") spec.seed = detail::to_u64(key, value);
        else throw ConfigError("unknown synthetic spec key '" + key + "'");
    }
    spec.validate();
    return spec;
}

} // namespace fedmc
