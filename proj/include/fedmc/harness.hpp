#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "fedmc/checkpoint.hpp"
#include "fedmc/config.hpp"
#include "fedmc/dataset.hpp"
#include "fedmc/diagnostics.hpp"
#include "fedmc/fedmavg.hpp"
#include "fedmc/fedmc_admm.hpp"
#include "fedmc/synthetic.hpp"

namespace fedmc {

struct RunResult {
    std::vector<RoundRecord> records;
    std::vector<RoundTrace> traces; // fedmc-admm only
    double beta_bound_round0 = std::numeric_limits<double>::quiet_NaN();
    bool beta_warning = false;
    double dual_identity_round0 = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double trailing_mean(const std::vector<RoundRecord>& records, std::size_t upto,
                            std::size_t window, double RoundRecord::* field) {
    const std::size_t lo = upto + 1 >= window ? upto + 1 - window : 0;
    double acc = 0.0;
    for (std::size_t i = lo; i <= upto; ++i) acc += records[i].*field;
    return acc / static_cast<double>(upto + 1 - lo);
}

} // namespace detail

/// Renders the pinned metrics header and rows; floats carry 17 significant
/// digits. window > 0 appends trailing-mean columns for objective and RMSE.
inline std::string metrics_csv(const std::vector<RoundRecord>& records, std::size_t window = 0) {
    std::string out = "round,wall_time_s,objective,rmse_test,aug_lagrangian,consensus_gap,"
                      "stationarity_sq,nnz_U,nnz_V,sampled_count";
    if (window > 0) out += ",objective_mean,rmse_test_mean";
    out += "\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const RoundRecord& r = records[i];
        out += std::to_string(r.round);
        out += ',' + detail::fmt17(r.wall_time_s);
        out += ',' + detail::fmt17(r.objective);
        out += ',' + detail::fmt17(r.rmse_test);
        out += ',' + detail::fmt17(r.aug_lagrangian);
        out += ',' + detail::fmt17(r.consensus_gap);
        out += ',' + detail::fmt17(r.stationarity_sq);
        out += ',' + detail::fmt17(r.nnz_U);
        out += ',' + detail::fmt17(r.nnz_V);
        out += ',' + std::to_string(r.sampled.size());
        if (window > 0) {
            out += ',' + detail::fmt17(
                             detail::trailing_mean(records, i, window, &RoundRecord::objective));
            out += ',' + detail::fmt17(
                             detail::trailing_mean(records, i, window, &RoundRecord::rmse_test));
        }
        out += '\n';
    }
    return out;
}

struct PreparedData {
    std::vector<MaskedMatrix> train_blocks;
    std::vector<MaskedMatrix> test_blocks;
};

/// load/generate -> split -> partition, with the test mask re-blocked through
/// the same client layout as the train mask.
inline PreparedData prepare_data(const RunConfig& cfg, std::ostream& log = std::cerr) {
    cfg.validate();
    MaskedMatrix full;
    if (cfg.synthetic) {
        full = generate_synthetic(*cfg.synthetic).matrix;
    } else {
        full = load_ratings(cfg.data, cfg.format, log).matrix;
    }
    DatasetSplit split = split_train_test(full, cfg.train_fraction, cfg.seed_split);
    ClientPartition part =
        partition_clients(split.train, cfg.clients, cfg.seed_split, cfg.shuffle_rows);
    PreparedData out;
    out.test_blocks = apply_partition(part, split.test);
    out.train_blocks = std::move(part.blocks);
    return out;
}

namespace detail {

inline std::vector<Matrix> factor_blocks(const std::vector<ClientState>& clients) {
    std::vector<Matrix> us;
    us.reserve(clients.size());
    for (const ClientState& c : clients) us.push_back(c.U);
    return us;
}

inline std::vector<Matrix> factor_blocks(const std::vector<FedMAvgClient>& clients) {
    std::vector<Matrix> us;
    us.reserve(clients.size());
    for (const FedMAvgClient& c : clients) us.push_back(c.U);
    return us;
}

} // namespace detail

/// Executes the full pipeline and returns every per-round metric; writes the
/// metrics CSV and a final checkpoint when the config names output paths.
/// Identical (config, seeds) produce identical metrics except for measured
/// wall time (timing = zero removes that column's variation).
inline RunResult run(const RunConfig& cfg, std::ostream& log = std::cerr) {
    PreparedData data = prepare_data(cfg, log);
    RunResult result;
    const bool timed = cfg.timing == TimingMode::wall;
    using clock = std::chrono::steady_clock;
    double elapsed_s = 0.0;

    if (cfg.algo == Algo::fedmc_admm) {
        HyperParams hp;
        hp.inner_iters = cfg.inner_iters;
        hp.beta = cfg.beta;
        hp.reg = cfg.reg;
        hp.rounds = cfg.rounds;
        hp.rank = cfg.rank;
        hp.init_seed = cfg.seed_init;
        RoundOptions opts;
        opts.check_dual_identity = cfg.check_invariants;
        opts.track_cross_lipschitz = cfg.track_cross_lipschitz || cfg.check_invariants;
        opts.threads = cfg.threads;
        AdmmRun engine(std::move(data.train_blocks), hp, cfg.sampling_policy(), opts);

        result.beta_bound_round0 = engine.beta_bound();
        result.beta_warning = cfg.beta < result.beta_bound_round0;
        if (result.beta_warning)
            log << "warning: beta = " << cfg.beta
                << " is below the round-0 convergence threshold estimate "
                << result.beta_bound_round0 << "\n";
        if (cfg.check_invariants) {
            double worst = 0.0;
            for (std::size_t i = 0; i < engine.clients().size(); ++i)
                worst = std::max(worst, dual_identity_residual(engine.clients()[i],
                                                               engine.data()[i],
                                                               engine.clients().size()));
            result.dual_identity_round0 = worst;
        }

        auto evaluate = [&](std::size_t round, std::vector<std::size_t> sampled) {
            RoundRecord rec;
            rec.round = round;
            rec.wall_time_s = timed ? elapsed_s : 0.0;
            const std::vector<Matrix> us = detail::factor_blocks(engine.clients());
            rec.objective = objective(us, engine.data(), engine.server().V, cfg.reg);
            rec.rmse_test = rmse(us, data.test_blocks, engine.server().V);
            rec.aug_lagrangian = augmented_lagrangian(engine.clients(), engine.data(),
                                                      engine.server().V, cfg.beta, cfg.reg);
            rec.consensus_gap = consensus_gap(engine.clients(), engine.server().V);
            if (round > 0 && round % cfg.eval_every == 0)
                rec.stationarity_sq = stationarity_residual(engine.clients(), engine.data(),
                                                            engine.server().V, cfg.beta, cfg.reg);
            rec.nnz_U = nnz_fraction_stacked(us);
            rec.nnz_V = nnz_fraction(engine.server().V);
            rec.sampled = std::move(sampled);
            result.records.push_back(std::move(rec));
        };

        evaluate(0, {});
        for (std::size_t k = 1; k <= cfg.rounds; ++k) {
            const auto t0 = clock::now();
            RoundTrace trace = engine.step();
            if (timed) elapsed_s += std::chrono::duration<double>(clock::now() - t0).count();
            evaluate(k, trace.sampled);
            result.traces.push_back(std::move(trace));
        }

        if (!cfg.checkpoint.empty()) {
            Checkpoint ck;
            ck.algo = 0;
            ck.round = engine.server().round;
            ck.seed_split = cfg.seed_split;
            ck.seed_init = cfg.seed_init;
            ck.seed_sample = cfg.seed_sample;
            ck.beta = cfg.beta;
            ck.V = engine.server().V;
            ck.clients = engine.clients();
            save_checkpoint(ck, cfg.checkpoint);
        }
    } else {
        FedMAvgParams params;
        params.q1 = cfg.inner_iters;
        params.q2 = cfg.inner_iters;
        params.lambda = cfg.reg.lambda;
        params.gamma = cfg.reg.gamma;
        params.rounds = cfg.rounds;
        params.rank = cfg.rank;
        params.init_seed = cfg.seed_init;
        params.c_override = cfg.fedmavg_c;
        FedMAvgRun engine(std::move(data.train_blocks), params, cfg.sampling_policy());

        auto evaluate = [&](std::size_t round, std::vector<std::size_t> sampled) {
            RoundRecord rec;
            rec.round = round;
            rec.wall_time_s = timed ? elapsed_s : 0.0;
            const std::vector<Matrix> us = detail::factor_blocks(engine.clients());
            rec.objective = objective(us, engine.data(), engine.server().V, cfg.reg);
            rec.rmse_test = rmse(us, data.test_blocks, engine.server().V);
            rec.nnz_U = nnz_fraction_stacked(us);
            rec.nnz_V = nnz_fraction(engine.server().V);
            rec.sampled = std::move(sampled);
            result.records.push_back(std::move(rec));
        };

        evaluate(0, {});
        for (std::size_t k = 1; k <= cfg.rounds; ++k) {
            const auto t0 = clock::now();
            std::vector<std::size_t> sampled = engine.step();
            if (timed) elapsed_s += std::chrono::duration<double>(clock::now() - t0).count();
            evaluate(k, std::move(sampled));
        }

        if (!cfg.checkpoint.empty()) {
            Checkpoint ck;
            ck.algo = 1;
            ck.round = engine.server().round;
            ck.seed_split = cfg.seed_split;
            ck.seed_init = cfg.seed_init;
            ck.seed_sample = cfg.seed_sample;
            ck.beta = 0.0;
            ck.V = engine.server().V;
            ck.avg_clients = engine.clients();
            save_checkpoint(ck, cfg.checkpoint);
        }
    }

    if (!cfg.out.empty()) {
        std::ofstream out(cfg.out, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot open metrics file '" + cfg.out + "' for writing");
        out << metrics_csv(result.records, cfg.window);
        if (!out) throw ConfigError("failed writing metrics file '" + cfg.out + "'");
    }
    return result;
}

struct CheckReport {
    bool applicable = false; // beta threshold only exists for fedmc-admm
    double beta = 0.0;
    double beta_bound = std::numeric_limits<double>::quiet_NaN();
    bool warn = false;
    std::size_t clients = 0;
    std::size_t train_entries = 0;
    std::size_t test_entries = 0;
};

/// Validates a config, builds the run up to initialization, and reports the
/// round-0 beta threshold diagnostic.
inline CheckReport check_config(const RunConfig& cfg, std::ostream& log = std::cerr) {
    PreparedData data = prepare_data(cfg, log);
    CheckReport report;
    report.clients = data.train_blocks.size();
    for (const MaskedMatrix& b : data.train_blocks) report.train_entries += b.nnz();
    for (const MaskedMatrix& b : data.test_blocks) report.test_entries += b.nnz();
    if (cfg.algo != Algo::fedmc_admm) return report;

    HyperParams hp;
    hp.inner_iters = cfg.inner_iters;
    hp.beta = cfg.beta;
    hp.reg = cfg.reg;
    hp.rounds = cfg.rounds;
    hp.rank = cfg.rank;
    hp.init_seed = cfg.seed_init;
    AdmmRun engine(std::move(data.train_blocks), hp, cfg.sampling_policy(), {});
    report.applicable = true;
    report.beta = cfg.beta;
    report.beta_bound = engine.beta_bound();
    report.warn = cfg.beta < report.beta_bound;
    return report;
}

} // namespace fedmc
