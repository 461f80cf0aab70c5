#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "fedmc/fedmc.hpp"

namespace {

struct Overrides {
    std::optional<std::string> algo;
    std::optional<std::string> reg;
    std::optional<double> beta;
    std::optional<std::uint64_t> inner_iters;
    std::optional<double> lambda;
    std::optional<double> gamma;
    std::optional<std::uint64_t> clients;
    std::optional<std::uint64_t> sample_size;
    std::optional<std::uint64_t> rank;
    std::optional<std::uint64_t> rounds;
    std::optional<std::uint64_t> seed_split;
    std::optional<std::uint64_t> seed_init;
    std::optional<std::uint64_t> seed_sample;
    std::optional<std::uint64_t> eval_every;
    std::optional<std::string> out;
    std::optional<std::string> checkpoint;
    std::optional<std::uint64_t> threads;
    std::optional<std::string> timing;
    bool check_invariants = false;
};

void add_override_flags(CLI::App& cmd, Overrides& ov) {
    cmd.add_option("--algo", ov.algo, "Algorithm: fedmc-admm or fedmavg");
    cmd.add_option("--reg", ov.reg, "Regularizer: l2 or l1");
    cmd.add_option("--beta", ov.beta, "ADMM penalty parameter");
    cmd.add_option("--inner-iters", ov.inner_iters, "Inner iteration count N (Q1=Q2 for fedmavg)");
    cmd.add_option("--lambda", ov.lambda, "Client regularizer weight");
    cmd.add_option("--gamma", ov.gamma, "Server regularizer weight");
    cmd.add_option("--clients", ov.clients, "Client count p");
    cmd.add_option("--sample-size", ov.sample_size, "Sampled clients per round");
    cmd.add_option("--rank", ov.rank, "Factorization rank r");
    cmd.add_option("--rounds", ov.rounds, "Communication rounds K");
    cmd.add_option("--seed-split", ov.seed_split, "Train/test split seed");
    cmd.add_option("--seed-init", ov.seed_init, "Factor initialization seed");
    cmd.add_option("--seed-sample", ov.seed_sample, "Client sampling seed");
    cmd.add_option("--eval-every", ov.eval_every, "Stationarity-residual cadence in rounds");
    cmd.add_option("--out", ov.out, "Metrics CSV output path");
    cmd.add_option("--checkpoint", ov.checkpoint, "Final checkpoint output path");
    cmd.add_option("--threads", ov.threads, "Worker threads for client updates");
    cmd.add_option("--timing", ov.timing, "Timing mode: wall or zero");
    cmd.add_flag("--check", ov.check_invariants, "Verify the dual identity every round");
}

void apply_overrides(fedmc::RunConfig& cfg, const Overrides& ov) {
    if (ov.algo) cfg.algo = fedmc::parse_algo(*ov.algo);
    if (ov.reg) cfg.reg.kind = fedmc::parse_reg_kind(*ov.reg);
    if (ov.beta) cfg.beta = *ov.beta;
    if (ov.inner_iters) cfg.inner_iters = *ov.inner_iters;
    if (ov.lambda) cfg.reg.lambda = *ov.lambda;
    if (ov.gamma) cfg.reg.gamma = *ov.gamma;
    if (ov.clients) cfg.clients = *ov.clients;
    if (ov.sample_size) cfg.sample_size = *ov.sample_size;
    if (ov.rank) cfg.rank = *ov.rank;
    if (ov.rounds) cfg.rounds = *ov.rounds;
    if (ov.seed_split) cfg.seed_split = *ov.seed_split;
    if (ov.seed_init) cfg.seed_init = *ov.seed_init;
    if (ov.seed_sample) cfg.seed_sample = *ov.seed_sample;
    if (ov.eval_every) cfg.eval_every = *ov.eval_every;
    if (ov.out) cfg.out = *ov.out;
    if (ov.checkpoint) cfg.checkpoint = *ov.checkpoint;
    if (ov.threads) cfg.threads = *ov.threads;
    if (ov.timing) {
        if (*ov.timing == "wall") cfg.timing = fedmc::TimingMode::wall;
        else if (*ov.timing == "zero") cfg.timing = fedmc::TimingMode::zero;
        else throw fedmc::ConfigError("unknown timing mode '" + *ov.timing + "'");
    }
    if (ov.check_invariants) cfg.check_invariants = true;
}

int cmd_run(const std::string& config_path, const Overrides& ov) {
    fedmc::RunConfig cfg = fedmc::load_config(config_path);
    apply_overrides(cfg, ov);
    if (cfg.out.empty()) cfg.out = "metrics.csv";
    if (cfg.checkpoint.empty()) cfg.checkpoint = cfg.out + ".ckpt";
    fedmc::RunResult result = fedmc::run(cfg);
    const fedmc::RoundRecord& last = result.records.back();
    std::printf("rounds: %zu\n", last.round);
    std::printf("objective: %.17g\n", last.objective);
    std::printf("rmse_test: %.17g\n", last.rmse_test);
    std::printf("metrics: %s\n", cfg.out.c_str());
    if (!cfg.checkpoint.empty()) std::printf("checkpoint: %s\n", cfg.checkpoint.c_str());
    return 0;
}

int cmd_check(const std::string& config_path, const Overrides& ov) {
    fedmc::RunConfig cfg = fedmc::load_config(config_path);
    apply_overrides(cfg, ov);
    fedmc::CheckReport report = fedmc::check_config(cfg);
    std::printf("config: ok\n");
    std::printf("clients: %zu\n", report.clients);
    std::printf("train_entries: %zu\n", report.train_entries);
    std::printf("test_entries: %zu\n", report.test_entries);
    if (report.applicable) {
        std::printf("beta: %.17g\n", report.beta);
        std::printf("beta_lower_bound: %.17g\n", report.beta_bound);
        std::printf("beta_ok: %s\n", report.warn ? "no" : "yes");
        if (report.warn)
            std::fprintf(stderr, "warning: beta is below the round-0 threshold estimate\n");
    }
    return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_path) {
    const fedmc::SyntheticSpec spec = fedmc::load_synthetic_spec(spec_path);
    const fedmc::SyntheticData data = fedmc::generate_synthetic(spec);

    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw fedmc::ConfigError("cannot open '" + out_path + "' for writing");
    out << "user,item,rating\n";
    char buf[64];
    for (const fedmc::MaskedMatrix::Entry& e : data.matrix.entries()) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g\n", e.row, e.col, e.value);
        out << buf;
    }

    const std::string truth_path = out_path + ".truth";
    std::ofstream truth(truth_path, std::ios::binary | std::ios::trunc);
    if (!truth) throw fedmc::ConfigError("cannot open '" + truth_path + "' for writing");
    truth << data.true_U.rows() << ' ' << data.true_V.cols() << ' ' << data.true_U.cols() << '\n';
    const auto write_matrix = [&](const fedmc::Matrix& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                std::snprintf(buf, sizeof(buf), j + 1 == m.cols() ? "%.17g" : "%.17g ", m(i, j));
                truth << buf;
            }
            truth << '\n';
        }
    };
    write_matrix(data.true_U);
    write_matrix(data.true_V);

    std::printf("entries: %zu\n", data.matrix.nnz());
    std::printf("ratings: %s\n", out_path.c_str());
    std::printf("truth: %s\n", truth_path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"FedMC-ADMM federated matrix completion simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string spec_path;
    std::string synth_out;
    Overrides ov;

    CLI::App* run = app.add_subcommand("run", "Execute a configured run");
    run->add_option("--config", config_path, "Run config file")->required();
    add_override_flags(*run, ov);

    CLI::App* check = app.add_subcommand("check", "Validate a config and print diagnostics");
    check->add_option("--config", config_path, "Run config file")->required();
    add_override_flags(*check, ov);

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic ratings file");
    synth->add_option("--spec", spec_path, "Synthetic spec file")->required();
    synth->add_option("--out", synth_out, "Output triplet CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, ov);
        if (check->parsed()) return cmd_check(config_path, ov);
        if (synth->parsed()) return cmd_synth(spec_path, synth_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
