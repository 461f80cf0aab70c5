// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one [PASS]/[FAIL] line per criterion. Exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fedmc/fedmc.hpp"
#include "support/dense_reference.hpp"
#include "support/ratings_like.hpp"
#include "support/test_util.hpp"

namespace {

using fedmc::Matrix;
using fedmc::RunConfig;

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += "FAILED: " + what;
        }
    }
    void note(const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// Expected beta warnings from deliberately extreme configs go here, keeping
// the criterion report the only output.
std::ostream& warn_sink() {
    static std::ostringstream sink;
    return sink;
}

// The shared synthetic of criteria 1-4.
RunConfig shared_synthetic_config() {
    RunConfig cfg;
    cfg.synthetic = fedmc::SyntheticSpec{200, 60, 3, 0.05, 0.0, 42};
    cfg.clients = 8;
    cfg.rank = 3;
    cfg.inner_iters = 5;
    cfg.reg = {fedmc::RegKind::ridge, 1e-6, 1e-6};
    cfg.seed_split = 11;
    cfg.seed_init = 12;
    cfg.seed_sample = 13;
    cfg.timing = fedmc::TimingMode::zero;
    cfg.eval_every = 1;
    return cfg;
}

// The rank-5 recovery synthetic of criteria 7, 9 and 10.
RunConfig recovery_config() {
    RunConfig cfg;
    cfg.synthetic = fedmc::SyntheticSpec{500, 200, 5, 0.5, 0.0, 21};
    cfg.clients = 10;
    cfg.rank = 5;
    cfg.inner_iters = 10;
    cfg.reg = {fedmc::RegKind::ridge, 1e-6, 1e-6};
    cfg.sample_size = 10;
    cfg.seed_split = 31;
    cfg.seed_init = 32;
    cfg.seed_sample = 33;
    cfg.rounds = 300;
    cfg.eval_every = 300;
    cfg.timing = fedmc::TimingMode::zero;
    return cfg;
}

double round0_beta_bound(RunConfig cfg) {
    cfg.rounds = 1;
    return fedmc::check_config(cfg).beta_bound;
}

Outcome criterion1_dual_identity() {
    Outcome out;
    RunConfig cfg = shared_synthetic_config();
    cfg.beta = 0.1;
    cfg.sample_size = 3;
    cfg.rounds = 50;
    cfg.check_invariants = true;
    const fedmc::RunResult result = fedmc::run(cfg, warn_sink());
    double worst = result.dual_identity_round0;
    for (const fedmc::RoundTrace& trace : result.traces)
        worst = std::max(worst, trace.dual_identity_rel);
    out.require(worst <= 1e-8, "dual identity rel error " + fmt(worst) + " > 1e-8");
    out.note("max rel " + fmt(worst));
    return out;
}

Outcome criterion2_descent() {
    Outcome out;
    RunConfig cfg = shared_synthetic_config();
    cfg.sample_size = cfg.clients; // full participation
    const double bound = round0_beta_bound(cfg);
    cfg.beta = 2.0 * bound;
    cfg.rounds = 100;
    cfg.track_cross_lipschitz = true;
    const fedmc::RunResult result = fedmc::run(cfg, warn_sink());

    const double cross = result.traces.back().cross_lipschitz;
    std::vector<double> surrogate;
    surrogate.reserve(cfg.rounds);
    for (std::size_t k = 1; k <= cfg.rounds; ++k)
        surrogate.push_back(fedmc::surrogate_lagrangian(result.traces[k - 1],
                                                        result.records[k].aug_lagrangian,
                                                        cfg.clients, cfg.beta, cfg.inner_iters,
                                                        cross));
    double worst_violation = 0.0;
    for (std::size_t k = 0; k + 1 < surrogate.size(); ++k) {
        const double slack = 1e-9 * (1.0 + std::abs(surrogate[k]));
        worst_violation = std::max(worst_violation, surrogate[k + 1] - surrogate[k] - slack);
    }
    out.require(worst_violation <= 0.0,
                "surrogate increased by " + fmt(worst_violation) + " beyond tolerance");
    out.note("beta " + fmt(cfg.beta) + " (2x bound " + fmt(bound) + "), L_hat " +
             fmt(surrogate.front()) + " -> " + fmt(surrogate.back()));
    return out;
}

Outcome criterion3_consensus() {
    Outcome out;
    RunConfig cfg = shared_synthetic_config();
    cfg.sample_size = cfg.clients;
    cfg.beta = 2.0 * round0_beta_bound(cfg);
    cfg.rounds = 100;
    const fedmc::RunResult result = fedmc::run(cfg, warn_sink());

    // Known-red clause: at beta = 2x the round-0 threshold the gap decays
    // like ~1/k and sits near 7e-3 at round 100 for every admissible
    // density/rank/regularizer/seed of this instance family (it crosses 1e-3
    // around round 750). Asserted as specified.
    const double gap = result.records.back().consensus_gap;
    out.require(gap < 1e-3, "consensus gap " + fmt(gap) + " >= 1e-3 at round 100");

    double total = 0.0;
    double upto90 = 0.0;
    for (std::size_t k = 0; k < result.traces.size(); ++k) {
        total += result.traces[k].dV_sq;
        if (k < 90) upto90 += result.traces[k].dV_sq;
    }
    const double tail_share = total > 0.0 ? (total - upto90) / total : 0.0;
    out.require(tail_share < 0.01,
                "last-10-round dV^2 increment " + fmt(tail_share) + " >= 1% of total");
    out.note("gap " + fmt(gap) + ", tail share " + fmt(tail_share));
    return out;
}

Outcome criterion4_stationarity_rate() {
    Outcome out;
    RunConfig cfg = shared_synthetic_config();
    cfg.sample_size = cfg.clients;
    cfg.beta = 2.0 * round0_beta_bound(cfg);
    cfg.rounds = 400;
    cfg.eval_every = 1;
    const fedmc::RunResult result = fedmc::run(cfg, warn_sink());

    const auto running_mean = [&](std::size_t upto) {
        double acc = 0.0;
        for (std::size_t k = 1; k <= upto; ++k) acc += result.records[k].stationarity_sq;
        return acc / static_cast<double>(upto);
    };
    const double mean100 = running_mean(100);
    const double mean400 = running_mean(400);
    const double ratio = mean100 / mean400;
    out.require(ratio >= 2.0 && ratio <= 8.0,
                "running-mean ratio " + fmt(ratio) + " outside [2, 8]");
    out.note("mean@100 " + fmt(mean100) + ", mean@400 " + fmt(mean400) + ", ratio " + fmt(ratio));
    return out;
}

Outcome criterion5_prox_oracles() {
    Outcome out;
    fedmc::rng::Engine eng(555);

    // soft-threshold against per-coordinate brute force
    double worst_prox = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const double q = -2.0 + 4.0 * eng.uniform01();
        const double tau = 2.0 * eng.uniform01();
        Matrix qm(1, 1);
        qm << q;
        const double x_star = fedmc::soft_threshold(qm, tau)(0, 0);
        const auto objective = [&](double x) {
            return 0.5 * (x - q) * (x - q) + tau * std::abs(x);
        };
        const double span = std::abs(q) + tau + 1.0;
        double best = objective(x_star);
        for (int g = 0; g <= 4000; ++g) {
            const double x = -span + 2.0 * span * g / 4000.0;
            best = std::min(best, objective(x));
        }
        worst_prox = std::max(worst_prox, objective(x_star) - best);
    }
    out.require(worst_prox <= 1e-9, "soft-threshold excess " + fmt(worst_prox) + " > 1e-9");

    // W-step closed form zeroes its surrogate gradient
    double worst_grad = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t p = 3;
        const fedmc::MaskedMatrix m = testutil::random_mask(8, 6, 0.5, eng, 0.0, 5.0);
        fedmc::ClientState c;
        c.U = testutil::random_matrix(8, 2, eng);
        c.W = testutil::random_matrix(2, 6, eng);
        c.Y = testutil::random_matrix(2, 6, eng, -0.2, 0.2);
        c.W_penultimate = c.W;
        c.L_U_last = fedmc::lipschitz_for_W_step(c.U);
        const Matrix v = testutil::random_matrix(2, 6, eng);
        const Matrix w_prev = c.W;
        const double beta = 0.4;
        fedmc::local_W_update(c, m, v, beta, 1, p);
        const double lipschitz = fedmc::lipschitz_for_W_step(c.U);
        const Matrix residual = fedmc::masked_grad_V(m, c.U, w_prev) / 3.0 + c.Y +
                                lipschitz / 3.0 * (c.W - w_prev) + beta * (c.W - v);
        worst_grad = std::max(worst_grad, residual.norm());
    }
    out.require(worst_grad <= 1e-10, "W-step gradient residual " + fmt(worst_grad) + " > 1e-10");

    // ridge and l1 server updates beat 1000 random perturbations
    for (const fedmc::RegKind kind : {fedmc::RegKind::ridge, fedmc::RegKind::l1}) {
        const double gamma = 0.3;
        const double beta = 0.5;
        std::vector<fedmc::ClientState> clients(3);
        for (fedmc::ClientState& c : clients) {
            c.U = Matrix::Zero(1, 1);
            c.W = testutil::random_matrix(2, 4, eng);
            c.Y = testutil::random_matrix(2, 4, eng, -0.3, 0.3);
        }
        fedmc::ServerState server;
        server.V = Matrix::Zero(2, 4);
        server.beta = beta;
        fedmc::server_update(server, clients, {kind, 0.0, gamma});
        const auto objective = [&](const Matrix& v) {
            double acc = kind == fedmc::RegKind::ridge ? 0.5 * gamma * v.squaredNorm()
                                                       : gamma * v.cwiseAbs().sum();
            for (const fedmc::ClientState& c : clients)
                acc += c.Y.cwiseProduct(c.W - v).sum() + 0.5 * beta * (c.W - v).squaredNorm();
            return acc;
        };
        const double at_solution = objective(server.V);
        bool beaten = false;
        for (int rep = 0; rep < 1000; ++rep) {
            const Matrix delta = testutil::random_matrix(2, 4, eng, -1e-2, 1e-2);
            if (objective(server.V + delta) < at_solution - 1e-12) beaten = true;
        }
        out.require(!beaten, std::string(kind == fedmc::RegKind::ridge ? "ridge" : "l1") +
                                 " server update beaten by a perturbation");
    }
    out.note("prox excess " + fmt(worst_prox) + ", W-step residual " + fmt(worst_grad));
    return out;
}

Outcome criterion6_dense_transcript() {
    Outcome out;
    // 4x3 toy, p = 2, r = 1, N = 2, one full-participation round.
    std::vector<fedmc::MaskedMatrix> blocks;
    blocks.emplace_back(2, 3,
                        std::vector<fedmc::MaskedMatrix::Entry>{
                            {0, 0, 3.0}, {0, 2, 1.0}, {1, 1, 4.0}});
    blocks.emplace_back(2, 3,
                        std::vector<fedmc::MaskedMatrix::Entry>{
                            {0, 0, 2.0}, {0, 1, 5.0}, {1, 2, 2.5}});

    for (const bool l1 : {false, true}) {
        fedmc::HyperParams hp;
        hp.inner_iters = 2;
        hp.beta = 0.3;
        hp.reg = {l1 ? fedmc::RegKind::l1 : fedmc::RegKind::ridge, 1e-2, 2e-2};
        hp.rank = 1;
        hp.init_seed = 99;
        fedmc::AdmmRun engine(blocks, hp, fedmc::SamplingPolicy::fixed(2, 7));

        denseref::Problem prob;
        prob.beta = hp.beta;
        prob.lambda = hp.reg.lambda;
        prob.gamma = hp.reg.gamma;
        prob.l1 = l1;
        prob.inner = 2;
        std::vector<Eigen::MatrixXd> u0;
        for (std::size_t i = 0; i < 2; ++i) {
            prob.M.push_back(testutil::densify(blocks[i]));
            prob.mask.push_back(testutil::indicator(blocks[i]));
            u0.push_back(engine.clients()[i].U);
        }
        denseref::State ref = denseref::initialize(prob, u0, engine.server().V);

        for (std::size_t i = 0; i < 2; ++i)
            out.require((engine.clients()[i].Y - ref.Y[i]).cwiseAbs().maxCoeff() <= 1e-12,
                        "initial dual mismatch");

        engine.step();
        denseref::round(prob, ref, {0, 1});

        double worst = (engine.server().V - ref.V).cwiseAbs().maxCoeff();
        for (std::size_t i = 0; i < 2; ++i) {
            worst = std::max(worst, (engine.clients()[i].U - ref.U[i]).cwiseAbs().maxCoeff());
            worst = std::max(worst, (engine.clients()[i].W - ref.W[i]).cwiseAbs().maxCoeff());
            worst = std::max(worst, (engine.clients()[i].Y - ref.Y[i]).cwiseAbs().maxCoeff());
            worst = std::max(
                worst, (engine.clients()[i].W_penultimate - ref.Wpen[i]).cwiseAbs().maxCoeff());
        }
        out.require(worst <= 1e-12, std::string(l1 ? "l1" : "ridge") +
                                        " transcript deviates by " + fmt(worst));
        out.note(std::string(l1 ? "l1" : "ridge") + " max dev " + fmt(worst));
    }
    return out;
}

Outcome criterion7_recovery() {
    Outcome out;
    RunConfig cfg = recovery_config();
    cfg.beta = 0.1;
    const fedmc::RunResult result = fedmc::run(cfg, warn_sink());
    const double rmse0 = result.records.front().rmse_test;
    const double rmse_final = result.records.back().rmse_test;
    out.require(rmse_final <= 0.1 * rmse0,
                "test RMSE only fell from " + fmt(rmse0) + " to " + fmt(rmse_final));
    out.note("rmse " + fmt(rmse0) + " -> " + fmt(rmse_final));
    return out;
}

// Writes a masked matrix as a triplet CSV the loader can read back.
void write_triplet_csv(const fedmc::MaskedMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "user,item,rating\n";
    char buf[80];
    for (const fedmc::MaskedMatrix::Entry& e : m.entries()) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g\n", e.row, e.col, e.value);
        out << buf;
    }
}

// 1000-user sample of a real MovieLens file when FEDMC_ML1M points at one;
// otherwise the deterministic MovieLens-like generator at the same scale.
fedmc::MaskedMatrix figure2_ratings() {
    if (const char* path = std::getenv("FEDMC_ML1M")) {
        const fedmc::RatingsData data =
            fedmc::load_ratings(path, fedmc::RatingsFormat::movielens_delimited);
        fedmc::rng::Engine eng(fedmc::rng::derive(2024, 8));
        const std::vector<std::size_t> rows =
            fedmc::rng::sample_without_replacement(data.matrix.rows(), 1000, eng);
        std::vector<std::size_t> local(data.matrix.rows(), SIZE_MAX);
        for (std::size_t i = 0; i < rows.size(); ++i) local[rows[i]] = i;
        std::vector<fedmc::MaskedMatrix::Entry> entries;
        for (const fedmc::MaskedMatrix::Entry& e : data.matrix.entries())
            if (local[e.row] != SIZE_MAX) entries.push_back({local[e.row], e.col, e.value});
        return fedmc::MaskedMatrix(1000, data.matrix.cols(), std::move(entries));
    }
    return testdata::ratings_like_movielens(1000, 3000, 165.0, 2024);
}

Outcome criterion8_figure2() {
    Outcome out;
    const std::string csv_path = "fedmc_acceptance_fig2.csv";
    write_triplet_csv(figure2_ratings(), csv_path);

    RunConfig cfg;
    cfg.data = csv_path;
    cfg.format = fedmc::RatingsFormat::triplet_csv;
    cfg.clients = 100;
    cfg.rank = 5;
    cfg.rounds = 100;
    cfg.reg = {fedmc::RegKind::ridge, 1e-6, 1e-6};
    cfg.inner_iters = 10; // N = Q1 = Q2 = 10
    cfg.sample_size = 10;
    cfg.beta = 0.1;
    cfg.seed_split = 41;
    cfg.seed_init = 42;
    cfg.seed_sample = 43;
    cfg.eval_every = 100;
    cfg.timing = fedmc::TimingMode::zero;

    cfg.algo = fedmc::Algo::fedmc_admm;
    const fedmc::RunResult admm = fedmc::run(cfg, warn_sink());
    cfg.algo = fedmc::Algo::fedmavg;
    const fedmc::RunResult avg = fedmc::run(cfg, warn_sink());
    std::remove(csv_path.c_str());

    const double rmse_admm = admm.records.back().rmse_test;
    const double rmse_avg = avg.records.back().rmse_test;
    const double obj_admm = admm.records.back().objective;
    const double obj_avg = avg.records.back().objective;
    out.require(rmse_admm <= rmse_avg, "FedMC-ADMM RMSE " + fmt(rmse_admm) +
                                           " above FedMAvg " + fmt(rmse_avg));
    out.require(obj_admm < obj_avg, "FedMC-ADMM objective " + fmt(obj_admm) +
                                        " not below FedMAvg " + fmt(obj_avg));
    out.note("rmse " + fmt(rmse_admm) + " vs " + fmt(rmse_avg) + ", obj " + fmt(obj_admm) +
             " vs " + fmt(obj_avg));
    return out;
}

Outcome criterion9_inner_iterations() {
    Outcome out;
    RunConfig base = recovery_config();
    base.beta = 0.1;
    base.timing = fedmc::TimingMode::wall;
    base.rounds = 150;

    RunConfig fast = base;
    fast.inner_iters = 5;
    RunConfig slow = base;
    slow.inner_iters = 30;

    const fedmc::RunResult r5 = fedmc::run(fast, warn_sink());
    const fedmc::RunResult r30 = fedmc::run(slow, warn_sink());

    const double threshold = std::max(r5.records.back().objective,
                                      r30.records.back().objective) *
                             (1.0 + 1e-12);
    const auto time_to_threshold = [&](const fedmc::RunResult& r) {
        for (const fedmc::RoundRecord& rec : r.records)
            if (rec.objective <= threshold) return rec.wall_time_s;
        return std::numeric_limits<double>::infinity();
    };
    const double t5 = time_to_threshold(r5);
    const double t30 = time_to_threshold(r30);
    out.require(std::isfinite(t5) && std::isfinite(t30), "a run never reached the threshold");
    out.require(t5 < t30, "N=5 took " + fmt(t5) + " s vs N=30 " + fmt(t30) + " s");
    out.note("objective " + fmt(threshold) + " reached in " + fmt(t5) + " s (N=5) vs " +
             fmt(t30) + " s (N=30)");
    return out;
}

Outcome criterion10_sparsity() {
    Outcome out;
    // Weak-signal instance: the over-regularized run must reach the absorbing
    // all-zero state, which needs beta large enough that W tracks the
    // thresholded V closely once it dies.
    RunConfig base = recovery_config();
    base.synthetic = fedmc::SyntheticSpec{500, 200, 1, 0.1, 0.0, 21};
    base.clients = 4;
    base.sample_size = 4;
    base.reg.kind = fedmc::RegKind::l1;
    base.beta = 100.0;

    RunConfig heavy = base;
    heavy.reg.lambda = 1e-1;
    heavy.reg.gamma = 10.0 * heavy.reg.lambda * heavy.beta;
    heavy.rounds = 20;
    const fedmc::RunResult strong = fedmc::run(heavy, warn_sink());
    bool all_sparse = false;
    std::size_t sparse_round = 0;
    for (const fedmc::RoundRecord& rec : strong.records) {
        if (rec.nnz_U == 0.0 && rec.nnz_V == 0.0) {
            all_sparse = true;
            sparse_round = rec.round;
            break;
        }
    }
    out.require(all_sparse, "lambda=1e-1 never drove nnz to 0 within 20 rounds");

    RunConfig light = base;
    light.reg.lambda = 1e-6;
    light.reg.gamma = 10.0 * light.reg.lambda * light.beta;
    light.rounds = 100;
    const fedmc::RunResult weak = fedmc::run(light, warn_sink());
    const double nnz_v = weak.records.back().nnz_V;
    out.require(nnz_v > 0.5, "lambda=1e-6 nnz_V " + fmt(nnz_v) + " <= 0.5 at round 100");
    out.note("lambda=1e-1 fully sparse by round " + std::to_string(sparse_round) +
             ", lambda=1e-6 nnz_V " + fmt(nnz_v));
    return out;
}

Outcome criterion11_sampling_fairness() {
    Outcome out;
    const fedmc::SamplingPolicy policy = fedmc::SamplingPolicy::fixed(10, 910);
    std::vector<std::size_t> hits(100, 0);
    const std::size_t rounds = 10000;
    for (std::size_t k = 0; k < rounds; ++k)
        for (const std::size_t i : fedmc::sample_clients(policy, 100, k)) ++hits[i];
    double lo = 1.0;
    double hi = 0.0;
    for (const std::size_t h : hits) {
        const double freq = static_cast<double>(h) / static_cast<double>(rounds);
        lo = std::min(lo, freq);
        hi = std::max(hi, freq);
    }
    out.require(lo >= 0.085 && hi <= 0.115,
                "frequencies [" + fmt(lo) + ", " + fmt(hi) + "] leave [0.085, 0.115]");
    out.note("empirical range [" + fmt(lo) + ", " + fmt(hi) + "]");
    return out;
}

Outcome criterion12_determinism() {
    Outcome out;
    RunConfig cfg = shared_synthetic_config();
    cfg.beta = 0.2;
    cfg.sample_size = 3;
    cfg.rounds = 15;
    cfg.eval_every = 5;

    const auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const auto strip_wall = [](const std::string& csv) {
        std::string outstr;
        std::istringstream in(csv);
        std::string line;
        while (std::getline(in, line)) {
            const std::size_t first = line.find(',');
            const std::size_t second = line.find(',', first + 1);
            outstr += line.substr(0, first) + line.substr(second) + "\n";
        }
        return outstr;
    };

    // timing = zero: full byte identity
    cfg.timing = fedmc::TimingMode::zero;
    cfg.out = "fedmc_acceptance_det_a.csv";
    fedmc::run(cfg, warn_sink());
    cfg.out = "fedmc_acceptance_det_b.csv";
    fedmc::run(cfg, warn_sink());
    const std::string za = slurp("fedmc_acceptance_det_a.csv");
    const std::string zb = slurp("fedmc_acceptance_det_b.csv");
    out.require(!za.empty() && za == zb, "timing=zero runs differ byte-for-byte");

    // default wall timing: every non-timing byte identical
    cfg.timing = fedmc::TimingMode::wall;
    cfg.out = "fedmc_acceptance_det_c.csv";
    fedmc::run(cfg, warn_sink());
    cfg.out = "fedmc_acceptance_det_d.csv";
    fedmc::run(cfg, warn_sink());
    const std::string wc = slurp("fedmc_acceptance_det_c.csv");
    const std::string wd = slurp("fedmc_acceptance_det_d.csv");
    out.require(strip_wall(wc) == strip_wall(wd), "non-timing columns differ under wall timing");

    for (const char* p : {"fedmc_acceptance_det_a.csv", "fedmc_acceptance_det_b.csv",
                          "fedmc_acceptance_det_c.csv", "fedmc_acceptance_det_d.csv"})
        std::remove(p);
    out.note(std::to_string(za.size()) + " bytes identical");
    return out;
}

struct Criterion {
    int id;
    std::string name;
    double time_limit_s;
    std::function<Outcome()> fn;
};

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "dual-variable identity on a sampled run", 10.0, criterion1_dual_identity},
        {2, "descent of the surrogate Lagrangian (deterministic)", 20.0, criterion2_descent},
        {3, "consensus vanishing and dV^2 plateau", 20.0, criterion3_consensus},
        {4, "stationarity running-mean 1/K rate", 60.0, criterion4_stationarity_rate},
        {5, "prox and server-update oracles", 5.0, criterion5_prox_oracles},
        {6, "dense reference transcript, state for state", 5.0, criterion6_dense_transcript},
        {7, "noiseless rank-5 recovery, >=90% RMSE drop", 120.0, criterion7_recovery},
        {8, "FedMC-ADMM beats FedMAvg at the reference protocol", 600.0, criterion8_figure2},
        {9, "smaller N reaches the objective threshold sooner", 300.0,
         criterion9_inner_iterations},
        {10, "l1 sparsity: heavy lambda zeroes factors, light keeps them", 120.0,
         criterion10_sparsity},
        {11, "fixed-size sampler fairness over 10000 rounds", 60.0,
         criterion11_sampling_fairness},
        {12, "byte-identical metrics under identical configs", 30.0, criterion12_determinism},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.fn();
        } catch (const std::exception& e) {
            out.ok = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (elapsed > c.time_limit_s) {
            out.ok = false;
            out.detail += (out.detail.empty() ? "" : "; ") + std::string("runtime ") +
                          fmt(elapsed) + " s exceeds limit " + fmt(c.time_limit_s) + " s";
        }
        if (!out.ok) ++failures;
        std::printf("[%s] criterion %2d: %s (%s; %.1f s)\n", out.ok ? "PASS" : "FAIL", c.id,
                    c.name.c_str(), out.detail.c_str(), elapsed);
        std::fflush(stdout);
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
