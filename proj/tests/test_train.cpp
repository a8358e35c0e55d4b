// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "ofdmwave/train.hpp"

using namespace ofdmwave;

namespace {

std::vector<BitGrid> random_bits(int batch, int m, int n, int k, std::uint64_t seed) {
    std::vector<BitGrid> bits(batch);
    for (int i = 0; i < batch; ++i) {
        RngStream rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
        bits[i] = BitGrid(m, n, k);
        for (auto& b : bits[i].values) b = static_cast<std::uint8_t>(rng.next_u64() & 1);
    }
    return bits;
}

TxParams perturbed_params(int k, int n, std::uint64_t seed) {
    TxParams p = TxParams::qam_init(k, n);
    RngStream rng(seed);
    for (auto& c : p.constellation) c += 0.15 * rng.cnormal(1.0);
    for (Eigen::Index i = 0; i < p.gains.size(); ++i) p.gains[i] += 0.2 * rng.cnormal(1.0);
    return p;
}

// central finite differences through tx_forward + normalize + loss
template <typename LossFn>
Eigen::VectorXd fd_gradient(const TxParams& params, std::span<const BitGrid> bits,
                            const Eigen::MatrixXd& w, const LossFn& loss, double step) {
    const int k = params.bits_per_symbol();
    const auto n = static_cast<int>(params.gains.size());
    const Eigen::VectorXd theta0 = params.pack();
    Eigen::VectorXd g(theta0.size());
    for (Eigen::Index j = 0; j < theta0.size(); ++j) {
        Eigen::VectorXd tp = theta0, tm = theta0;
        tp[j] += step;
        tm[j] -= step;
        const auto np = batch_normalize(tx_forward(TxParams::unpack(tp, k, n), bits), w);
        const auto nm = batch_normalize(tx_forward(TxParams::unpack(tm, k, n), bits), w);
        g[j] = (loss(np) - loss(nm)) / (2.0 * step);
    }
    return g;
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("tx_forward reduces to the qam mapper at the init point") {
    const int k = 2, n = 5;
    const TxParams p = TxParams::qam_init(k, n);
    const auto bits = random_bits(2, 3, n, k, 7);
    const auto out = tx_forward(p, bits);
    const auto qam = QamConstellation::square_qam(k);
    for (int i = 0; i < 2; ++i)
        for (int m = 0; m < 3; ++m)
            for (int nn = 0; nn < n; ++nn) {
                std::vector<std::uint8_t> b{bits[i].at(m, nn, 0), bits[i].at(m, nn, 1)};
                CHECK(std::abs(out.grids[i](m, nn) - qam.map_bits(b)) < 1e-15);
            }
    // a zero gain notches its subcarrier
    TxParams notched = p;
    notched.gains[2] = 0.0;
    const auto out2 = tx_forward(notched, bits);
    for (int i = 0; i < 2; ++i)
        for (int m = 0; m < 3; ++m) CHECK(std::abs(out2.grids[i](m, 2)) == 0.0);
}

TEST_CASE("batch normalization contract") {
    const int k = 2, n = 5, m = 4, batch = 3;
    const Eigen::MatrixXd w = compute_w(n);
    const TxParams p = perturbed_params(k, n, 3);
    const auto bits = random_bits(batch, m, n, k, 11);
    const auto pre = tx_forward(p, bits);
    const auto normed = batch_normalize(pre, w);

    // mean energy per RE is one
    double acc = 0.0;
    for (const auto& g : normed.grids) acc += g.squaredNorm();
    CHECK(acc / (batch * m * n) == doctest::Approx(1.0).epsilon(1e-12));

    // idempotence
    TxBatch as_batch;
    as_batch.grids = normed.grids;
    const auto twice = batch_normalize(as_batch, w);
    CHECK(twice.scale == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < twice.grids.size(); ++i)
        CHECK((twice.grids[i] - normed.grids[i]).cwiseAbs().maxCoeff() < 1e-12);

    // scale removal
    TxBatch scaled;
    for (const auto& g : pre.grids) scaled.grids.push_back(3.0 * g);
    const auto n2 = batch_normalize(scaled, w);
    for (std::size_t i = 0; i < n2.grids.size(); ++i)
        CHECK((n2.grids[i] - normed.grids[i]).cwiseAbs().maxCoeff() < 1e-12);

    // correlated batch (all grids equal) still normalizes per-RE energy
    TxBatch corr;
    corr.grids.assign(4, pre.grids[0]);
    const auto nc = batch_normalize(corr, w);
    const double row_e = pre.grids[0].squaredNorm() / (m * n);
    CHECK(nc.scale == doctest::Approx(std::sqrt(row_e)).epsilon(1e-12));

    TxBatch zeros;
    zeros.grids.assign(2, Eigen::MatrixXcd::Zero(m, n));
    CHECK_THROWS_AS(batch_normalize(zeros, w), NumericalError);
}

TEST_CASE("papr loss value cases") {
    const int n = 5;
    const Eigen::MatrixXd w = compute_w(n);
    const IdftOperator idft(n, 4);
    const auto bits = random_bits(2, 3, n, 2, 5);
    const auto normed = batch_normalize(tx_forward(TxParams::qam_init(2, n), bits), w);

    // huge threshold: no excess, zero loss, zero grad
    const auto relaxed = loss_papr(normed, 100.0, idft);
    CHECK(relaxed.value == 0.0);
    for (const auto& g : relaxed.grad.grids) CHECK(g.cwiseAbs().maxCoeff() == 0.0);

    // gamma = 0: hinge always active, loss equals mean sample power = 1
    const auto full = loss_papr(normed, 0.0, idft);
    CHECK(full.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(full.value > 0.0);
}

TEST_CASE("papr loss gradient matches finite differences") {
    const int k = 2, n = 5;
    const Eigen::MatrixXd w = compute_w(n);
    const IdftOperator idft(n, 4);
    const auto bits = random_bits(2, 2, n, k, 23);
    const double gamma = 1.8;

    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
        const TxParams p = perturbed_params(k, n, seed);
        const auto pre = tx_forward(p, bits);
        const auto normed = batch_normalize(pre, w);
        // keep away from hinge kinks so central differences are clean
        bool near_kink = false;
        const Eigen::MatrixXcd a = idft.scaled_matrix(SamplingConvention::UnitMeanPower);
        for (const auto& g : normed.grids)
            for (Eigen::Index m = 0; m < g.rows(); ++m) {
                const Eigen::VectorXcd z = a * g.row(m).transpose();
                for (Eigen::Index t = 0; t < z.size(); ++t)
                    if (std::abs(std::norm(z[t]) - gamma) < 1e-3) near_kink = true;
            }
        if (near_kink) continue;

        const auto lv = loss_papr(normed, gamma, idft);
        const Eigen::VectorXd analytic = chain_to_params(lv.grad, pre, normed, w, p, bits);
        const Eigen::VectorXd fd = fd_gradient(
            p, bits, w, [&](const NormalizedBatch& b) { return loss_papr(b, gamma, idft).value; },
            1e-5);
        REQUIRE(analytic.size() == fd.size());
        CHECK((analytic - fd).norm() / std::max(fd.norm(), 1e-12) < 1e-5);
    }
}

TEST_CASE("aclr loss value and gradient") {
    const int k = 2, n = 5;
    const Eigen::MatrixXd w = compute_w(n);
    const SpectralOperators ops = make_spectral_operators(n, 0.0, 1e-9);
    const auto bits = random_bits(2, 2, n, k, 31);

    // single vector x = e_0, N=1: loss matches the v00 oracle with beta = 0
    const SpectralOperators ops1 = make_spectral_operators(1, 0.0, 1e-10);
    NormalizedBatch nb;
    nb.grids.push_back(Eigen::MatrixXcd::Ones(1, 1));
    const auto scalar = loss_aclr(nb, 0.0, ops1);
    CHECK(scalar.value == doctest::Approx(1.0 / 0.77369500990281614 - 1.0).epsilon(1e-8));

    // batch whose empirical ACLR equals beta gives zero loss
    const TxParams p0 = TxParams::qam_init(k, n);
    const auto normed0 = batch_normalize(tx_forward(p0, bits), w);
    std::vector<Eigen::VectorXcd> rows;
    for (const auto& g : normed0.grids)
        for (Eigen::Index m = 0; m < g.rows(); ++m) rows.push_back(g.row(m).transpose());
    const double beta_star = aclr_empirical(rows, ops);
    CHECK(loss_aclr(normed0, beta_star, ops).value == doctest::Approx(0.0).epsilon(1e-12));

    // gradient vs finite differences
    for (std::uint64_t seed : {11ull, 12ull, 13ull, 14ull}) {
        const TxParams p = perturbed_params(k, n, seed);
        const auto pre = tx_forward(p, bits);
        const auto normed = batch_normalize(pre, w);
        const auto lv = loss_aclr(normed, 0.02, ops);
        const Eigen::VectorXd analytic = chain_to_params(lv.grad, pre, normed, w, p, bits);
        const Eigen::VectorXd fd = fd_gradient(
            p, bits, w, [&](const NormalizedBatch& b) { return loss_aclr(b, 0.02, ops).value; },
            1e-5);
        CHECK((analytic - fd).norm() / std::max(fd.norm(), 1e-12) < 1e-5);
    }
}

TEST_CASE("augmented lagrangian closed forms") {
    LagrangianState s;
    s.lambda_p = 2.0;
    s.mu_p = 4.0;
    s.lambda_l = 1.0;
    s.mu_l = 2.0;
    CHECK(augmented_lagrangian(1.0, 0.5, 0.25, s) == doctest::Approx(2.8125).epsilon(1e-15));

    // clamped leak term: L_l <= -lambda_l/mu_l makes the max vanish
    CHECK(augmented_lagrangian(1.0, 0.0, -0.5, s) ==
          doctest::Approx(1.0 - 1.0 / (2.0 * 2.0)).epsilon(1e-15));

    // lambda = 0 reduces to the quadratic penalty
    LagrangianState q;
    q.mu_p = 3.0;
    q.mu_l = 3.0;
    CHECK(augmented_lagrangian(0.7, 0.2, 0.1, q) ==
          doctest::Approx(0.7 + 0.5 * 3.0 * 0.04 + 0.5 * 3.0 * 0.01).epsilon(1e-15));
    // inactive constraints, lambda = 0: plain L_C
    CHECK(augmented_lagrangian(0.7, 0.0, -1.0, q) == doctest::Approx(0.7).epsilon(1e-15));

    LagrangianState bad;
    bad.mu_p = 0.0;
    CHECK_THROWS_AS(augmented_lagrangian(1, 0, 0, bad), ConfigError);
}

TEST_CASE("hyperparameter updates") {
    LagrangianState s;
    s.lambda_p = 1.0;
    s.mu_p = 2.0;
    s.lambda_l = 0.0;
    s.mu_l = 1.0;
    s.tau = 0.1;
    auto next = update_hyperparameters(s, 0.3, -1.0);
    CHECK(next.lambda_p == doctest::Approx(1.6).epsilon(1e-15));
    CHECK(next.lambda_l == 0.0);  // clamped
    CHECK(next.mu_p == doctest::Approx(2.2).epsilon(1e-15));
    CHECK(next.mu_l == doctest::Approx(1.1).epsilon(1e-15));
    CHECK(next.iteration == 1);

    // zero residuals leave multipliers unchanged but grow penalties
    auto frozen = update_hyperparameters(s, 0.0, 0.0);
    CHECK(frozen.lambda_p == s.lambda_p);
    CHECK(frozen.lambda_l == s.lambda_l);
    CHECK(frozen.mu_p > s.mu_p);
}

TEST_CASE("toy constrained problem converges to the KKT point") {
    // minimize (theta-2)^2 subject to theta = 0, via Algorithm-1 updates;
    // stationarity 2(theta-2) + lambda = 0 at theta = 0 gives lambda = 4
    LagrangianState s;
    s.tau = 0.05;
    double theta = 2.0;
    for (int u = 0; u < 60; ++u) {
        for (int step = 0; step < 200; ++step) {
            const double grad = 2.0 * (theta - 2.0) + s.lambda_p + s.mu_p * theta;
            theta -= 0.05 / (1.0 + 0.05 * s.mu_p) * grad;
        }
        s = update_hyperparameters(s, theta, -1.0);
    }
    CHECK(std::abs(theta) < 1e-3);
    CHECK(s.lambda_p == doctest::Approx(4.0).epsilon(0.01 / 4.0));
    CHECK(s.lambda_l == 0.0);
    CHECK(s.mu_p == doctest::Approx(std::pow(1.05, 60)).epsilon(1e-12));
}

TEST_CASE("pack/unpack round trip") {
    const TxParams p = perturbed_params(2, 7, 99);
    const TxParams q = TxParams::unpack(p.pack(), 2, 7);
    for (std::size_t i = 0; i < p.constellation.size(); ++i)
        CHECK(p.constellation[i] == q.constellation[i]);
    CHECK(p.gains == q.gains);
}

TEST_CASE("short training run is deterministic and traces hyperparameters") {
    TrainConfig cfg;
    cfg.gamma_peak = 100.0;  // inactive
    cfg.beta_leak = 10.0;    // inactive
    cfg.batch_size = 4;
    cfg.sgd_steps = 1;
    cfg.outer_iterations = 3;
    cfg.learning_rate = 0.01;
    cfg.covariance_draws = 200;
    cfg.seed = 5;
    GridConfig grid;
    grid.n = 5;
    grid.m = 3;
    grid.oversampling = 4;
    TdlProfile profile;
    profile.num_taps = 2;

    const auto r1 = run_training(cfg, grid, profile, 2);
    const auto r2 = run_training(cfg, grid, profile, 2);
    REQUIRE(r1.trace.size() == 3);
    CHECK_FALSE(r1.diverged);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(r1.trace[i].l_c == r2.trace[i].l_c);
        CHECK(r1.trace[i].mu_p == doctest::Approx(std::pow(1.05, i)).epsilon(1e-12));
        CHECK(r1.trace[i].lambda_l >= 0.0);
    }
    CHECK(r1.params.pack() == r2.params.pack());
    // inactive constraints keep multipliers near zero except leak clamp
    CHECK(r1.trace.back().lambda_l == 0.0);
}

TEST_CASE("threaded and serial training agree") {
    TrainConfig cfg;
    cfg.gamma_peak = 100.0;
    cfg.beta_leak = 10.0;
    cfg.batch_size = 4;
    cfg.sgd_steps = 1;
    cfg.outer_iterations = 2;
    cfg.covariance_draws = 100;
    cfg.seed = 9;
    GridConfig grid;
    grid.n = 5;
    grid.m = 3;
    TdlProfile profile;
    profile.num_taps = 2;
    cfg.threads = 1;
    const auto serial = run_training(cfg, grid, profile, 2);
    cfg.threads = 2;
    const auto threaded = run_training(cfg, grid, profile, 2);
    CHECK(serial.params.pack() == threaded.params.pack());
    for (std::size_t i = 0; i < serial.trace.size(); ++i)
        CHECK(serial.trace[i].l_c == threaded.trace[i].l_c);
}

}  // TEST_SUITE
