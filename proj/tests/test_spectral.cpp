// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <filesystem>

#include "ofdmwave/rng.hpp"
#include "ofdmwave/spectral.hpp"

using namespace ofdmwave;

namespace {

// Independent oracle: composite Simpson with interval doubling until two
// successive refinements agree. No code shared with the GK15 implementation.
double simpson_oracle(double a, double b, double rho, int sc_a, int sc_b, double tol) {
    const auto f = [&](double u) {
        return rho * sinc(rho * (u - sc_a)) * sinc(rho * (u - sc_b));
    };
    double prev = 0.0;
    for (int k = 8; k <= 24; ++k) {
        const std::size_t panels = std::size_t{1} << k;
        const double h = (b - a) / static_cast<double>(panels);
        double acc = f(a) + f(b);
        for (std::size_t i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
        const double val = acc * h / 3.0;
        if (k > 8 && std::abs(val - prev) < tol) return val;
        prev = val;
    }
    return prev;
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("W is the identity") {
    CHECK(compute_w(1) == Eigen::MatrixXd::Identity(1, 1));
    CHECK(compute_w(3) == Eigen::MatrixXd::Identity(3, 3));
    RngStream rng(1);
    Eigen::VectorXcd x(3);
    for (int i = 0; i < 3; ++i) x[i] = rng.cnormal(1.0);
    SpectralOperators ops;
    ops.w = compute_w(3);
    ops.v = compute_w(3);
    CHECK(total_energy(x, ops) == doctest::Approx(x.squaredNorm()).epsilon(1e-14));
}

TEST_CASE("v00 at N=1, tcp=0 matches the independent quadrature oracle") {
    const Eigen::MatrixXd v = compute_v(1, 0.0, 1e-10);
    const double oracle = simpson_oracle(-0.5, 0.5, 1.0, 0, 0, 1e-12);
    CHECK(v(0, 0) == doctest::Approx(oracle).epsilon(1e-9));
    // frozen reference from a 30-digit quadrature run
    CHECK(v(0, 0) == doctest::Approx(0.77369500990281614).epsilon(1e-9));
}

TEST_CASE("V symmetric PSD with dominant diagonal at N=25") {
    const Eigen::MatrixXd v = compute_v(25, 0.0, 1e-9, 2);
    CHECK((v - v.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
    for (int a = 0; a < 25; ++a) {
        CHECK(v(a, a) > 0.0);
        CHECK(v(a, a) < 1.0);
        for (int b = 0; b < 25; ++b) CHECK(v(a, a) >= std::abs(v(a, b)) - 1e-12);
    }
}

TEST_CASE("off-diagonal entries match the oracle") {
    const Eigen::MatrixXd v = compute_v(5, 0.05, 1e-10);
    const double rho = 1.05;
    // subcarriers -2..2; entry (0, 3) pairs sc -2 with sc +1
    const double oracle = simpson_oracle(-2.5, 2.5, rho, -2, 1, 1e-12);
    CHECK(v(0, 3) == doctest::Approx(oracle).epsilon(1e-7));
}

TEST_CASE("in-band energy increases with CP length") {
    const Eigen::MatrixXd v0 = compute_v(25, 0.0, 1e-9, 2);
    const Eigen::MatrixXd v1 = compute_v(25, 0.1, 1e-9, 2);
    CHECK(v1.trace() > v0.trace());
}

TEST_CASE("in-band energy values and guards") {
    SpectralOperators ops = make_spectral_operators(1, 0.0, 1e-10);
    Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(1);
    CHECK(in_band_energy(zero, ops) == 0.0);
    Eigen::VectorXcd e0(1);
    e0[0] = 1.0;
    CHECK(in_band_energy(e0, ops) == doctest::Approx(0.77369500990281614).epsilon(1e-8));
    Eigen::VectorXcd wrong(3);
    wrong.setZero();
    CHECK_THROWS_AS(in_band_energy(wrong, ops), DimensionError);

    // E_I <= E_A for random x
    SpectralOperators ops9 = make_spectral_operators(9, 0.0, 1e-9);
    RngStream rng(4);
    for (int t = 0; t < 32; ++t) {
        Eigen::VectorXcd x(9);
        for (int i = 0; i < 9; ++i) x[i] = rng.cnormal(1.0);
        CHECK(in_band_energy(x, ops9) <= total_energy(x, ops9) + 1e-10);
    }
}

TEST_CASE("analytic ACLR") {
    const SpectralOperators ops = make_spectral_operators(1, 0.0, 1e-10);
    const auto a = aclr_analytic(ops);
    CHECK(a.ratio == doctest::Approx(1.0 / 0.77369500990281614 - 1.0).epsilon(1e-8));
    CHECK(a.ratio >= 0.0);
    CHECK(a.db == doctest::Approx(to_db(a.ratio)));

    const auto a0 = aclr_analytic(make_spectral_operators(25, 0.0, 1e-9, "", 2));
    const auto a1 = aclr_analytic(make_spectral_operators(25, 0.1, 1e-9, "", 2));
    CHECK(a1.ratio < a0.ratio);  // more CP, less leakage
}

TEST_CASE("empirical ACLR matches analytic") {
    const SpectralOperators ops1 = make_spectral_operators(1, 0.0, 1e-10);
    Eigen::VectorXcd e0(1);
    e0[0] = 1.0;
    std::vector<Eigen::VectorXcd> single{e0};
    CHECK(aclr_empirical(single, ops1) ==
          doctest::Approx(aclr_analytic(ops1).ratio).epsilon(1e-10));

    const SpectralOperators ops = make_spectral_operators(25, 0.0, 1e-9, "", 2);
    RngStream rng(8);
    std::vector<Eigen::VectorXcd> batch(20000, Eigen::VectorXcd(25));
    for (auto& x : batch)
        for (int i = 0; i < 25; ++i) x[i] = rng.cnormal(1.0);
    const double emp = aclr_empirical(batch, ops);
    CHECK(std::abs(emp - aclr_analytic(ops).ratio) / aclr_analytic(ops).ratio < 0.02);
}

TEST_CASE("empirical ACLR guards") {
    const SpectralOperators ops = make_spectral_operators(3, 0.0, 1e-9);
    std::vector<Eigen::VectorXcd> empty;
    CHECK_THROWS_AS(aclr_empirical(empty, ops), DimensionError);
    std::vector<Eigen::VectorXcd> zeros(3, Eigen::VectorXcd::Zero(3));
    CHECK_THROWS_AS(aclr_empirical(zeros, ops), NumericalError);
}

TEST_CASE("trace-form identity via Monte Carlo") {
    const SpectralOperators ops = make_spectral_operators(9, 0.0, 1e-9);
    RngStream rng(17);
    const int draws = 20000;
    double acc = 0.0;
    for (int d = 0; d < draws; ++d) {
        Eigen::VectorXcd x(9);
        for (int i = 0; i < 9; ++i) x[i] = rng.cnormal(1.0);
        acc += in_band_energy(x, ops);
    }
    const double mean = acc / draws;
    CHECK(std::abs(mean - ops.v.trace()) / ops.v.trace() < 3.0 / std::sqrt(double(draws)));
}

TEST_CASE("invalid inputs are rejected") {
    CHECK_THROWS_AS(compute_v(4, 0.0, 1e-9), ConfigError);
    CHECK_THROWS_AS(compute_v(5, -0.1, 1e-9), ConfigError);
    CHECK_THROWS_AS(compute_v(5, 1.0, 1e-9), ConfigError);
    CHECK_THROWS_AS(compute_v(5, 0.0, 0.0), ConfigError);
    CHECK_THROWS_AS(compute_w(0), ConfigError);
}

TEST_CASE("vmat cache round trip") {
    namespace fs = std::filesystem;
    const std::string dir = (fs::temp_directory_path() / "ofdmwave-vmat-test").string();
    fs::remove_all(dir);
    const auto ops1 = make_spectral_operators(5, 0.05, 1e-9, dir);
    REQUIRE(fs::exists(dir));
    // second call must load the identical matrix from disk
    const auto ops2 = make_spectral_operators(5, 0.05, 1e-9, dir);
    CHECK(ops1.v == ops2.v);
    // different parameters get a different cache entry
    const auto ops3 = make_spectral_operators(5, 0.0, 1e-9, dir);
    CHECK(ops3.v != ops1.v);
    // corrupt header is rejected and recomputed
    Eigen::MatrixXd out;
    CHECK_FALSE(load_vmat(dir + "/nonexistent.bin", 5, 0.05, 1e-9, out));
    fs::remove_all(dir);
}

}  // TEST_SUITE
