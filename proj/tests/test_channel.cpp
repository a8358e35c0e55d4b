// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <filesystem>

#include "ofdmwave/channel.hpp"

using namespace ofdmwave;

TEST_SUITE("channel") {

TEST_CASE("single zero-delay tap gives a flat grid") {
    TdlProfile p;
    p.num_taps = 1;
    p.delay_spread_fraction = 0.0;
    GridConfig g;
    g.n = 7;
    g.m = 4;
    RngStream rng(2);
    const auto c = generate_channel(p, g, rng);
    REQUIRE(c.h.rows() == 4);
    REQUIRE(c.h.cols() == 7);
    const cplx h0 = c.h(0, 0);
    for (Eigen::Index m = 0; m < c.h.rows(); ++m)
        for (Eigen::Index n = 0; n < c.h.cols(); ++n) CHECK(c.h(m, n) == h0);
}

TEST_CASE("slot rows are identical bitwise") {
    TdlProfile p;
    GridConfig g;
    g.n = 9;
    RngStream rng(77);
    const auto c = generate_channel(p, g, rng);
    for (Eigen::Index m = 1; m < c.h.rows(); ++m)
        for (Eigen::Index n = 0; n < c.h.cols(); ++n) CHECK(c.h(m, n) == c.h(0, n));
}

TEST_CASE("ensemble channel power is normalized") {
    TdlProfile p;
    p.num_taps = 6;
    p.delay_spread_fraction = 0.08;
    p.power_decay = 0.7;
    GridConfig g;
    g.n = 5;
    const int draws = 20000;
    double acc = 0.0;
    for (int d = 0; d < draws; ++d) {
        RngStream rng(derive_seed(99, {static_cast<std::uint64_t>(d)}));
        const auto row = generate_channel_row(p, g, rng);
        acc += row.squaredNorm() / g.n;
    }
    CHECK(acc / draws == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("apply_channel identity and noise statistics") {
    GridConfig g;
    g.n = 5;
    g.m = 3;
    ChannelRealization flat;
    flat.h = Eigen::MatrixXcd::Ones(g.m, g.n);
    RngStream rng(5);
    Eigen::MatrixXcd x(g.m, g.n);
    for (int m = 0; m < g.m; ++m)
        for (int n = 0; n < g.n; ++n) x(m, n) = rng.cnormal(1.0);
    CHECK(apply_channel(x, flat, 0.0, rng) == x);

    // noise-only variance
    const double var = 0.37;
    Eigen::MatrixXcd big = Eigen::MatrixXcd::Zero(200, 500);
    ChannelRealization ones;
    ones.h = Eigen::MatrixXcd::Ones(200, 500);
    const Eigen::MatrixXcd y = apply_channel(big, ones, var, rng);
    const double est = y.squaredNorm() / (200.0 * 500.0);
    CHECK(est == doctest::Approx(var).epsilon(0.05));

    Eigen::MatrixXcd wrong(2, 2);
    CHECK_THROWS_AS(apply_channel(wrong, flat, 0.0, rng), DimensionError);
}

TEST_CASE("linearity with replayed noise") {
    GridConfig g;
    g.n = 5;
    g.m = 2;
    TdlProfile p;
    RngStream crng(8);
    const auto c = generate_channel(p, g, crng);
    Eigen::MatrixXcd x(g.m, g.n);
    RngStream xr(3);
    for (int m = 0; m < g.m; ++m)
        for (int n = 0; n < g.n; ++n) x(m, n) = xr.cnormal(1.0);
    const cplx a{2.0, -1.0};
    RngStream n1(123), n2(123);  // same noise seed replayed
    const Eigen::MatrixXcd y1 = apply_channel(x, c, 0.1, n1);
    const Eigen::MatrixXcd y2 = apply_channel(a * x, c, 0.1, n2);
    const Eigen::MatrixXcd noise1 = y1 - c.h.cwiseProduct(x);
    const Eigen::MatrixXcd noise2 = y2 - c.h.cwiseProduct(a * x);
    CHECK((noise1 - noise2).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("energy conservation in expectation") {
    TdlProfile p;
    p.num_taps = 4;
    GridConfig g;
    g.n = 25;
    g.m = 1;
    const double var = 0.5;
    double acc_y = 0.0;
    long count = 0;
    for (int d = 0; d < 4000; ++d) {
        RngStream rng(derive_seed(1234, {static_cast<std::uint64_t>(d)}));
        const auto c = generate_channel(p, g, rng);
        Eigen::MatrixXcd x(1, g.n);
        for (int n = 0; n < g.n; ++n) x(0, n) = rng.cnormal(1.0);
        const auto y = apply_channel(x, c, var, rng);
        acc_y += y.squaredNorm();
        count += g.n;
    }
    // E|y|^2 = E|h|^2 E|x|^2 + var = 1 + var
    CHECK(acc_y / count == doctest::Approx(1.0 + var).epsilon(0.02));
}

TEST_CASE("pilot covariance: flat unit channel gives the all-ones matrix") {
    std::vector<Eigen::VectorXcd> rows;
    const cplx c{std::cos(0.7), std::sin(0.7)};  // fixed |c| = 1
    for (int d = 0; d < 64; ++d) rows.push_back(Eigen::VectorXcd::Constant(5, c));
    const std::vector<int> pos{0, 2, 4};
    const auto cov = estimate_pilot_covariance(rows, pos);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(cov.sigma(i, j) - cplx{1.0, 0.0}) < 1e-12);
    CHECK_FALSE(cov.small_dataset_warning);
}

TEST_CASE("pilot covariance warnings, hermitian and psd") {
    TdlProfile p;
    GridConfig g;
    g.n = 9;
    std::vector<Eigen::VectorXcd> rows;
    for (int d = 0; d < 2000; ++d) {
        RngStream rng(derive_seed(5, {static_cast<std::uint64_t>(d)}));
        rows.push_back(generate_channel_row(p, g, rng));
    }
    const std::vector<int> pos{0, 2, 4, 6, 8};
    const auto cov = estimate_pilot_covariance(rows, pos);
    CHECK_FALSE(cov.small_dataset_warning);
    // bitwise Hermitian by construction
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            CHECK(cov.sigma(i, j).real() == cov.sigma(j, i).real());
            CHECK(cov.sigma(i, j).imag() == -cov.sigma(j, i).imag());
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(cov.sigma);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);

    const auto few = estimate_pilot_covariance(
        std::span<const Eigen::VectorXcd>(rows.data(), 10), pos);
    CHECK(few.small_dataset_warning);
    std::vector<Eigen::VectorXcd> empty;
    CHECK_THROWS_AS(estimate_pilot_covariance(empty, pos), DimensionError);
}

TEST_CASE("iid per-subcarrier rows give near-identity covariance") {
    std::vector<Eigen::VectorXcd> rows(20000, Eigen::VectorXcd(5));
    for (std::size_t d = 0; d < rows.size(); ++d) {
        RngStream rng(derive_seed(321, {d}));
        for (int i = 0; i < 5; ++i) rows[d][i] = rng.cnormal(1.0);
    }
    const std::vector<int> pos{0, 1, 2, 3, 4};
    const auto cov = estimate_pilot_covariance(rows, pos);
    const double bound = 5.0 / std::sqrt(static_cast<double>(rows.size()));
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            const double expect = i == j ? 1.0 : 0.0;
            CHECK(std::abs(cov.sigma(i, j) - cplx{expect, 0.0}) < bound);
        }
}

TEST_CASE("CHNL dataset round trip") {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "ofdmwave-chnl-test.bin").string();
    std::vector<Eigen::VectorXcd> rows(7, Eigen::VectorXcd(5));
    RngStream rng(3);
    for (auto& r : rows)
        for (int i = 0; i < 5; ++i) r[i] = rng.cnormal(1.0);
    write_channel_dataset(path, rows);
    const auto loaded = read_channel_dataset(path);
    REQUIRE(loaded.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(loaded[i] == rows[i]);
    fs::remove(path);
    CHECK_THROWS_AS(read_channel_dataset(path), IoError);
}

TEST_CASE("profile validation") {
    TdlProfile p;
    p.num_taps = 0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.num_taps = 2;
    p.delay_spread_fraction = 1.5;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.delay_spread_fraction = 0.1;
    p.power_decay = -1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

}  // TEST_SUITE
