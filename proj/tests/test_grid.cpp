// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "ofdmwave/grid.hpp"

using namespace ofdmwave;

namespace {

Eigen::VectorXcd random_fbs(int n, RngStream& rng) {
    Eigen::VectorXcd x(n);
    for (int i = 0; i < n; ++i) x[i] = rng.cnormal(1.0);
    return x;
}

// brute-force DFT oracle for the sample-energy identity
double oracle_mean_power(const Eigen::VectorXcd& x, int os) {
    const int n = static_cast<int>(x.size());
    const int total = n * os;
    double acc = 0.0;
    for (int t = 0; t < total; ++t) {
        cplx s{0.0, 0.0};
        for (int i = 0; i < n; ++i) {
            const int sc = i - (n - 1) / 2;
            const double ph = 2.0 * kPi * t * sc / total;
            s += x[i] * cplx{std::cos(ph), std::sin(ph)};
        }
        acc += std::norm(s) / n;  // UnitMeanPower scale^2 = 1/n
    }
    return acc / total;
}

}  // namespace

TEST_SUITE("grid") {

TEST_CASE("index set basics") {
    CHECK(build_index_set(1) == std::vector<int>{0});
    CHECK(build_index_set(3) == std::vector<int>{-1, 0, 1});
    const auto idx = build_index_set(25);
    REQUIRE(idx.size() == 25);
    CHECK(idx.front() == -12);
    CHECK(idx.back() == 12);
    for (std::size_t i = 1; i < idx.size(); ++i) CHECK(idx[i] == idx[i - 1] + 1);
}

TEST_CASE("index set rejects even or nonpositive N") {
    CHECK_THROWS_AS(build_index_set(4), ConfigError);
    CHECK_THROWS_AS(build_index_set(0), ConfigError);
    CHECK_THROWS_AS(build_index_set(-3), ConfigError);
}

TEST_CASE("oversampled idft constant envelope cases") {
    // N=1 center subcarrier: all samples exactly 1
    Eigen::VectorXcd e0(1);
    e0[0] = 1.0;
    const auto w = oversampled_idft(e0, 2, SamplingConvention::UnitMeanPower);
    REQUIRE(w.samples.size() == 2);
    for (Eigen::Index t = 0; t < w.samples.size(); ++t)
        CHECK(std::abs(w.samples[t] - cplx{1.0, 0.0}) < 1e-15);

    // single active subcarrier n != 0: constant |z|
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(5);
    x[4] = cplx{0.7, -0.3};  // subcarrier +2
    const auto w2 = oversampled_idft(x, 4, SamplingConvention::UnitMeanPower);
    const double mag = std::abs(w2.samples[0]);
    for (Eigen::Index t = 0; t < w2.samples.size(); ++t)
        CHECK(std::abs(std::abs(w2.samples[t]) - mag) < 1e-12);
}

TEST_CASE("oversampled idft energy identity vs brute-force oracle") {
    RngStream rng(42);
    const Eigen::VectorXcd x = random_fbs(5, rng);
    const auto w = oversampled_idft(x, 4, SamplingConvention::UnitMeanPower);
    const double expected = x.squaredNorm() / 5.0;
    CHECK(w.mean_power() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(w.mean_power() == doctest::Approx(oracle_mean_power(x, 4)).epsilon(1e-12));
}

TEST_CASE("paper convention scales total sample energy by 1/O_s") {
    RngStream rng(7);
    const Eigen::VectorXcd x = random_fbs(7, rng);
    const int os = 3;
    const auto w = oversampled_idft(x, os, SamplingConvention::PaperF);
    double total = 0.0;
    for (Eigen::Index t = 0; t < w.samples.size(); ++t) total += std::norm(w.samples[t]);
    CHECK(total == doctest::Approx(x.squaredNorm() / os).epsilon(1e-12));
}

TEST_CASE("idft rejects length mismatch") {
    IdftOperator idft(5, 4);
    Eigen::VectorXcd x(3);
    x.setZero();
    CHECK_THROWS_AS(idft.apply(x, SamplingConvention::UnitMeanPower), DimensionError);
}

TEST_CASE("sample-level Parseval") {
    RngStream rng(3);
    GridConfig cfg;
    cfg.n = 9;
    cfg.oversampling = 4;
    const Eigen::VectorXcd x = random_fbs(cfg.n, rng);
    const auto w = oversampled_idft(x, cfg.oversampling, SamplingConvention::UnitMeanPower);
    // (T/(N*O_s)) * sum |z|^2 * (N/T) = ||x||^2
    double total = 0.0;
    for (Eigen::Index t = 0; t < w.samples.size(); ++t) total += std::norm(w.samples[t]);
    CHECK(total / cfg.oversampling == doctest::Approx(x.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("peak dominance: oversampling only raises the observed peak") {
    RngStream rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXcd x = random_fbs(15, rng);
        const double p1 = oversampled_idft(x, 1, SamplingConvention::UnitMeanPower).peak_power();
        const double p4 = oversampled_idft(x, 4, SamplingConvention::UnitMeanPower).peak_power();
        CHECK(p4 >= p1 - 1e-12);
    }
}

TEST_CASE("time signal single tone and zero input") {
    GridConfig cfg;
    cfg.n = 1;
    cfg.delta_f_hz = 2.0;  // T = 0.5 s
    Eigen::VectorXcd x(1);
    x[0] = 1.0;
    const double t_in = 0.1;
    CHECK(std::abs(evaluate_time_signal(x, t_in, cfg) - cplx{std::sqrt(2.0), 0.0}) < 1e-12);
    CHECK(std::abs(evaluate_time_signal(x, 0.3, cfg)) == 0.0);  // outside [-T/2, T/2]
    x[0] = 0.0;
    CHECK(std::abs(evaluate_time_signal(x, t_in, cfg)) == 0.0);
}

TEST_CASE("time signal agrees with idft samples up to the convention constant") {
    RngStream rng(5);
    GridConfig cfg;
    cfg.n = 7;
    cfg.delta_f_hz = 1000.0;
    cfg.oversampling = 4;
    const Eigen::VectorXcd x = random_fbs(cfg.n, rng);
    const auto w = oversampled_idft(x, cfg.oversampling, SamplingConvention::UnitMeanPower,
                                    cfg.symbol_duration());
    const double T = cfg.symbol_duration();
    const int total = cfg.n * cfg.oversampling;
    // s(t_k) = sqrt(N/T) z_k; fold t_k into the rect support via T-periodicity
    for (int k = 0; k < total; ++k) {
        double tk = k * T / total;
        if (tk > T / 2.0) tk -= T;
        const cplx s = evaluate_time_signal(x, tk, cfg);
        const cplx expect = std::sqrt(cfg.n / T) * w.samples[k];
        CHECK(std::abs(s - expect) <= 1e-10 * std::abs(expect));
    }
}

TEST_CASE("cp spectrum scalar evaluations") {
    GridConfig cfg;
    cfg.n = 1;
    cfg.delta_f_hz = 1.0;
    cfg.t_cp_fraction = 0.0;
    Eigen::VectorXcd x(1);
    x[0] = 1.0;
    // sinc(0) = 1 -> 1/sqrt(delta_f)
    CHECK(std::abs(evaluate_cp_spectrum(x, 0.0, cfg) - cplx{1.0, 0.0}) < 1e-15);
    // integer multiples of delta_f hit sinc zeros
    CHECK(std::abs(evaluate_cp_spectrum(x, 1.0, cfg)) < 1e-15);
    CHECK(std::abs(evaluate_cp_spectrum(x, 3.0, cfg)) < 1e-15);

    cfg.t_cp_fraction = 0.1;
    const double df_cp = cfg.cp_delta_f();
    const double expect = (1.0 / std::sqrt(df_cp)) * std::sin(kPi * 1.1) / (kPi * 1.1);
    CHECK(std::abs(evaluate_cp_spectrum(x, 1.0, cfg) - cplx{expect, 0.0}) < 1e-12);
    CHECK(1.0 / df_cp == doctest::Approx(1.1));
}

TEST_CASE("pilot insertion pattern and values") {
    GridConfig cfg;
    cfg.n = 3;
    cfg.m = 14;
    RngStream rng(9);
    const auto grid = insert_pilots(make_resource_grid(cfg), cfg, rng);
    CHECK(grid.role(1, 0) == ReRole::Pilot);  // subcarrier -1
    CHECK(grid.role(1, 1) == ReRole::Data);   // subcarrier 0 untouched
    CHECK(grid.role(1, 2) == ReRole::Pilot);  // subcarrier +1
    CHECK(pilot_positions(3).size() == 2);
    CHECK(pilot_positions(25).size() == 13);

    GridConfig cfg25 = cfg;
    cfg25.n = 25;
    RngStream rng25(1);
    const auto grid25 = insert_pilots(make_resource_grid(cfg25), cfg25, rng25);
    int pilots = 0;
    for (int m = 0; m < cfg25.m; ++m)
        for (int n = 0; n < cfg25.n; ++n)
            if (grid25.role(m, n) == ReRole::Pilot) {
                ++pilots;
                CHECK(m == kPilotSymbol);
                CHECK(std::abs(std::abs(grid25.values(m, n)) - 1.0) < 1e-15);
            }
    CHECK(pilots == 13);
    // non-pilot entries untouched
    CHECK(std::abs(grid25.values(0, 0)) == 0.0);
}

TEST_CASE("pilot layout depends only on (N, M), not on rng") {
    GridConfig cfg;
    cfg.n = 11;
    RngStream a(1), b(999);
    const auto ga = insert_pilots(make_resource_grid(cfg), cfg, a);
    const auto gb = insert_pilots(make_resource_grid(cfg), cfg, b);
    CHECK(ga.roles == gb.roles);
}

}  // TEST_SUITE
