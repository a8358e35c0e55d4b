// SPDX-License-Identifier: Apache-2.0
#ifndef OFDMWAVE_RX_HPP
#define OFDMWAVE_RX_HPP

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "ofdmwave/qam.hpp"

namespace ofdmwave {

/// M x N x K log-likelihood ratios, natural log, LLR = ln(P(b=1|y)/P(b=0|y)).
/// Finite by construction: the demapper clips to +/- kLlrClip.
struct LlrGrid {
    int m = 0, n = 0, k = 0;
    std::vector<double> values;  // (m*N + n)*K + k

    LlrGrid() = default;
    LlrGrid(int m_, int n_, int k_) : m(m_), n(n_), k(k_), values(std::size_t(m_) * n_ * k_, 0.0) {}
    double& at(int mi, int ni, int ki) {
        return values[(static_cast<std::size_t>(mi) * n + ni) * k + ki];
    }
    double at(int mi, int ni, int ki) const {
        return values[(static_cast<std::size_t>(mi) * n + ni) * k + ki];
    }
};

/// Bit tensor with the LlrGrid layout.
struct BitGrid {
    int m = 0, n = 0, k = 0;
    std::vector<std::uint8_t> values;

    BitGrid() = default;
    BitGrid(int m_, int n_, int k_) : m(m_), n(n_), k(k_), values(std::size_t(m_) * n_ * k_, 0) {}
    std::uint8_t& at(int mi, int ni, int ki) {
        return values[(static_cast<std::size_t>(mi) * n + ni) * k + ki];
    }
    std::uint8_t at(int mi, int ni, int ki) const {
        return values[(static_cast<std::size_t>(mi) * n + ni) * k + ki];
    }
};

inline constexpr double kLlrClip = 40.0;

/// Received pilot REs times conjugated (unit-modulus) pilot values.
Eigen::VectorXcd extract_pilot_observations(const Eigen::MatrixXcd& y,
                                            std::span<const int> positions,
                                            const Eigen::VectorXcd& pilot_values,
                                            int pilot_symbol = 1);

struct LmmseResult {
    Eigen::VectorXcd h;
    bool pinv_fallback = false;
};

/// h_hat = Sigma (Sigma + sigma^2 I)^{-1} p via a Hermitian solve; falls back
/// to a pseudo-inverse (flagged) when the system is singular at sigma^2 = 0.
LmmseResult lmmse_estimate(const Eigen::VectorXcd& p, const Eigen::MatrixXcd& sigma,
                           double noise_var);

/// Linear interpolation between adjacent pilot subcarriers; positions past
/// the ends copy the nearest pilot.
Eigen::VectorXcd interpolate_full_band(const Eigen::VectorXcd& h_pilots, int n,
                                       std::span<const int> positions);

struct EqualizedGrid {
    Eigen::MatrixXcd x_hat;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> degenerate;  // |h|<1e-12 REs
};

/// X_hat = Y ./ H_hat elementwise; degenerate REs are flagged (their LLRs
/// are forced to 0 downstream).
EqualizedGrid equalize(const Eigen::MatrixXcd& y, const Eigen::MatrixXcd& h_hat);

/// AWGN demapper, exact LLR with max-subtraction, clipped to +/- kLlrClip.
void demap_llr(cplx x_hat, cplx h_hat, double noise_var, const QamConstellation& constellation,
               std::span<double> llrs_out);

/// Same demapper against an explicit alphabet (used for per-subcarrier
/// scaled constellations).
void demap_llr_points(cplx x_hat, cplx h_hat, double noise_var, std::span<const cplx> points,
                      int k, std::span<double> llrs_out);

struct RateResult {
    double bce = 0.0;   // L_C, bits, normalized by M*N*B
    double rate = 0.0;  // K - L_C
};

/// BCE from clipped LLRs via the logistic map; rate = K - L_C.
RateResult bce_rate(const LlrGrid& llrs, const BitGrid& bits);

/// Per-bit BCE contribution in bits: -log2 P_hat(b | llr).
double bce_bits_term(double llr, std::uint8_t bit);

/// LLRS binary dump: header {magic "LLRS", M, N, K} then grids of
/// M*N*K doubles.
void write_llr_dump(const std::string& path, std::span<const LlrGrid> grids);
std::vector<LlrGrid> read_llr_dump(const std::string& path);

}  // namespace ofdmwave

#endif
