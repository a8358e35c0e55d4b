// SPDX-License-Identifier: Apache-2.0
#ifndef OFDMWAVE_TRAIN_HPP
#define OFDMWAVE_TRAIN_HPP

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "ofdmwave/channel.hpp"
#include "ofdmwave/grid.hpp"
#include "ofdmwave/qam.hpp"
#include "ofdmwave/rx.hpp"
#include "ofdmwave/spectral.hpp"

namespace ofdmwave {

/// Learnable transmitter: one shared constellation plus per-subcarrier
/// complex gains. x_{m,n} = gains_n * constellation[label(bits_{m,n})].
struct TxParams {
    std::vector<cplx> constellation;  // 2^K points
    Eigen::VectorXcd gains;           // N

    int bits_per_symbol() const;
    int param_count() const {
        return 2 * static_cast<int>(constellation.size()) + 2 * static_cast<int>(gains.size());
    }

    /// [Re C..., Im C..., Re g..., Im g...]
    Eigen::VectorXd pack() const;
    static TxParams unpack(const Eigen::VectorXd& theta, int k, int n);
    /// Gray QAM constellation, unit gains: the baseline-equivalent start.
    static TxParams qam_init(int k, int n);
};

/// Augmented-Lagrangian bookkeeping: multiplier estimates, penalty weights,
/// growth rate.
struct LagrangianState {
    double lambda_p = 0.0;
    double lambda_l = 0.0;
    double mu_p = 1.0;
    double mu_l = 1.0;
    double tau = 0.05;
    int iteration = 0;
};

/// L_C + lambda_p L_p + mu_p L_p^2 / 2 + (max(0, lambda_l + mu_l L_l)^2 -
/// lambda_l^2) / (2 mu_l).
double augmented_lagrangian(double l_c, double l_peak, double l_leak,
                            const LagrangianState& state);

/// lambda_p += mu_p L_p; lambda_l = max(0, lambda_l + mu_l L_l);
/// mu *= (1 + tau).
LagrangianState update_hyperparameters(const LagrangianState& state, double l_peak,
                                       double l_leak);

// ---- differentiable transmitter pipeline -----------------------------------

/// Pre-normalization transmitter output, one M x N grid per batch item.
struct TxBatch {
    std::vector<Eigen::MatrixXcd> grids;
};

TxBatch tx_forward(const TxParams& params, std::span<const BitGrid> bits);

struct NormalizedBatch {
    std::vector<Eigen::MatrixXcd> grids;
    double scale = 1.0;  ///< divisor sqrt(mean per-RE energy of the input batch)
};

/// Divides the whole batch by sqrt((1/(M N B)) sum_rows x^H W x) so the
/// average energy per RE over the batch is one.
NormalizedBatch batch_normalize(const TxBatch& batch, const Eigen::MatrixXd& w);

/// Conjugate cogradients dL/d(conj x), one grid per batch item.
struct BatchCograd {
    std::vector<Eigen::MatrixXcd> grids;
};

struct LossValue {
    double value = 0.0;
    BatchCograd grad;  ///< w.r.t. the normalized batch entries
};

/// Riemann-sum hinge loss (1/(B~ N O_s)) sum (|z_t|^2 - gamma)^+ over all
/// oversampled symbols of the batch (B~ = batch * M vectors; T treated as 1).
LossValue loss_papr(const NormalizedBatch& batch, double gamma_peak, const IdftOperator& idft);

/// (sum x^H W x)/(sum x^H V x) - 1 - beta_leak over all symbol vectors.
LossValue loss_aclr(const NormalizedBatch& batch, double beta_leak,
                    const SpectralOperators& ops);

/// Chains a cogradient w.r.t. the normalized batch through the normalization.
BatchCograd normalize_backward(const BatchCograd& g_norm, const TxBatch& pre,
                               const NormalizedBatch& normed, const Eigen::MatrixXd& w);

/// Accumulates a pre-normalization cogradient onto the packed parameter
/// vector layout of TxParams.
Eigen::VectorXd tx_backward(const BatchCograd& g_pre, const TxParams& params,
                            std::span<const BitGrid> bits);

/// normalize_backward + tx_backward.
Eigen::VectorXd chain_to_params(const BatchCograd& g_norm, const TxBatch& pre,
                                const NormalizedBatch& normed, const Eigen::MatrixXd& w,
                                const TxParams& params, std::span<const BitGrid> bits);

// ---- constrained training --------------------------------------------------

struct TrainConfig {
    double gamma_peak = 4.0;  ///< linear PAPR target on |z|^2
    double beta_leak = 0.03;  ///< linear ACLR target
    int batch_size = 128;
    int sgd_steps = 8;
    double learning_rate = 0.05;
    int lr_decay_start = 25;  ///< constant step until here, then ~1/u decay
    int outer_iterations = 50;
    double tau = 0.05;
    double snr_db = 10.0;
    double fd_step = 1e-4;  ///< central-difference step for the rate gradient
    int covariance_draws = 5000;
    std::uint64_t seed = 1;
    int threads = 1;

    void validate() const;
};

struct TraceRow {
    int iter = 0;
    double l_c = 0.0, l_peak = 0.0, l_leak = 0.0;
    double lambda_p = 0.0, lambda_l = 0.0, mu_p = 0.0, mu_l = 0.0;
    double papr_db = 0.0, aclr_db = 0.0;
};

struct TrainResult {
    TxParams params;
    std::vector<TraceRow> trace;
    bool diverged = false;
    double final_rate = 0.0;  ///< K - L_C on the last evaluation batch
};

struct WaveformMetrics {
    double papr0_linear = 0.0, papr0_db = 0.0;
    double aclr_linear = 0.0, aclr_db = 0.0;
};

/// PAPR_0 and empirical ACLR of the normalized transmitter output on a
/// seeded random-bit batch (used to resolve relative targets).
WaveformMetrics measure_waveform_metrics(const TxParams& params, const GridConfig& config,
                                         const SpectralOperators& ops, std::uint64_t seed,
                                         int batch_size, int threads = 1);

/// Algorithm-1 outer loop over the fixed LMMSE/AWGN receiver chain:
/// sgd_steps of gradient descent on the augmented Lagrangian per iteration,
/// then the multiplier/penalty update, with per-iteration trace.
TrainResult run_training(const TrainConfig& cfg, const GridConfig& grid,
                         const TdlProfile& profile, int k);

struct ChainEvalResult {
    double l_c = 0.0;
    double rate = 0.0;  ///< K - L_C, bits per data RE
    double ber = 0.0;
};

/// One seeded Monte Carlo pass of a parameter set through the full
/// LMMSE/AWGN chain at the given SNR (used by eval-trained and the
/// unconstrained-baseline comparisons).
ChainEvalResult evaluate_chain(const TxParams& params, const TrainConfig& cfg,
                               const GridConfig& grid, const TdlProfile& profile,
                               double snr_db, std::uint64_t eval_seed);

}  // namespace ofdmwave

#endif
