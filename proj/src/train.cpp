// SPDX-License-Identifier: Apache-2.0
#include "ofdmwave/train.hpp"

#include <cmath>

#include "ofdmwave/papr.hpp"

namespace ofdmwave {

namespace {
// seed-path tags for the independent random streams
constexpr std::uint64_t kStreamSgd = 1;
constexpr std::uint64_t kStreamEval = 2;
constexpr std::uint64_t kStreamCovariance = 3;
constexpr std::uint64_t kStreamMetrics = 4;
}  // namespace

int TxParams::bits_per_symbol() const {
    int k = 0;
    while ((std::size_t{1} << k) < constellation.size()) ++k;
    if ((std::size_t{1} << k) != constellation.size())
        throw DimensionError("TxParams: constellation size must be a power of two");
    return k;
}

Eigen::VectorXd TxParams::pack() const {
    const auto cs = static_cast<Eigen::Index>(constellation.size());
    const Eigen::Index gs = gains.size();
    Eigen::VectorXd theta(2 * cs + 2 * gs);
    for (Eigen::Index i = 0; i < cs; ++i) {
        theta[2 * i] = constellation[i].real();
        theta[2 * i + 1] = constellation[i].imag();
    }
    for (Eigen::Index i = 0; i < gs; ++i) {
        theta[2 * cs + 2 * i] = gains[i].real();
        theta[2 * cs + 2 * i + 1] = gains[i].imag();
    }
    return theta;
}

TxParams TxParams::unpack(const Eigen::VectorXd& theta, int k, int n) {
    const Eigen::Index cs = Eigen::Index{1} << k;
    if (theta.size() != 2 * cs + 2 * n)
        throw DimensionError("TxParams::unpack: parameter vector length mismatch");
    TxParams p;
    p.constellation.resize(cs);
    p.gains.resize(n);
    for (Eigen::Index i = 0; i < cs; ++i)
        p.constellation[i] = cplx{theta[2 * i], theta[2 * i + 1]};
    for (Eigen::Index i = 0; i < n; ++i)
        p.gains[i] = cplx{theta[2 * cs + 2 * i], theta[2 * cs + 2 * i + 1]};
    return p;
}

TxParams TxParams::qam_init(int k, int n) {
    TxParams p;
    p.constellation = QamConstellation::square_qam(k).points;
    p.gains = Eigen::VectorXcd::Ones(n);
    return p;
}

double augmented_lagrangian(double l_c, double l_peak, double l_leak,
                            const LagrangianState& state) {
    if (!(state.mu_p > 0.0) || !(state.mu_l > 0.0))
        throw ConfigError("augmented_lagrangian: penalty parameters must be > 0");
    const double hinge = std::max(0.0, state.lambda_l + state.mu_l * l_leak);
    return l_c + state.lambda_p * l_peak + 0.5 * state.mu_p * l_peak * l_peak +
           (hinge * hinge - state.lambda_l * state.lambda_l) / (2.0 * state.mu_l);
}

LagrangianState update_hyperparameters(const LagrangianState& state, double l_peak,
                                       double l_leak) {
    if (!(state.mu_p > 0.0) || !(state.mu_l > 0.0))
        throw ConfigError("update_hyperparameters: penalty parameters must be > 0");
    LagrangianState next = state;
    next.lambda_p = state.lambda_p + state.mu_p * l_peak;
    next.lambda_l = std::max(0.0, state.lambda_l + state.mu_l * l_leak);
    next.mu_p = (1.0 + state.tau) * state.mu_p;
    next.mu_l = (1.0 + state.tau) * state.mu_l;
    next.iteration = state.iteration + 1;
    return next;
}

TxBatch tx_forward(const TxParams& params, std::span<const BitGrid> bits) {
    const int k = params.bits_per_symbol();
    const auto n = static_cast<int>(params.gains.size());
    TxBatch out;
    out.grids.resize(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        const BitGrid& b = bits[i];
        if (b.k != k || b.n != n)
            throw DimensionError("tx_forward: bit grid shape does not match parameters");
        Eigen::MatrixXcd& g = out.grids[i];
        g.resize(b.m, b.n);
        for (int m = 0; m < b.m; ++m) {
            for (int nn = 0; nn < b.n; ++nn) {
                std::uint32_t label = 0;
                for (int kk = 0; kk < k; ++kk) label = (label << 1) | b.at(m, nn, kk);
                g(m, nn) = params.gains[nn] * params.constellation[label];
            }
        }
    }
    return out;
}

namespace {

double mean_re_energy(const std::vector<Eigen::MatrixXcd>& grids, const Eigen::MatrixXd& w) {
    std::size_t rows_total = 0;
    for (const auto& g : grids) rows_total += static_cast<std::size_t>(g.rows());
    std::vector<double> row_energy;
    row_energy.reserve(rows_total);
    std::size_t entries = 0;
    for (const auto& g : grids) {
        entries += static_cast<std::size_t>(g.size());
        for (Eigen::Index m = 0; m < g.rows(); ++m) {
            const Eigen::VectorXcd x = g.row(m).transpose();
            row_energy.push_back((x.adjoint() * (w * x)).real()(0));
        }
    }
    return pairwise_sum(row_energy) / static_cast<double>(entries);
}

}  // namespace

NormalizedBatch batch_normalize(const TxBatch& batch, const Eigen::MatrixXd& w) {
    if (batch.grids.empty()) throw DimensionError("batch_normalize: empty batch");
    const double q = mean_re_energy(batch.grids, w);
    if (!(q > 0.0)) throw NumericalError("batch_normalize: zero-energy batch");
    NormalizedBatch out;
    out.scale = std::sqrt(q);
    out.grids.reserve(batch.grids.size());
    for (const auto& g : batch.grids) out.grids.push_back(g / out.scale);
    return out;
}

LossValue loss_papr(const NormalizedBatch& batch, double gamma_peak, const IdftOperator& idft) {
    if (batch.grids.empty()) throw DimensionError("loss_papr: empty batch");
    const Eigen::MatrixXcd a = idft.scaled_matrix(SamplingConvention::UnitMeanPower);
    const Eigen::MatrixXcd ah = a.adjoint();
    std::size_t vectors = 0;
    for (const auto& g : batch.grids) vectors += static_cast<std::size_t>(g.rows());
    const double norm = 1.0 / (static_cast<double>(vectors) * a.rows());

    LossValue out;
    out.grad.grids.resize(batch.grids.size());
    std::vector<double> partial(vectors);
    std::size_t row_id = 0;
    for (std::size_t i = 0; i < batch.grids.size(); ++i) {
        const auto& g = batch.grids[i];
        out.grad.grids[i].setZero(g.rows(), g.cols());
        for (Eigen::Index m = 0; m < g.rows(); ++m, ++row_id) {
            const Eigen::VectorXcd z = a * g.row(m).transpose();
            Eigen::VectorXcd masked = Eigen::VectorXcd::Zero(z.size());
            double acc = 0.0;
            for (Eigen::Index t = 0; t < z.size(); ++t) {
                const double excess = std::norm(z[t]) - gamma_peak;
                if (excess > 0.0) {
                    acc += excess;
                    masked[t] = z[t];
                }
            }
            partial[row_id] = acc;
            out.grad.grids[i].row(m) = (norm * (ah * masked)).transpose();
        }
    }
    out.value = pairwise_sum(partial) * norm;
    return out;
}

LossValue loss_aclr(const NormalizedBatch& batch, double beta_leak,
                    const SpectralOperators& ops) {
    if (batch.grids.empty()) throw DimensionError("loss_aclr: empty batch");
    std::size_t vectors = 0;
    for (const auto& g : batch.grids) vectors += static_cast<std::size_t>(g.rows());
    std::vector<double> num(vectors), den(vectors);
    std::size_t row_id = 0;
    for (const auto& g : batch.grids) {
        for (Eigen::Index m = 0; m < g.rows(); ++m, ++row_id) {
            const Eigen::VectorXcd x = g.row(m).transpose();
            num[row_id] = (x.adjoint() * (ops.w * x)).real()(0);
            den[row_id] = (x.adjoint() * (ops.v * x)).real()(0);
        }
    }
    const double p = pairwise_sum(num);
    const double q = pairwise_sum(den);
    if (!(q > 0.0)) throw NumericalError("loss_aclr: zero in-band energy");

    LossValue out;
    out.value = p / q - 1.0 - beta_leak;
    out.grad.grids.resize(batch.grids.size());
    const double inv_q = 1.0 / q;
    const double p_over_q2 = p / (q * q);
    for (std::size_t i = 0; i < batch.grids.size(); ++i) {
        const auto& g = batch.grids[i];
        out.grad.grids[i].resize(g.rows(), g.cols());
        for (Eigen::Index m = 0; m < g.rows(); ++m) {
            const Eigen::VectorXcd x = g.row(m).transpose();
            out.grad.grids[i].row(m) =
                (inv_q * (ops.w * x) - p_over_q2 * (ops.v * x)).transpose();
        }
    }
    return out;
}

BatchCograd normalize_backward(const BatchCograd& g_norm, const TxBatch& pre,
                               const NormalizedBatch& normed, const Eigen::MatrixXd& w) {
    if (g_norm.grids.size() != pre.grids.size())
        throw DimensionError("normalize_backward: batch size mismatch");
    const double s = normed.scale;
    std::size_t entries = 0;
    std::vector<double> rho_parts;
    for (std::size_t i = 0; i < g_norm.grids.size(); ++i) {
        entries += static_cast<std::size_t>(pre.grids[i].size());
        // rho = 2 Re sum G~ conj(x_pre) accumulated per grid
        rho_parts.push_back(
            2.0 * g_norm.grids[i].cwiseProduct(pre.grids[i].conjugate()).sum().real());
    }
    const double rho = pairwise_sum(rho_parts);
    const double coef = rho / (2.0 * s * s * s * static_cast<double>(entries));

    BatchCograd out;
    out.grids.resize(g_norm.grids.size());
    for (std::size_t i = 0; i < g_norm.grids.size(); ++i) {
        const auto& gp = pre.grids[i];
        out.grids[i].resize(gp.rows(), gp.cols());
        for (Eigen::Index m = 0; m < gp.rows(); ++m) {
            const Eigen::VectorXcd wx = w * gp.row(m).transpose();
            out.grids[i].row(m) = g_norm.grids[i].row(m) / s - coef * wx.transpose();
        }
    }
    return out;
}

Eigen::VectorXd tx_backward(const BatchCograd& g_pre, const TxParams& params,
                            std::span<const BitGrid> bits) {
    if (g_pre.grids.size() != bits.size())
        throw DimensionError("tx_backward: batch size mismatch");
    const int k = params.bits_per_symbol();
    const auto cs = static_cast<Eigen::Index>(params.constellation.size());
    const Eigen::Index gs = params.gains.size();
    Eigen::VectorXcd g_const = Eigen::VectorXcd::Zero(cs);
    Eigen::VectorXcd g_gain = Eigen::VectorXcd::Zero(gs);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        const BitGrid& b = bits[i];
        for (int m = 0; m < b.m; ++m) {
            for (int nn = 0; nn < b.n; ++nn) {
                std::uint32_t label = 0;
                for (int kk = 0; kk < k; ++kk) label = (label << 1) | b.at(m, nn, kk);
                const cplx g = g_pre.grids[i](m, nn);
                g_gain[nn] += g * std::conj(params.constellation[label]);
                g_const[label] += g * std::conj(params.gains[nn]);
            }
        }
    }
    Eigen::VectorXd grad(2 * cs + 2 * gs);
    for (Eigen::Index i = 0; i < cs; ++i) {
        grad[2 * i] = 2.0 * g_const[i].real();
        grad[2 * i + 1] = 2.0 * g_const[i].imag();
    }
    for (Eigen::Index i = 0; i < gs; ++i) {
        grad[2 * cs + 2 * i] = 2.0 * g_gain[i].real();
        grad[2 * cs + 2 * i + 1] = 2.0 * g_gain[i].imag();
    }
    return grad;
}

Eigen::VectorXd chain_to_params(const BatchCograd& g_norm, const TxBatch& pre,
                                const NormalizedBatch& normed, const Eigen::MatrixXd& w,
                                const TxParams& params, std::span<const BitGrid> bits) {
    const BatchCograd g_pre = normalize_backward(g_norm, pre, normed, w);
    return tx_backward(g_pre, params, bits);
}

void TrainConfig::validate() const {
    if (!(gamma_peak >= 1.0)) throw ConfigError("train.gamma_peak must be >= 1 (linear)");
    if (!(beta_leak > 0.0)) throw ConfigError("train.beta_leak must be > 0 (linear)");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (sgd_steps < 1) throw ConfigError("train.sgd_steps must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
    if (outer_iterations < 1) throw ConfigError("train.outer_iterations must be >= 1");
    if (!(tau > 0.0)) throw ConfigError("train.tau must be > 0");
    if (!(fd_step > 0.0)) throw ConfigError("train.fd_step must be > 0");
    if (covariance_draws < 1) throw ConfigError("train.covariance_draws must be >= 1");
}

namespace {

struct SlotRandoms {
    BitGrid bits;
    Eigen::VectorXcd pilot_values;   // unit circle, (N+1)/2
    Eigen::VectorXcd h_row;          // channel frequency response
    Eigen::MatrixXcd noise;          // CN(0,1) per RE, scaled by sigma at use
    Eigen::VectorXcd h_hat_row;      // precomputed LMMSE+interp estimate
};

struct ChainEnv {
    GridConfig grid;
    TdlProfile profile;
    int k = 0;
    double noise_var = 0.0;
    Eigen::MatrixXcd sigma_cov;
    std::vector<int> pilots;
    Eigen::MatrixXd w;  // identity, kept explicit for the quadratic forms
};

SlotRandoms draw_slot(const ChainEnv& env, std::uint64_t stream_seed) {
    RngStream rng(stream_seed);
    SlotRandoms s;
    s.bits = BitGrid(env.grid.m, env.grid.n, env.k);
    for (auto& b : s.bits.values) b = static_cast<std::uint8_t>(rng.next_u64() & 1);
    s.pilot_values.resize(static_cast<Eigen::Index>(env.pilots.size()));
    for (Eigen::Index i = 0; i < s.pilot_values.size(); ++i) s.pilot_values[i] = rng.unit_circle();
    s.h_row = generate_channel_row(env.profile, env.grid, rng);
    s.noise.resize(env.grid.m, env.grid.n);
    for (Eigen::Index m = 0; m < s.noise.rows(); ++m)
        for (Eigen::Index n = 0; n < s.noise.cols(); ++n) s.noise(m, n) = rng.cnormal(1.0);
    return s;
}

// The channel estimate does not depend on the transmitter parameters (pilots
// are a fixed unit-circle overlay), so it is computed once per drawn slot.
void precompute_channel_estimate(const ChainEnv& env, SlotRandoms& s) {
    const double root_nv = std::sqrt(env.noise_var);
    Eigen::VectorXcd p(static_cast<Eigen::Index>(env.pilots.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const int pos = env.pilots[i];
        const cplx y = s.h_row[pos] * s.pilot_values[i] + root_nv * s.noise(kPilotSymbol, pos);
        p[i] = y * std::conj(s.pilot_values[i]);
    }
    const auto est = lmmse_estimate(p, env.sigma_cov, env.noise_var);
    s.h_hat_row = interpolate_full_band(est.h, env.grid.n, env.pilots);
}

// L_C of one batch at fixed randomness, normalized per data-carrying RE
// (pilot REs transmit no bits). Demaps against the per-subcarrier transmit
// alphabet (gains_n / scale) * constellation known at the receiver.
double rate_eval(const TxParams& params, const ChainEnv& env, std::span<const BitGrid> bits,
                 std::span<const SlotRandoms> slots, int threads,
                 double* bit_error_rate = nullptr) {
    const TxBatch pre = tx_forward(params, bits);
    const NormalizedBatch normed = batch_normalize(pre, env.w);
    const double root_nv = std::sqrt(env.noise_var);
    const auto points = static_cast<int>(params.constellation.size());

    // per-subcarrier receive alphabets
    Eigen::MatrixXcd alphabet(points, env.grid.n);
    for (int n = 0; n < env.grid.n; ++n) {
        const cplx g = params.gains[n] / normed.scale;
        for (int c = 0; c < points; ++c) alphabet(c, n) = g * params.constellation[c];
    }

    std::vector<double> item_sum(slots.size());
    std::vector<long long> item_errors(slots.size(), 0);
    parallel_for(slots.size(), threads, [&](std::size_t i) {
        const SlotRandoms& s = slots[i];
        Eigen::MatrixXcd x_tx = normed.grids[i];
        for (Eigen::Index j = 0; j < s.pilot_values.size(); ++j)
            x_tx(kPilotSymbol, env.pilots[j]) = s.pilot_values[j];

        std::vector<double> llr(env.k);
        std::vector<double> terms;
        terms.reserve(static_cast<std::size_t>(env.grid.m) * env.grid.n * env.k);
        long long errors = 0;
        for (int m = 0; m < env.grid.m; ++m) {
            for (int n = 0; n < env.grid.n; ++n) {
                if (m == kPilotSymbol && (n % 2) == 0) continue;  // pilot RE, no bits
                const cplx y = s.h_row[n] * x_tx(m, n) + root_nv * s.noise(m, n);
                const cplx h_hat = s.h_hat_row[n];
                if (std::abs(h_hat) < 1e-12) {
                    // erasure: zero LLRs cost one bit each
                    for (int kk = 0; kk < env.k; ++kk) terms.push_back(1.0);
                    continue;
                }
                const cplx x_hat = y / h_hat;
                demap_llr_points(x_hat, h_hat, env.noise_var,
                                 std::span<const cplx>(alphabet.col(n).data(), points), env.k,
                                 llr);
                for (int kk = 0; kk < env.k; ++kk) {
                    terms.push_back(bce_bits_term(llr[kk], s.bits.at(m, n, kk)));
                    if ((llr[kk] > 0.0 ? 1 : 0) != s.bits.at(m, n, kk)) ++errors;
                }
            }
        }
        item_sum[i] = pairwise_sum(terms);
        item_errors[i] = errors;
    });
    const std::size_t data_res = static_cast<std::size_t>(env.grid.m) * env.grid.n -
                                 env.pilots.size();
    const double denom = static_cast<double>(data_res) * static_cast<double>(slots.size());
    if (bit_error_rate) {
        long long total = 0;
        for (long long e : item_errors) total += e;
        *bit_error_rate = static_cast<double>(total) / (denom * env.k);
    }
    return pairwise_sum(item_sum) / denom;
}

ChainEnv make_env(const TrainConfig& cfg, const GridConfig& grid, const TdlProfile& profile,
                  int k) {
    ChainEnv env;
    env.grid = grid;
    env.profile = profile;
    env.k = k;
    env.noise_var = from_db(-cfg.snr_db);
    env.pilots = pilot_positions(grid.n);
    env.w = compute_w(grid.n);

    std::vector<Eigen::VectorXcd> rows(cfg.covariance_draws);
    for (int d = 0; d < cfg.covariance_draws; ++d) {
        RngStream rng(derive_seed(cfg.seed, {kStreamCovariance, static_cast<std::uint64_t>(d)}));
        rows[d] = generate_channel_row(profile, grid, rng);
    }
    env.sigma_cov = estimate_pilot_covariance(rows, env.pilots).sigma;
    return env;
}

struct EvalBatch {
    std::vector<BitGrid> bits;
    std::vector<SlotRandoms> slots;
};

EvalBatch draw_batch(const ChainEnv& env, const TrainConfig& cfg, std::uint64_t tag,
                     std::uint64_t outer, std::uint64_t step) {
    EvalBatch b;
    b.slots.resize(cfg.batch_size);
    b.bits.resize(cfg.batch_size);
    for (int i = 0; i < cfg.batch_size; ++i) {
        b.slots[i] =
            draw_slot(env, derive_seed(cfg.seed, {tag, outer, step, static_cast<std::uint64_t>(i)}));
        precompute_channel_estimate(env, b.slots[i]);
        b.bits[i] = b.slots[i].bits;
    }
    return b;
}

}  // namespace

WaveformMetrics measure_waveform_metrics(const TxParams& params, const GridConfig& config,
                                         const SpectralOperators& ops, std::uint64_t seed,
                                         int batch_size, int threads) {
    const int k = params.bits_per_symbol();
    std::vector<BitGrid> bits(batch_size);
    for (int i = 0; i < batch_size; ++i) {
        RngStream rng(derive_seed(seed, {kStreamMetrics, static_cast<std::uint64_t>(i)}));
        bits[i] = BitGrid(config.m, config.n, k);
        for (auto& b : bits[i].values) b = static_cast<std::uint8_t>(rng.next_u64() & 1);
    }
    const TxBatch pre = tx_forward(params, bits);
    const NormalizedBatch normed = batch_normalize(pre, compute_w(config.n));
    std::vector<Eigen::VectorXcd> rows;
    rows.reserve(static_cast<std::size_t>(batch_size) * config.m);
    for (const auto& g : normed.grids)
        for (Eigen::Index m = 0; m < g.rows(); ++m) rows.push_back(g.row(m).transpose());

    WaveformMetrics out;
    const auto alpha = collect_alpha(rows, config.oversampling, threads);
    out.papr0_linear = papr_epsilon(alpha, 0.0).linear;
    out.papr0_db = to_db(out.papr0_linear);
    out.aclr_linear = aclr_empirical(rows, ops);
    out.aclr_db = to_db(out.aclr_linear);
    return out;
}

TrainResult run_training(const TrainConfig& cfg, const GridConfig& grid,
                         const TdlProfile& profile, int k) {
    cfg.validate();
    grid.validate();
    if (grid.oversampling < 4)
        throw ConfigError("run_training: oversampling must be >= 4 for the PAPR loss");

    const ChainEnv env = make_env(cfg, grid, profile, k);
    const SpectralOperators ops =
        make_spectral_operators(grid.n, grid.t_cp_fraction, 1e-9, "", cfg.threads);
    const IdftOperator idft(grid.n, grid.oversampling);

    TrainResult result;
    TxParams params = TxParams::qam_init(k, grid.n);
    Eigen::VectorXd theta = params.pack();
    const int dim = static_cast<int>(theta.size());
    LagrangianState state;
    state.tau = cfg.tau;

    const auto lr_for = [&](int u) {
        if (u < cfg.lr_decay_start) return cfg.learning_rate;
        return cfg.learning_rate * static_cast<double>(cfg.lr_decay_start) /
               static_cast<double>(u + 1);
    };

    for (int u = 0; u < cfg.outer_iterations; ++u) {
        for (int step = 0; step < cfg.sgd_steps; ++step) {
            const EvalBatch batch = draw_batch(env, cfg, kStreamSgd, u, step);
            params = TxParams::unpack(theta, k, grid.n);

            const TxBatch pre = tx_forward(params, batch.bits);
            const NormalizedBatch normed = batch_normalize(pre, env.w);
            const LossValue lp = loss_papr(normed, cfg.gamma_peak, idft);
            const LossValue ll = loss_aclr(normed, cfg.beta_leak, ops);
            const Eigen::VectorXd gp =
                chain_to_params(lp.grad, pre, normed, env.w, params, batch.bits);
            const Eigen::VectorXd gl =
                chain_to_params(ll.grad, pre, normed, env.w, params, batch.bits);

            // rate gradient by central differences with common random numbers
            const double l_c = rate_eval(params, env, batch.bits, batch.slots, cfg.threads);
            Eigen::VectorXd gc(dim);
            for (int j = 0; j < dim; ++j) {
                Eigen::VectorXd tp = theta, tm = theta;
                tp[j] += cfg.fd_step;
                tm[j] -= cfg.fd_step;
                const double fp = rate_eval(TxParams::unpack(tp, k, grid.n), env, batch.bits,
                                            batch.slots, cfg.threads);
                const double fm = rate_eval(TxParams::unpack(tm, k, grid.n), env, batch.bits,
                                            batch.slots, cfg.threads);
                gc[j] = (fp - fm) / (2.0 * cfg.fd_step);
            }

            const double lbar = augmented_lagrangian(l_c, lp.value, ll.value, state);
            if (!std::isfinite(lbar)) {
                result.diverged = true;
                result.params = params;
                return result;
            }
            const double leak_mult = std::max(0.0, state.lambda_l + state.mu_l * ll.value);
            const Eigen::VectorXd grad =
                gc + (state.lambda_p + state.mu_p * lp.value) * gp + leak_mult * gl;
            theta -= lr_for(u) * grad;
        }

        // evaluation batch drives the multiplier update and the trace
        params = TxParams::unpack(theta, k, grid.n);
        const EvalBatch eval = draw_batch(env, cfg, kStreamEval, u, 0);
        const TxBatch pre = tx_forward(params, eval.bits);
        const NormalizedBatch normed = batch_normalize(pre, env.w);
        const LossValue lp = loss_papr(normed, cfg.gamma_peak, idft);
        const LossValue ll = loss_aclr(normed, cfg.beta_leak, ops);
        const double l_c = rate_eval(params, env, eval.bits, eval.slots, cfg.threads);

        std::vector<Eigen::VectorXcd> rows;
        rows.reserve(normed.grids.size() * grid.m);
        for (const auto& g : normed.grids)
            for (Eigen::Index m = 0; m < g.rows(); ++m) rows.push_back(g.row(m).transpose());
        const auto alpha = collect_alpha(rows, grid.oversampling, cfg.threads);

        TraceRow row;
        row.iter = u;
        row.l_c = l_c;
        row.l_peak = lp.value;
        row.l_leak = ll.value;
        row.lambda_p = state.lambda_p;
        row.lambda_l = state.lambda_l;
        row.mu_p = state.mu_p;
        row.mu_l = state.mu_l;
        row.papr_db = to_db(papr_epsilon(alpha, 0.0).linear);
        row.aclr_db = to_db(aclr_empirical(rows, ops));
        result.trace.push_back(row);
        result.final_rate = k - l_c;

        if (!std::isfinite(lp.value) || !std::isfinite(ll.value) || !std::isfinite(l_c)) {
            result.diverged = true;
            result.params = params;
            return result;
        }
        state = update_hyperparameters(state, lp.value, ll.value);
    }
    result.params = TxParams::unpack(theta, k, grid.n);
    return result;
}

ChainEvalResult evaluate_chain(const TxParams& params, const TrainConfig& cfg,
                               const GridConfig& grid, const TdlProfile& profile,
                               double snr_db, std::uint64_t eval_seed) {
    TrainConfig local = cfg;
    local.snr_db = snr_db;
    const ChainEnv env = make_env(local, grid, profile, params.bits_per_symbol());
    std::vector<SlotRandoms> slots(local.batch_size);
    std::vector<BitGrid> bits(local.batch_size);
    for (int i = 0; i < local.batch_size; ++i) {
        slots[i] = draw_slot(env, derive_seed(eval_seed, {kStreamEval, 0, 0,
                                                          static_cast<std::uint64_t>(i)}));
        precompute_channel_estimate(env, slots[i]);
        bits[i] = slots[i].bits;
    }
    ChainEvalResult r;
    r.l_c = rate_eval(params, env, bits, slots, local.threads, &r.ber);
    r.rate = params.bits_per_symbol() - r.l_c;
    return r;
}

}  // namespace ofdmwave
