// SPDX-License-Identifier: Apache-2.0
#ifndef OFDMWAVE_GRID_HPP
#define OFDMWAVE_GRID_HPP

#include <Eigen/Dense>
#include <vector>

#include "ofdmwave/common.hpp"
#include "ofdmwave/rng.hpp"

namespace ofdmwave {

/// One slot of OFDM numerology. N odd; T = 1/delta_f; T_cp = t_cp_fraction * T.
struct GridConfig {
    int n = 25;                  ///< subcarrier count, odd
    int m = 14;                  ///< OFDM symbols per slot
    double delta_f_hz = 15000.0; ///< subcarrier spacing
    double t_cp_fraction = 0.0;  ///< T_cp / T
    int oversampling = 4;

    double symbol_duration() const { return 1.0 / delta_f_hz; }
    double cp_duration() const { return t_cp_fraction * symbol_duration(); }
    double cp_delta_f() const { return 1.0 / (symbol_duration() + cp_duration()); }

    void validate() const;  // throws ConfigError
};

/// Ascending centered subcarrier indices {-(N-1)/2, ..., (N-1)/2}.
std::vector<int> build_index_set(int n);
std::vector<int> build_index_set(const GridConfig& config);

enum class ReRole : std::uint8_t { Data = 0, Pilot = 1, Prt = 2, Null = 3 };

using RoleMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// M x N frequency-time grid of frequency-baseband symbols with role labels.
struct ResourceGrid {
    Eigen::MatrixXcd values;  // M x N
    RoleMatrix roles;         // M x N, entries are ReRole

    ReRole role(int m, int n) const { return static_cast<ReRole>(roles(m, n)); }
    void set_role(int m, int n, ReRole r) { roles(m, n) = static_cast<std::uint8_t>(r); }
};

/// All-zero grid with every RE labeled Data.
ResourceGrid make_resource_grid(const GridConfig& config);

enum class SamplingConvention {
    PaperF,        ///< kappa = 1/(sqrt(N)*O_s); sum_t |z_t|^2 = ||x||^2 / O_s
    UnitMeanPower  ///< kappa = 1/sqrt(N); mean_t |z_t|^2 = ||x||^2 / N
};

/// One oversampled OFDM symbol, N*O_s samples.
struct SampledWaveform {
    Eigen::VectorXcd samples;
    double sample_period = 0.0;  // T / (N * O_s)
    SamplingConvention convention = SamplingConvention::UnitMeanPower;

    double peak_power() const;
    double mean_power() const;
};

/// Caches the N*O_s x N centered-index IDFT matrix for repeated synthesis.
/// z_t = kappa * sum_n x_n exp(j 2 pi t n / (N O_s)), n signed.
class IdftOperator {
public:
    IdftOperator(int n, int oversampling);

    SampledWaveform apply(const Eigen::VectorXcd& x, SamplingConvention conv,
                          double symbol_duration = 1.0) const;

    /// kappa-scaled synthesis matrix for the given convention.
    Eigen::MatrixXcd scaled_matrix(SamplingConvention conv) const;

    int n() const { return n_; }
    int oversampling() const { return oversampling_; }
    double scale(SamplingConvention conv) const;

private:
    int n_;
    int oversampling_;
    Eigen::MatrixXcd expo_;  // unscaled exponentials, (N*O_s) x N
};

/// One-shot convenience wrapper around IdftOperator.
SampledWaveform oversampled_idft(const Eigen::VectorXcd& x, int oversampling,
                                 SamplingConvention conv, double symbol_duration = 1.0);

/// s(t) of the m=0 symbol: sum_n x_n (1/sqrt(T)) e^{j 2 pi n t / T} on
/// [-T/2, T/2], zero outside the rect support.
cplx evaluate_time_signal(const Eigen::VectorXcd& x, double t_seconds, const GridConfig& config);

/// S^CP(f) = sum_n x_n (1/sqrt(df_cp)) sinc((f - n*df)/df_cp).
cplx evaluate_cp_spectrum(const Eigen::VectorXcd& x, double f_hz, const GridConfig& config);

/// Ascending positions (0-based, in index-set order) carrying pilots:
/// every second RE starting at the first, (N+1)/2 of them.
std::vector<int> pilot_positions(int n);

/// Zero-based index of the pilot-carrying OFDM symbol.
inline constexpr int kPilotSymbol = 1;

/// Places unit-circle pilots on the pilot symbol. Layout depends only on
/// (N, M); only the pilot values consume randomness.
ResourceGrid insert_pilots(const ResourceGrid& grid, const GridConfig& config, RngStream& rng);

}  // namespace ofdmwave

#endif
