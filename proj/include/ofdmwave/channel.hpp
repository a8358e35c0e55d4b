// SPDX-License-Identifier: Apache-2.0
#ifndef OFDMWAVE_CHANNEL_HPP
#define OFDMWAVE_CHANNEL_HPP

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "ofdmwave/grid.hpp"
#include "ofdmwave/rng.hpp"

namespace ofdmwave {

/// Exponential-power tapped-delay-line surrogate channel. Tap powers are
/// normalized to sum to one; tap delays are uniform in
/// [0, delay_spread_fraction * T].
struct TdlProfile {
    int num_taps = 8;
    double delay_spread_fraction = 0.05;
    double power_decay = 1.0;

    void validate() const;
    std::vector<double> tap_powers() const;
};

/// Frequency response of one slot; constant over the slot, so all M rows of
/// h are identical.
struct ChannelRealization {
    Eigen::MatrixXcd h;  // M x N
};

/// One frequency-domain channel row h_n = sum_l g_l exp(-j 2 pi n tau_l / T).
Eigen::VectorXcd generate_channel_row(const TdlProfile& profile, const GridConfig& config,
                                      RngStream& rng);

ChannelRealization generate_channel(const TdlProfile& profile, const GridConfig& config,
                                    RngStream& rng);

/// Y = H .* X + noise, each RE carrying CN(0, noise_var).
Eigen::MatrixXcd apply_channel(const Eigen::MatrixXcd& x, const ChannelRealization& channel,
                               double noise_var, RngStream& rng);

struct PilotCovariance {
    Eigen::MatrixXcd sigma;
    bool small_dataset_warning = false;  // set when draws < 10 * pilot count
};

/// Sample covariance of clean channel values at the pilot subcarriers,
/// Hermitian bitwise by construction.
PilotCovariance estimate_pilot_covariance(std::span<const Eigen::VectorXcd> rows,
                                          std::span<const int> positions);

/// CHNL binary dataset: header {magic "CHNL", version, N, count} then `count`
/// rows of N (re, im) doubles.
void write_channel_dataset(const std::string& path, std::span<const Eigen::VectorXcd> rows);
std::vector<Eigen::VectorXcd> read_channel_dataset(const std::string& path);

}  // namespace ofdmwave

#endif
