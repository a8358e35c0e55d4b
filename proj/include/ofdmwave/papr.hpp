// SPDX-License-Identifier: Apache-2.0
#ifndef OFDMWAVE_PAPR_HPP
#define OFDMWAVE_PAPR_HPP

#include <Eigen/Dense>
#include <span>
#include <utility>
#include <vector>

#include "ofdmwave/common.hpp"

namespace ofdmwave {

/// Instantaneous-to-average power ratios alpha = |s(t)|^2 / E[|s(t)|^2],
/// the expectation estimated over the whole batch.
struct PowerRatioSamples {
    std::vector<double> alphas;
    int source_oversampling = 0;
};

/// Minimum oversampling accepted for any PAPR statistic.
inline constexpr int kMinPaprOversampling = 4;

/// Oversamples every FBS vector (UnitMeanPower convention) and normalizes all
/// |z_t|^2 by the batch-average sample power.
PowerRatioSamples collect_alpha(std::span<const Eigen::VectorXcd> batch, int oversampling,
                                int threads = 1);

struct PaprValue {
    double linear = 0.0;
    double db = 0.0;
};

/// Smallest sample value e with empirical P(alpha > e) <= epsilon.
/// epsilon = 0 returns max(alpha).
PaprValue papr_epsilon(const PowerRatioSamples& samples, double epsilon);

/// Empirical CCDF points (threshold, P(alpha > threshold)); thresholds must
/// be ascending.
std::vector<std::pair<double, double>> ccdf(const PowerRatioSamples& samples,
                                            std::span<const double> thresholds);

}  // namespace ofdmwave

#endif
