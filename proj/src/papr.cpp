// SPDX-License-Identifier: Apache-2.0
#include "ofdmwave/papr.hpp"

#include <algorithm>

#include "ofdmwave/grid.hpp"

namespace ofdmwave {

PowerRatioSamples collect_alpha(std::span<const Eigen::VectorXcd> batch, int oversampling,
                                int threads) {
    if (oversampling < kMinPaprOversampling)
        throw ConfigError("collect_alpha: oversampling must be >= " +
                          std::to_string(kMinPaprOversampling) + " for PAPR measurements");
    if (batch.empty()) throw DimensionError("collect_alpha: empty batch");
    const int n = static_cast<int>(batch[0].size());
    const IdftOperator idft(n, oversampling);
    const std::size_t per = static_cast<std::size_t>(n) * oversampling;

    PowerRatioSamples out;
    out.source_oversampling = oversampling;
    out.alphas.resize(batch.size() * per);
    parallel_for(batch.size(), threads, [&](std::size_t i) {
        if (batch[i].size() != n)
            throw DimensionError("collect_alpha: inconsistent FBS lengths in batch");
        const auto w = idft.apply(batch[i], SamplingConvention::UnitMeanPower);
        for (std::size_t t = 0; t < per; ++t)
            out.alphas[i * per + t] = std::norm(w.samples[static_cast<Eigen::Index>(t)]);
    });

    const double mean_power =
        pairwise_sum(out.alphas) / static_cast<double>(out.alphas.size());
    if (!(mean_power > 0.0)) throw NumericalError("collect_alpha: zero average power");
    for (double& a : out.alphas) a /= mean_power;
    return out;
}

PaprValue papr_epsilon(const PowerRatioSamples& samples, double epsilon) {
    if (samples.alphas.empty()) throw DimensionError("papr_epsilon: no samples");
    if (epsilon < 0.0 || epsilon >= 1.0) throw ConfigError("papr_epsilon: epsilon must be in [0, 1)");
    const std::size_t n = samples.alphas.size();
    // smallest sample value e with (count of alpha > e)/n <= epsilon:
    // ascending index n-1-floor(eps*n) satisfies the inequality and is minimal.
    const auto drop = static_cast<std::size_t>(std::floor(epsilon * static_cast<double>(n)));
    const std::size_t idx = n - 1 - std::min(drop, n - 1);
    std::vector<double> sorted = samples.alphas;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx),
                     sorted.end());
    PaprValue v;
    v.linear = sorted[idx];
    v.db = to_db(v.linear);
    return v;
}

std::vector<std::pair<double, double>> ccdf(const PowerRatioSamples& samples,
                                            std::span<const double> thresholds) {
    if (samples.alphas.empty()) throw DimensionError("ccdf: no samples");
    for (std::size_t i = 1; i < thresholds.size(); ++i)
        if (!(thresholds[i] > thresholds[i - 1]))
            throw ConfigError("ccdf: thresholds must be strictly ascending");
    std::vector<double> sorted = samples.alphas;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::vector<std::pair<double, double>> curve;
    curve.reserve(thresholds.size());
    for (double e : thresholds) {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), e);
        curve.emplace_back(e, static_cast<double>(sorted.end() - it) / n);
    }
    return curve;
}

}  // namespace ofdmwave
