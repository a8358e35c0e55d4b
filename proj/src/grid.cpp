// SPDX-License-Identifier: Apache-2.0
#include "ofdmwave/grid.hpp"

namespace ofdmwave {

void GridConfig::validate() const {
    if (n < 1 || n % 2 == 0)
        throw ConfigError("grid.n must be an odd positive subcarrier count, got " +
                          std::to_string(n));
    if (m < 1) throw ConfigError("grid.m must be >= 1");
    if (!(delta_f_hz > 0.0)) throw ConfigError("grid.delta_f_hz must be > 0");
    if (t_cp_fraction < 0.0 || t_cp_fraction >= 1.0)
        throw ConfigError("grid.t_cp_fraction must be in [0, 1)");
    if (oversampling < 1) throw ConfigError("grid.oversampling must be >= 1");
}

std::vector<int> build_index_set(int n) {
    if (n < 1 || n % 2 == 0)
        throw ConfigError("subcarrier count must be odd and positive, got " + std::to_string(n));
    std::vector<int> idx(n);
    const int half = (n - 1) / 2;
    for (int i = 0; i < n; ++i) idx[i] = i - half;
    return idx;
}

std::vector<int> build_index_set(const GridConfig& config) {
    config.validate();
    return build_index_set(config.n);
}

ResourceGrid make_resource_grid(const GridConfig& config) {
    config.validate();
    ResourceGrid g;
    g.values = Eigen::MatrixXcd::Zero(config.m, config.n);
    g.roles = RoleMatrix::Constant(config.m, config.n, static_cast<std::uint8_t>(ReRole::Data));
    return g;
}

double SampledWaveform::peak_power() const {
    double peak = 0.0;
    for (Eigen::Index i = 0; i < samples.size(); ++i)
        peak = std::max(peak, std::norm(samples[i]));
    return peak;
}

double SampledWaveform::mean_power() const {
    if (samples.size() == 0) return 0.0;
    std::vector<double> p(samples.size());
    for (Eigen::Index i = 0; i < samples.size(); ++i) p[i] = std::norm(samples[i]);
    return pairwise_sum(p) / static_cast<double>(samples.size());
}

IdftOperator::IdftOperator(int n, int oversampling) : n_(n), oversampling_(oversampling) {
    if (n < 1 || n % 2 == 0) throw ConfigError("IdftOperator: n must be odd and positive");
    if (oversampling < 1) throw ConfigError("IdftOperator: oversampling must be >= 1");
    const auto idx = build_index_set(n);
    const int total = n * oversampling;
    expo_.resize(total, n);
    for (int t = 0; t < total; ++t) {
        for (int i = 0; i < n; ++i) {
            const double phase = 2.0 * kPi * static_cast<double>(t) * idx[i] / total;
            expo_(t, i) = cplx{std::cos(phase), std::sin(phase)};
        }
    }
}

double IdftOperator::scale(SamplingConvention conv) const {
    const double root_n = std::sqrt(static_cast<double>(n_));
    return conv == SamplingConvention::PaperF ? 1.0 / (root_n * oversampling_) : 1.0 / root_n;
}

SampledWaveform IdftOperator::apply(const Eigen::VectorXcd& x, SamplingConvention conv,
                                    double symbol_duration) const {
    if (x.size() != n_)
        throw DimensionError("IdftOperator: FBS vector length " + std::to_string(x.size()) +
                             " does not match n=" + std::to_string(n_));
    SampledWaveform w;
    w.samples = scale(conv) * (expo_ * x);
    w.sample_period = symbol_duration / static_cast<double>(n_ * oversampling_);
    w.convention = conv;
    return w;
}

Eigen::MatrixXcd IdftOperator::scaled_matrix(SamplingConvention conv) const {
    return scale(conv) * expo_;
}

SampledWaveform oversampled_idft(const Eigen::VectorXcd& x, int oversampling,
                                 SamplingConvention conv, double symbol_duration) {
    IdftOperator op(static_cast<int>(x.size()), oversampling);
    return op.apply(x, conv, symbol_duration);
}

cplx evaluate_time_signal(const Eigen::VectorXcd& x, double t_seconds, const GridConfig& config) {
    config.validate();
    if (x.size() != config.n) throw DimensionError("evaluate_time_signal: FBS length != n");
    const double T = config.symbol_duration();
    if (t_seconds < -T / 2.0 || t_seconds > T / 2.0) return {0.0, 0.0};
    const auto idx = build_index_set(config.n);
    cplx acc{0.0, 0.0};
    for (int i = 0; i < config.n; ++i) {
        const double phase = 2.0 * kPi * idx[i] * t_seconds / T;
        acc += x[i] * cplx{std::cos(phase), std::sin(phase)};
    }
    return acc / std::sqrt(T);
}

cplx evaluate_cp_spectrum(const Eigen::VectorXcd& x, double f_hz, const GridConfig& config) {
    config.validate();
    if (x.size() != config.n) throw DimensionError("evaluate_cp_spectrum: FBS length != n");
    const double df = config.delta_f_hz;
    const double df_cp = config.cp_delta_f();
    const auto idx = build_index_set(config.n);
    cplx acc{0.0, 0.0};
    for (int i = 0; i < config.n; ++i) acc += x[i] * sinc((f_hz - idx[i] * df) / df_cp);
    return acc / std::sqrt(df_cp);
}

std::vector<int> pilot_positions(int n) {
    std::vector<int> pos;
    pos.reserve((n + 1) / 2);
    for (int p = 0; p < n; p += 2) pos.push_back(p);
    return pos;
}

ResourceGrid insert_pilots(const ResourceGrid& grid, const GridConfig& config, RngStream& rng) {
    config.validate();
    if (grid.values.rows() != config.m || grid.values.cols() != config.n)
        throw DimensionError("insert_pilots: grid shape does not match config");
    if (config.m <= kPilotSymbol)
        throw ConfigError("insert_pilots: slot has no second OFDM symbol (m < 2)");
    ResourceGrid out = grid;
    for (int p : pilot_positions(config.n)) {
        out.values(kPilotSymbol, p) = rng.unit_circle();
        out.set_role(kPilotSymbol, p, ReRole::Pilot);
    }
    return out;
}

}  // namespace ofdmwave
