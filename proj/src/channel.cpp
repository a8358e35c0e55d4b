// SPDX-License-Identifier: Apache-2.0
#include "ofdmwave/channel.hpp"

#include <cstring>
#include <fstream>

namespace ofdmwave {

void TdlProfile::validate() const {
    if (num_taps < 1) throw ConfigError("channel.num_taps must be >= 1");
    if (delay_spread_fraction < 0.0 || delay_spread_fraction >= 1.0)
        throw ConfigError("channel.delay_spread_fraction must be in [0, 1)");
    if (power_decay < 0.0) throw ConfigError("channel.power_decay must be >= 0");
}

std::vector<double> TdlProfile::tap_powers() const {
    std::vector<double> p(num_taps);
    double sum = 0.0;
    for (int l = 0; l < num_taps; ++l) {
        p[l] = std::exp(-power_decay * l);
        sum += p[l];
    }
    for (double& v : p) v /= sum;
    return p;
}

Eigen::VectorXcd generate_channel_row(const TdlProfile& profile, const GridConfig& config,
                                      RngStream& rng) {
    profile.validate();
    config.validate();
    const auto powers = profile.tap_powers();
    std::vector<cplx> gains(profile.num_taps);
    std::vector<double> delays(profile.num_taps);  // normalized to T
    for (int l = 0; l < profile.num_taps; ++l) {
        gains[l] = rng.cnormal(powers[l]);
        delays[l] = profile.delay_spread_fraction * rng.uniform01();
    }
    const auto idx = build_index_set(config.n);
    Eigen::VectorXcd h(config.n);
    for (int i = 0; i < config.n; ++i) {
        cplx acc{0.0, 0.0};
        for (int l = 0; l < profile.num_taps; ++l) {
            const double phase = -2.0 * kPi * idx[i] * delays[l];
            acc += gains[l] * cplx{std::cos(phase), std::sin(phase)};
        }
        h[i] = acc;
    }
    return h;
}

ChannelRealization generate_channel(const TdlProfile& profile, const GridConfig& config,
                                    RngStream& rng) {
    const Eigen::VectorXcd row = generate_channel_row(profile, config, rng);
    ChannelRealization c;
    c.h = row.transpose().replicate(config.m, 1);
    return c;
}

Eigen::MatrixXcd apply_channel(const Eigen::MatrixXcd& x, const ChannelRealization& channel,
                               double noise_var, RngStream& rng) {
    if (x.rows() != channel.h.rows() || x.cols() != channel.h.cols())
        throw DimensionError("apply_channel: grid and channel shapes differ");
    Eigen::MatrixXcd y = channel.h.cwiseProduct(x);
    if (noise_var > 0.0) {
        for (Eigen::Index r = 0; r < y.rows(); ++r)
            for (Eigen::Index c = 0; c < y.cols(); ++c) y(r, c) += rng.cnormal(noise_var);
    }
    return y;
}

PilotCovariance estimate_pilot_covariance(std::span<const Eigen::VectorXcd> rows,
                                          std::span<const int> positions) {
    if (rows.empty()) throw DimensionError("estimate_pilot_covariance: empty dataset");
    const auto p = static_cast<Eigen::Index>(positions.size());
    PilotCovariance out;
    out.sigma = Eigen::MatrixXcd::Zero(p, p);
    Eigen::VectorXcd hp(p);
    for (const auto& row : rows) {
        for (Eigen::Index i = 0; i < p; ++i) {
            if (positions[i] < 0 || positions[i] >= row.size())
                throw DimensionError("estimate_pilot_covariance: pilot position out of range");
            hp[i] = row[positions[i]];
        }
        // accumulate the upper triangle only; the lower is mirrored afterwards
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = i; j < p; ++j) out.sigma(i, j) += hp[i] * std::conj(hp[j]);
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (Eigen::Index i = 0; i < p; ++i) {
        out.sigma(i, i) = cplx{out.sigma(i, i).real() * inv, 0.0};
        for (Eigen::Index j = i + 1; j < p; ++j) {
            out.sigma(i, j) *= inv;
            out.sigma(j, i) = std::conj(out.sigma(i, j));
        }
    }
    out.small_dataset_warning = rows.size() < 10 * positions.size();
    return out;
}

namespace {
constexpr char kChnlMagic[4] = {'C', 'H', 'N', 'L'};
constexpr std::uint32_t kChnlVersion = 1;
}  // namespace

void write_channel_dataset(const std::string& path, std::span<const Eigen::VectorXcd> rows) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    const std::uint32_t n = rows.empty() ? 0 : static_cast<std::uint32_t>(rows[0].size());
    const std::uint64_t count = rows.size();
    f.write(kChnlMagic, 4);
    f.write(reinterpret_cast<const char*>(&kChnlVersion), sizeof(kChnlVersion));
    f.write(reinterpret_cast<const char*>(&n), sizeof(n));
    f.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (const auto& row : rows) {
        if (row.size() != static_cast<Eigen::Index>(n))
            throw DimensionError("write_channel_dataset: inconsistent row lengths");
        f.write(reinterpret_cast<const char*>(row.data()), sizeof(cplx) * n);
    }
    if (!f) throw IoError("write failed: " + path);
}

std::vector<Eigen::VectorXcd> read_channel_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    char magic[4];
    std::uint32_t version = 0, n = 0;
    std::uint64_t count = 0;
    f.read(magic, 4);
    f.read(reinterpret_cast<char*>(&version), sizeof(version));
    f.read(reinterpret_cast<char*>(&n), sizeof(n));
    f.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!f || std::memcmp(magic, kChnlMagic, 4) != 0)
        throw IoError("not a CHNL file: " + path);
    if (version != kChnlVersion)
        throw IoError("unsupported CHNL version in " + path);
    std::vector<Eigen::VectorXcd> rows(count, Eigen::VectorXcd(n));
    for (auto& row : rows) {
        f.read(reinterpret_cast<char*>(row.data()), sizeof(cplx) * n);
        if (!f) throw IoError("truncated CHNL file: " + path);
    }
    return rows;
}

}  // namespace ofdmwave
