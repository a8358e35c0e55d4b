// SPDX-License-Identifier: Apache-2.0
#include "ofdmwave/qam.hpp"

namespace ofdmwave {

namespace {

std::uint32_t gray_decode(std::uint32_t g) {
    std::uint32_t b = g;
    for (std::uint32_t shift = 1; shift < 32; shift <<= 1) b ^= b >> shift;
    return b;
}

// PAM level for a Gray-coded group of `bits` bits; all-zero bits map to the
// most positive level so that e.g. QPSK bits 00 -> (+1+j)/sqrt(2).
double pam_level(std::uint32_t group, int bits, double scale) {
    const auto levels = 1u << bits;
    const std::uint32_t rank = gray_decode(group);
    return scale * static_cast<double>(static_cast<int>(levels) - 1 - 2 * static_cast<int>(rank));
}

}  // namespace

QamConstellation QamConstellation::square_qam(int k) {
    if (k < 2 || k % 2 != 0)
        throw ConfigError("square_qam: unsupported constellation, K must be even and >= 2");
    QamConstellation c;
    c.bits_per_symbol = k;
    const int half = k / 2;
    const auto levels = 1u << half;
    const double scale =
        std::sqrt(3.0 / (2.0 * (static_cast<double>(levels) * levels - 1.0)));
    c.points.resize(std::size_t{1} << k);
    for (std::uint32_t label = 0; label < c.points.size(); ++label) {
        const std::uint32_t i_group = label >> half;
        const std::uint32_t q_group = label & (levels - 1);
        c.points[label] = {pam_level(i_group, half, scale), pam_level(q_group, half, scale)};
    }
    return c;
}

QamConstellation QamConstellation::bpsk() {
    QamConstellation c;
    c.bits_per_symbol = 1;
    c.points = {cplx{-1.0, 0.0}, cplx{1.0, 0.0}};
    return c;
}

double QamConstellation::mean_energy() const {
    double e = 0.0;
    for (const cplx& p : points) e += std::norm(p);
    return e / static_cast<double>(points.size());
}

std::uint32_t QamConstellation::label_of(std::span<const std::uint8_t> bits) {
    std::uint32_t label = 0;
    for (std::uint8_t b : bits) {
        if (b > 1) throw DimensionError("label_of: bits must be 0 or 1");
        label = (label << 1) | b;
    }
    return label;
}

cplx QamConstellation::map_bits(std::span<const std::uint8_t> bits) const {
    if (static_cast<int>(bits.size()) != bits_per_symbol)
        throw DimensionError("map_bits: expected " + std::to_string(bits_per_symbol) + " bits");
    return points[label_of(bits)];
}

cplx qam_modulate(std::span<const std::uint8_t> bits, const QamConstellation& constellation) {
    return constellation.map_bits(bits);
}

}  // namespace ofdmwave
