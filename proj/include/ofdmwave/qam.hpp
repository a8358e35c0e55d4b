// SPDX-License-Identifier: Apache-2.0
#ifndef OFDMWAVE_QAM_HPP
#define OFDMWAVE_QAM_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "ofdmwave/common.hpp"

namespace ofdmwave {

/// Unit-average-energy constellation indexed by the integer bit label
/// (first bit = MSB). Square QAM uses independent Gray coding per axis:
/// the first K/2 bits select the I level, the last K/2 the Q level.
struct QamConstellation {
    int bits_per_symbol = 0;
    std::vector<cplx> points;  // size 2^K

    static QamConstellation square_qam(int k);
    /// {-1, +1} with bit 1 mapped to +1. Test and BPSK-link helper.
    static QamConstellation bpsk();

    int size() const { return static_cast<int>(points.size()); }
    double mean_energy() const;

    static std::uint32_t label_of(std::span<const std::uint8_t> bits);
    cplx map_bits(std::span<const std::uint8_t> bits) const;
};

cplx qam_modulate(std::span<const std::uint8_t> bits, const QamConstellation& constellation);

}  // namespace ofdmwave

#endif
