// SPDX-License-Identifier: Apache-2.0
#ifndef OFDMWAVE_IO_HPP
#define OFDMWAVE_IO_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "ofdmwave/common.hpp"

namespace ofdmwave {

std::uint64_t fnv1a64_str(const std::string& s);
std::string hex64(std::uint64_t v);

/// CSV emitter with a fixed column order, '.' decimal separator and
/// deterministic formatting. Metadata goes into leading '#' comment lines
/// (tool version, resolved config hash, seed), never timestamps, so reruns
/// are byte-identical.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns,
              const std::map<std::string, std::string>& meta);

    /// Writes one row; values are preformatted strings.
    void write_row(const std::vector<std::string>& values);

    void close();

private:
    std::ofstream file_;
    std::string path_;
    std::size_t columns_ = 0;
};

/// Fixed 6-decimal format used for all dB values in text outputs.
std::string format_db(double v);
/// General numeric format (%.9g).
std::string format_num(double v);
std::string format_int(long long v);

}  // namespace ofdmwave

#endif
