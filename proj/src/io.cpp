// SPDX-License-Identifier: Apache-2.0
#include "ofdmwave/io.hpp"

#include <cstdio>

namespace ofdmwave {

std::uint64_t fnv1a64_str(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns,
                     const std::map<std::string, std::string>& meta)
    : file_(path, std::ios::trunc), path_(path), columns_(columns.size()) {
    if (!file_) throw IoError("cannot open for writing: " + path);
    for (const auto& [key, value] : meta) file_ << "# " << key << "=" << value << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
        file_ << columns[i] << (i + 1 == columns.size() ? "\n" : ",");
}

void CsvWriter::write_row(const std::vector<std::string>& values) {
    if (values.size() != columns_) throw DimensionError("CsvWriter: column count mismatch");
    for (std::size_t i = 0; i < values.size(); ++i)
        file_ << values[i] << (i + 1 == values.size() ? "\n" : ",");
    if (!file_) throw IoError("write failed: " + path_);
}

void CsvWriter::close() {
    if (file_.is_open()) {
        file_.close();
        if (file_.fail()) throw IoError("close failed: " + path_);
    }
}

std::string format_db(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string format_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string format_int(long long v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", v);
    return buf;
}

}  // namespace ofdmwave
