// SPDX-License-Identifier: Apache-2.0
#include "ofdmwave/rx.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>

namespace ofdmwave {

Eigen::VectorXcd extract_pilot_observations(const Eigen::MatrixXcd& y,
                                            std::span<const int> positions,
                                            const Eigen::VectorXcd& pilot_values,
                                            int pilot_symbol) {
    if (pilot_symbol < 0 || pilot_symbol >= y.rows())
        throw DimensionError("extract_pilot_observations: pilot symbol out of range");
    if (static_cast<Eigen::Index>(positions.size()) != pilot_values.size())
        throw DimensionError("extract_pilot_observations: positions/values length mismatch");
    Eigen::VectorXcd p(pilot_values.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const int pos = positions[i];
        if (pos < 0 || pos >= y.cols())
            throw DimensionError("extract_pilot_observations: position out of range");
        p[i] = y(pilot_symbol, pos) * std::conj(pilot_values[i]);
    }
    return p;
}

LmmseResult lmmse_estimate(const Eigen::VectorXcd& p, const Eigen::MatrixXcd& sigma,
                           double noise_var) {
    if (sigma.rows() != sigma.cols() || sigma.rows() != p.size())
        throw DimensionError("lmmse_estimate: covariance/observation dimension mismatch");
    if (noise_var < 0.0) throw ConfigError("lmmse_estimate: negative noise variance");
    Eigen::MatrixXcd a = sigma;
    a.diagonal().array() += noise_var;
    LmmseResult out;
    const Eigen::LDLT<Eigen::MatrixXcd> ldlt(a);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        ldlt.vectorD().real().minCoeff() > 1e-14 * std::max(1.0, a.real().trace())) {
        out.h = sigma * ldlt.solve(p);
        return out;
    }
    // only reachable with sigma^2 = 0 and singular Sigma
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double cut = 1e-12 * svd.singularValues().maxCoeff();
    Eigen::VectorXd inv = svd.singularValues();
    for (Eigen::Index i = 0; i < inv.size(); ++i) inv[i] = inv[i] > cut ? 1.0 / inv[i] : 0.0;
    out.h = sigma * (svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint() * p);
    out.pinv_fallback = true;
    return out;
}

Eigen::VectorXcd interpolate_full_band(const Eigen::VectorXcd& h_pilots, int n,
                                       std::span<const int> positions) {
    if (positions.size() < 2)
        throw DimensionError("interpolate_full_band: need at least 2 pilot positions");
    if (static_cast<Eigen::Index>(positions.size()) != h_pilots.size())
        throw DimensionError("interpolate_full_band: positions/values length mismatch");
    Eigen::VectorXcd h(n);
    std::size_t seg = 0;
    for (int pos = 0; pos < n; ++pos) {
        if (pos <= positions.front()) {
            h[pos] = h_pilots[0];
            continue;
        }
        if (pos >= positions.back()) {
            h[pos] = h_pilots[h_pilots.size() - 1];
            continue;
        }
        while (positions[seg + 1] < pos) ++seg;
        const int lo = positions[seg], hi = positions[seg + 1];
        const double t = static_cast<double>(pos - lo) / static_cast<double>(hi - lo);
        h[pos] = (1.0 - t) * h_pilots[seg] + t * h_pilots[seg + 1];
    }
    return h;
}

EqualizedGrid equalize(const Eigen::MatrixXcd& y, const Eigen::MatrixXcd& h_hat) {
    if (y.rows() != h_hat.rows() || y.cols() != h_hat.cols())
        throw DimensionError("equalize: shape mismatch");
    EqualizedGrid out;
    out.x_hat.resize(y.rows(), y.cols());
    out.degenerate.setConstant(y.rows(), y.cols(), false);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
        for (Eigen::Index c = 0; c < y.cols(); ++c) {
            if (std::abs(h_hat(r, c)) < 1e-12) {
                out.x_hat(r, c) = 0.0;
                out.degenerate(r, c) = true;
            } else {
                out.x_hat(r, c) = y(r, c) / h_hat(r, c);
            }
        }
    }
    return out;
}

void demap_llr_points(cplx x_hat, cplx h_hat, double noise_var, std::span<const cplx> points,
                      int k, std::span<double> llrs_out) {
    if (static_cast<int>(llrs_out.size()) != k)
        throw DimensionError("demap_llr: output span must have K entries");
    if (k < 1 || k > 12) throw ConfigError("demap_llr: K must be in [1, 12]");
    if (points.size() != (std::size_t{1} << k))
        throw DimensionError("demap_llr: alphabet size must be 2^K");
    if (!(noise_var > 0.0)) throw ConfigError("demap_llr: noise variance must be > 0");
    const double snr_factor = std::norm(h_hat) / noise_var;
    const int count = static_cast<int>(points.size());
    // metrics d_c = -|h|^2/sigma^2 |x - c|^2, stabilized by the global max
    double dmax = -std::numeric_limits<double>::infinity();
    double d[1 << 12];
    for (int c = 0; c < count; ++c) {
        d[c] = -snr_factor * std::norm(x_hat - points[c]);
        dmax = std::max(dmax, d[c]);
    }
    for (int bit = 0; bit < k; ++bit) {
        const int shift = k - 1 - bit;  // bit 0 is the label MSB
        double s1 = 0.0, s0 = 0.0;
        for (int c = 0; c < count; ++c) {
            const double e = std::exp(d[c] - dmax);
            if ((c >> shift) & 1)
                s1 += e;
            else
                s0 += e;
        }
        const double llr = std::log(s1) - std::log(s0);
        llrs_out[bit] = std::clamp(llr, -kLlrClip, kLlrClip);
    }
}

void demap_llr(cplx x_hat, cplx h_hat, double noise_var, const QamConstellation& constellation,
               std::span<double> llrs_out) {
    demap_llr_points(x_hat, h_hat, noise_var, constellation.points,
                     constellation.bits_per_symbol, llrs_out);
}

double bce_bits_term(double llr, std::uint8_t bit) {
    // -log2 P(b | llr) with P(1) = sigmoid(llr): softplus(-llr*sign)/ln 2
    const double x = bit ? llr : -llr;
    const double softplus = x > 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
    return softplus / std::log(2.0);
}

RateResult bce_rate(const LlrGrid& llrs, const BitGrid& bits) {
    if (llrs.m != bits.m || llrs.n != bits.n || llrs.k != bits.k)
        throw DimensionError("bce_rate: llr/bit shapes differ");
    std::vector<double> terms(llrs.values.size());
    for (std::size_t i = 0; i < llrs.values.size(); ++i)
        terms[i] = bce_bits_term(llrs.values[i], bits.values[i]);
    RateResult r;
    const double denom = static_cast<double>(llrs.m) * llrs.n;  // per-RE normalization
    r.bce = pairwise_sum(terms) / denom;
    r.rate = llrs.k - r.bce;
    return r;
}

namespace {
constexpr char kLlrsMagic[4] = {'L', 'L', 'R', 'S'};
}

void write_llr_dump(const std::string& path, std::span<const LlrGrid> grids) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    const std::uint32_t m = grids.empty() ? 0 : grids[0].m;
    const std::uint32_t n = grids.empty() ? 0 : grids[0].n;
    const std::uint32_t k = grids.empty() ? 0 : grids[0].k;
    f.write(kLlrsMagic, 4);
    f.write(reinterpret_cast<const char*>(&m), sizeof(m));
    f.write(reinterpret_cast<const char*>(&n), sizeof(n));
    f.write(reinterpret_cast<const char*>(&k), sizeof(k));
    for (const auto& g : grids) {
        if (g.m != static_cast<int>(m) || g.n != static_cast<int>(n) || g.k != static_cast<int>(k))
            throw DimensionError("write_llr_dump: inconsistent grid shapes");
        f.write(reinterpret_cast<const char*>(g.values.data()), sizeof(double) * g.values.size());
    }
    if (!f) throw IoError("write failed: " + path);
}

std::vector<LlrGrid> read_llr_dump(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    char magic[4];
    std::uint32_t m = 0, n = 0, k = 0;
    f.read(magic, 4);
    f.read(reinterpret_cast<char*>(&m), sizeof(m));
    f.read(reinterpret_cast<char*>(&n), sizeof(n));
    f.read(reinterpret_cast<char*>(&k), sizeof(k));
    if (!f || std::memcmp(magic, kLlrsMagic, 4) != 0) throw IoError("not an LLRS file: " + path);
    std::vector<LlrGrid> grids;
    const std::size_t per = std::size_t(m) * n * k;
    for (;;) {
        LlrGrid g(static_cast<int>(m), static_cast<int>(n), static_cast<int>(k));
        f.read(reinterpret_cast<char*>(g.values.data()), sizeof(double) * per);
        if (!f) {
            if (f.gcount() == 0) break;
            throw IoError("truncated LLRS file: " + path);
        }
        grids.push_back(std::move(g));
    }
    return grids;
}

}  // namespace ofdmwave
