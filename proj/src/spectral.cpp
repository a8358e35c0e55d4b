// SPDX-License-Identifier: Apache-2.0
#include "ofdmwave/spectral.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace ofdmwave {

namespace {

// 15-point Kronrod / 7-point Gauss pair on [-1, 1] (QUADPACK dqk15).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename F>
void gk15(const F& f, double a, double b, double& result, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double resg = 0.0, resk = 0.0;
    const double fc = f(c);
    resk = kWgk[7] * fc;
    resg = kWg[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double x = h * kXgk[j];
        const double f1 = f(c - x);
        const double f2 = f(c + x);
        resk += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
    }
    result = resk * h;
    err = std::abs((resk - resg) * h);
}

template <typename F>
double adaptive_panel(const F& f, double a, double b, double tol, int a_idx, int b_idx) {
    struct Seg {
        double a, b, tol;
        int depth;
    };
    std::vector<Seg> stack{{a, b, tol, 0}};
    double total = 0.0;
    while (!stack.empty()) {
        const Seg s = stack.back();
        stack.pop_back();
        double res, err;
        gk15(f, s.a, s.b, res, err);
        if (err <= s.tol || (s.b - s.a) < 1e-14 * std::max(1.0, std::abs(s.b))) {
            total += res;
            continue;
        }
        if (s.depth >= 45)
            throw NumericalError("compute_v: quadrature failed to converge for entry (" +
                                 std::to_string(a_idx) + ", " + std::to_string(b_idx) + ")");
        const double mid = 0.5 * (s.a + s.b);
        stack.push_back({s.a, mid, 0.5 * s.tol, s.depth + 1});
        stack.push_back({mid, s.b, 0.5 * s.tol, s.depth + 1});
    }
    return total;
}

// Zeros of sinc(rho*(u - center)) inside (lo, hi), used as panel breakpoints
// to keep each GK panel on a single lobe of the oscillatory integrand.
void add_sinc_zeros(double center, double rho, double lo, double hi, std::vector<double>& pts) {
    const int k_lo = static_cast<int>(std::ceil(rho * (lo - center)));
    const int k_hi = static_cast<int>(std::floor(rho * (hi - center)));
    for (int k = k_lo; k <= k_hi; ++k) {
        if (k == 0) continue;
        const double u = center + static_cast<double>(k) / rho;
        if (u > lo && u < hi) pts.push_back(u);
    }
}

double v_entry(int n, double rho, int a, int b, double tol) {
    const double half = 0.5 * n;
    std::vector<double> pts{-half, half};
    add_sinc_zeros(a, rho, -half, half, pts);
    if (b != a) add_sinc_zeros(b, rho, -half, half, pts);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](double x, double y) { return std::abs(x - y) < 1e-12; }),
              pts.end());
    const auto f = [rho, a, b](double u) {
        return rho * sinc(rho * (u - a)) * sinc(rho * (u - b));
    };
    const double panel_tol = tol / static_cast<double>(pts.size());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        total += adaptive_panel(f, pts[i], pts[i + 1], panel_tol, a, b);
    return total;
}

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr char kVmatMagic[4] = {'V', 'M', 'A', 'T'};
constexpr std::uint32_t kVmatVersion = 1;

}  // namespace

Eigen::MatrixXd compute_w(int n) {
    if (n < 1) throw ConfigError("compute_w: n must be >= 1");
    // (1/T) int_{-T/2}^{T/2} e^{i 2 pi (a-b) t / T} dt = delta_{ab}
    return Eigen::MatrixXd::Identity(n, n);
}

Eigen::MatrixXd compute_v(int n, double t_cp_fraction, double quadrature_tol, int threads) {
    if (n < 1 || n % 2 == 0) throw ConfigError("compute_v: n must be odd and positive");
    if (t_cp_fraction < 0.0 || t_cp_fraction >= 1.0)
        throw ConfigError("compute_v: t_cp_fraction must be in [0, 1)");
    if (!(quadrature_tol > 0.0)) throw ConfigError("compute_v: quadrature_tol must be > 0");

    const double rho = 1.0 + t_cp_fraction;
    const int half = (n - 1) / 2;
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(n) * (n + 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) pairs.emplace_back(i, j);

    Eigen::MatrixXd v(n, n);
    parallel_for(pairs.size(), threads, [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        const double val = v_entry(n, rho, i - half, j - half, quadrature_tol);
        v(i, j) = val;
        v(j, i) = val;
    });
    return v;
}

SpectralOperators make_spectral_operators(int n, double t_cp_fraction, double quadrature_tol,
                                          const std::string& cache_dir, int threads) {
    SpectralOperators ops;
    ops.t_cp_fraction = t_cp_fraction;
    ops.quadrature_tol = quadrature_tol;
    ops.w = compute_w(n);
    std::string path;
    if (!cache_dir.empty()) {
        std::uint64_t h = fnv1a64(&n, sizeof(n));
        h = fnv1a64(&t_cp_fraction, sizeof(t_cp_fraction), h);
        h = fnv1a64(&quadrature_tol, sizeof(quadrature_tol), h);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        path = cache_dir + "/vmat-" + buf + ".bin";
        if (load_vmat(path, n, t_cp_fraction, quadrature_tol, ops.v)) return ops;
    }
    ops.v = compute_v(n, t_cp_fraction, quadrature_tol, threads);
    if (!path.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(cache_dir, ec);
        save_vmat(path, n, t_cp_fraction, quadrature_tol, ops.v);  // best effort
    }
    return ops;
}

double in_band_energy(const Eigen::VectorXcd& x, const SpectralOperators& ops) {
    if (x.size() != ops.v.rows())
        throw DimensionError("in_band_energy: vector length does not match V");
    const double e = (x.adjoint() * (ops.v * x)).real()(0);
    if (e < 0.0) {
        if (e > -1e-10) return 0.0;
        throw NumericalError("in_band_energy: quadratic form is negative (" + std::to_string(e) +
                             "), V is broken");
    }
    return e;
}

double total_energy(const Eigen::VectorXcd& x, const SpectralOperators& ops) {
    if (x.size() != ops.w.rows())
        throw DimensionError("total_energy: vector length does not match W");
    return (x.adjoint() * (ops.w * x)).real()(0);
}

AclrValue aclr_analytic(const SpectralOperators& ops) {
    const double tr = ops.v.trace();
    if (tr <= 0.0) throw NumericalError("aclr_analytic: trace(V) <= 0");
    AclrValue a;
    a.ratio = static_cast<double>(ops.n()) / tr - 1.0;
    a.db = to_db(a.ratio);
    return a;
}

double aclr_empirical(std::span<const Eigen::VectorXcd> batch, const SpectralOperators& ops) {
    if (batch.empty()) throw DimensionError("aclr_empirical: empty batch");
    std::vector<double> num(batch.size()), den(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        num[i] = total_energy(batch[i], ops);
        den[i] = in_band_energy(batch[i], ops);
    }
    const double d = pairwise_sum(den);
    if (d <= 0.0) throw NumericalError("aclr_empirical: zero in-band energy in batch");
    return pairwise_sum(num) / d - 1.0;
}

bool load_vmat(const std::string& path, int n, double t_cp_fraction, double tol,
               Eigen::MatrixXd& out) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return false;
    char magic[4];
    std::uint32_t version = 0, fn = 0;
    double ftcp = 0.0, ftol = 0.0;
    f.read(magic, 4);
    f.read(reinterpret_cast<char*>(&version), sizeof(version));
    f.read(reinterpret_cast<char*>(&fn), sizeof(fn));
    f.read(reinterpret_cast<char*>(&ftcp), sizeof(ftcp));
    f.read(reinterpret_cast<char*>(&ftol), sizeof(ftol));
    if (!f || std::memcmp(magic, kVmatMagic, 4) != 0 || version != kVmatVersion ||
        fn != static_cast<std::uint32_t>(n) || ftcp != t_cp_fraction || ftol != tol)
        return false;
    out.resize(n, n);
    f.read(reinterpret_cast<char*>(out.data()), sizeof(double) * n * n);
    return static_cast<bool>(f);
}

bool save_vmat(const std::string& path, int n, double t_cp_fraction, double tol,
               const Eigen::MatrixXd& v) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) return false;
    const auto fn = static_cast<std::uint32_t>(n);
    f.write(kVmatMagic, 4);
    f.write(reinterpret_cast<const char*>(&kVmatVersion), sizeof(kVmatVersion));
    f.write(reinterpret_cast<const char*>(&fn), sizeof(fn));
    f.write(reinterpret_cast<const char*>(&t_cp_fraction), sizeof(t_cp_fraction));
    f.write(reinterpret_cast<const char*>(&tol), sizeof(tol));
    f.write(reinterpret_cast<const char*>(v.data()), sizeof(double) * n * n);
    return static_cast<bool>(f);
}

}  // namespace ofdmwave
