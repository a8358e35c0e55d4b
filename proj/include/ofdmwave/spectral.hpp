// SPDX-License-Identifier: Apache-2.0
#ifndef OFDMWAVE_SPECTRAL_HPP
#define OFDMWAVE_SPECTRAL_HPP

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "ofdmwave/common.hpp"

namespace ofdmwave {

/// Quadratic-form energy operators for one numerology.
/// E_total = x^H W x (identity in closed form), E_inband = x^H V x with
/// v_{a,b} = rho * int_{-N/2}^{N/2} sinc(rho(u-a)) sinc(rho(u-b)) du,
/// rho = 1 + T_cp/T, in subcarrier-spacing units.
struct SpectralOperators {
    Eigen::MatrixXd v;
    Eigen::MatrixXd w;
    double t_cp_fraction = 0.0;
    double quadrature_tol = 1e-9;

    int n() const { return static_cast<int>(v.rows()); }
};

Eigen::MatrixXd compute_w(int n);

/// Adaptive Gauss-Kronrod per entry, integration band split at the zero
/// crossings of both sinc factors. Throws NumericalError naming the offending
/// (a, b) entry if a panel fails to converge.
Eigen::MatrixXd compute_v(int n, double t_cp_fraction, double quadrature_tol, int threads = 1);

/// Builds (V, W); V is loaded from / saved to a VMAT cache file under
/// cache_dir when nonempty (keyed by a content hash of n, t_cp, tol).
SpectralOperators make_spectral_operators(int n, double t_cp_fraction,
                                          double quadrature_tol = 1e-9,
                                          const std::string& cache_dir = "", int threads = 1);

/// real(x^H V x); values in (-1e-10, 0) clamp to 0, more negative throws.
double in_band_energy(const Eigen::VectorXcd& x, const SpectralOperators& ops);

/// real(x^H W x).
double total_energy(const Eigen::VectorXcd& x, const SpectralOperators& ops);

struct AclrValue {
    double ratio = 0.0;
    double db = 0.0;
};

/// For i.i.d. unit-variance FBS: ACLR = N / trace(V) - 1.
AclrValue aclr_analytic(const SpectralOperators& ops);

/// Pooled batch ratio (sum x^H W x) / (sum x^H V x) - 1.
double aclr_empirical(std::span<const Eigen::VectorXcd> batch, const SpectralOperators& ops);

/// VMAT cache file helpers (exposed for the file-format tests).
bool load_vmat(const std::string& path, int n, double t_cp_fraction, double tol,
               Eigen::MatrixXd& out);
bool save_vmat(const std::string& path, int n, double t_cp_fraction, double tol,
               const Eigen::MatrixXd& v);

}  // namespace ofdmwave

#endif
