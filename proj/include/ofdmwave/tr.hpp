// SPDX-License-Identifier: Apache-2.0
#ifndef OFDMWAVE_TR_HPP
#define OFDMWAVE_TR_HPP

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "ofdmwave/grid.hpp"
#include "ofdmwave/qam.hpp"
#include "ofdmwave/rng.hpp"

namespace ofdmwave {

/// Per-symbol peak-reduction-tone positions. Data symbols carry R tones, the
/// pilot symbol floor(R/2) tones drawn from the non-pilot positions only.
struct PrtPlacement {
    std::vector<std::vector<int>> sets;  // per OFDM symbol, ascending positions
    int r_data = 0;
    int r_pilot = 0;
};

PrtPlacement sample_prt_placement(const GridConfig& config, int r, RngStream& rng);

/// First-order solver knobs for the oversampled-peak minimization.
struct PeakSolverConfig {
    int oversampling = 4;
    int max_iters = 120000;
    double rel_obj_tol = 1e-7;
    double feas_tol = 1e-9;
    double init_temperature = 1.0;    ///< tau0 as a fraction of the start objective
    double temperature_decay = 0.5;
    double certificate_tol = 1e-5;
    int polish_iters = 2000;
    int certificate_rounds = 3;       ///< extra polish+recheck attempts
    bool run_certificate = true;      ///< disable for bulk Monte Carlo profiles
    std::optional<std::uint64_t> start_jitter_seed;  ///< random feasible start

    /// Cheaper profile for large Monte Carlo sweeps: no certificate, looser
    /// temperature floor and shorter polish.
    static PeakSolverConfig fast(int oversampling);
};

struct PeakSolveReport {
    double objective_before = 0.0;
    double objective_after = 0.0;
    double c_energy = 0.0;
    double budget = 0.0;
    int iterations = 0;
    int stages = 0;
    bool certified = false;
    double certificate_residual = 0.0;
    bool boundary_active = false;
    double recheck_peak = 0.0;  ///< objective re-measured at 4x oversampling
};

struct PeakSolution {
    Eigen::VectorXcd c;  // length N, supported on the PRT positions
    PeakSolveReport report;
};

/// Minimizes max_t |idft(u + c)_t|^2 over c supported on prt_positions with
/// ||c||^2 <= energy_budget. Smoothed softmax + projected FISTA stages with
/// geometric temperature decay, then a Polyak subgradient polish on the true
/// max; reports a convex-combination stationarity certificate.
PeakSolution minimize_peak(const Eigen::VectorXcd& u, std::span<const int> prt_positions,
                           double energy_budget, const PeakSolverConfig& cfg,
                           const IdftOperator& idft,
                           const IdftOperator* recheck_idft = nullptr);

struct TrSlot {
    ResourceGrid grid;  // x = u + c per symbol
    PrtPlacement placement;
    std::vector<PeakSolveReport> reports;  // one per OFDM symbol
};

/// Data bits consumed by one TR slot (K bits per data RE).
int tr_data_bit_count(const GridConfig& config, int r, int k);

/// Pilots on the pilot symbol, QAM data elsewhere, peak-reduction signal per
/// symbol from minimize_peak with budget |R_m|.
TrSlot build_tr_slot(std::span<const std::uint8_t> bits, const GridConfig& config, int r,
                     const QamConstellation& constellation, const PeakSolverConfig& solver,
                     RngStream& rng, int threads = 1);

}  // namespace ofdmwave

#endif
