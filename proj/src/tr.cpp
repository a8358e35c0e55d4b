// SPDX-License-Identifier: Apache-2.0
#include "ofdmwave/tr.hpp"

#include <algorithm>
#include <numeric>

namespace ofdmwave {

PeakSolverConfig PeakSolverConfig::fast(int oversampling) {
    PeakSolverConfig cfg;
    cfg.oversampling = oversampling;
    cfg.max_iters = 12000;
    cfg.rel_obj_tol = 1e-5;
    cfg.polish_iters = 300;
    cfg.run_certificate = false;
    return cfg;
}

PrtPlacement sample_prt_placement(const GridConfig& config, int r, RngStream& rng) {
    config.validate();
    if (r < 0 || r >= config.n)
        throw ConfigError("sample_prt_placement: need 0 <= R < N");
    const auto pilots = pilot_positions(config.n);
    const int free_on_pilot = config.n - static_cast<int>(pilots.size());
    const int r_pilot = r / 2;
    if (r_pilot > free_on_pilot)
        throw ConfigError("sample_prt_placement: floor(R/2) exceeds non-pilot positions");

    // candidate pools: all positions on data symbols, odd positions on the
    // pilot symbol (the even ones carry pilots)
    std::vector<int> all_positions(config.n);
    std::iota(all_positions.begin(), all_positions.end(), 0);
    std::vector<int> non_pilot;
    for (int p = 1; p < config.n; p += 2) non_pilot.push_back(p);

    const auto draw_subset = [&rng](std::vector<int> pool, int count) {
        // partial Fisher-Yates
        for (int i = 0; i < count; ++i) {
            const auto j = i + static_cast<int>(rng.uniform_below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(count);
        std::sort(pool.begin(), pool.end());
        return pool;
    };

    PrtPlacement placement;
    placement.r_data = r;
    placement.r_pilot = r_pilot;
    placement.sets.resize(config.m);
    for (int m = 0; m < config.m; ++m) {
        if (m == kPilotSymbol && config.m > kPilotSymbol)
            placement.sets[m] = draw_subset(non_pilot, r_pilot);
        else
            placement.sets[m] = draw_subset(all_positions, r);
    }
    return placement;
}

namespace {

// Real 2R-dimensional view of the complex reduction vector; all first-order
// iterations run on y = [Re c; Im c].
struct PeakProblem {
    Eigen::MatrixXcd b;    // NOs x R columns of the scaled IDFT at PRT positions
    Eigen::VectorXcd z_u;  // fixed data contribution
    double budget = 0.0;
    int r = 0;

    Eigen::VectorXcd c_of(const Eigen::VectorXd& y) const {
        Eigen::VectorXcd c(r);
        for (int i = 0; i < r; ++i) c[i] = cplx{y[i], y[r + i]};
        return c;
    }
    Eigen::VectorXcd z_of(const Eigen::VectorXd& y) const { return z_u + b * c_of(y); }

    static double peak(const Eigen::VectorXcd& z) {
        double m = 0.0;
        for (Eigen::Index t = 0; t < z.size(); ++t) m = std::max(m, std::norm(z[t]));
        return m;
    }

    double true_obj(const Eigen::VectorXd& y) const { return peak(z_of(y)); }

    // grad of sum_t w_t |z_t|^2 at z, as a real 2R vector
    Eigen::VectorXd weighted_grad(const Eigen::VectorXcd& z, const Eigen::VectorXd& w) const {
        const Eigen::VectorXcd gc = b.adjoint() * (w.array() * z.array()).matrix();
        Eigen::VectorXd g(2 * r);
        for (int i = 0; i < r; ++i) {
            g[i] = 2.0 * gc[i].real();
            g[r + i] = 2.0 * gc[i].imag();
        }
        return g;
    }

    void project(Eigen::VectorXd& y) const {
        const double n2 = y.squaredNorm();
        if (n2 > budget) y *= std::sqrt(budget / n2);
    }

    // softmax-smoothed objective and gradient
    double smooth(const Eigen::VectorXd& y, double tau, Eigen::VectorXd* grad) const {
        const Eigen::VectorXcd z = z_of(y);
        const Eigen::Index count = z.size();
        Eigen::VectorXd f(count);
        double fm = 0.0;
        for (Eigen::Index t = 0; t < count; ++t) {
            f[t] = std::norm(z[t]);
            fm = std::max(fm, f[t]);
        }
        Eigen::VectorXd w(count);
        double s = 0.0;
        for (Eigen::Index t = 0; t < count; ++t) {
            w[t] = std::exp((f[t] - fm) / tau);
            s += w[t];
        }
        if (grad) {
            w /= s;
            *grad = weighted_grad(z, w);
        }
        return fm + tau * std::log(s);
    }
};

// Projection onto the probability simplex (Duchi et al. style sort method).
void project_simplex(Eigen::VectorXd& w) {
    const Eigen::Index n = w.size();
    std::vector<double> u(w.data(), w.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double css = 0.0, theta = 0.0;
    int rho = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
        css += u[i];
        const double t = (css - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) {
            rho = static_cast<int>(i);
            theta = t;
        }
    }
    if (rho < 0) {
        w.setConstant(1.0 / static_cast<double>(n));
        return;
    }
    for (Eigen::Index i = 0; i < n; ++i) w[i] = std::max(w[i] - theta, 0.0);
}

struct CertificateResult {
    double residual_rel = 0.0;
    bool boundary = false;
};

// Min-norm convex combination of active-peak gradients, with the outward
// normal direction available as a free nonnegative multiplier when the energy
// constraint is active. Small-dimensional projected gradient on the simplex.
CertificateResult kkt_certificate(const PeakProblem& prob, const Eigen::VectorXd& y,
                                  double active_window_rel, double feas_tol) {
    const Eigen::VectorXcd z = prob.z_of(y);
    const Eigen::Index count = z.size();
    Eigen::VectorXd f(count);
    double fm = 0.0;
    for (Eigen::Index t = 0; t < count; ++t) {
        f[t] = std::norm(z[t]);
        fm = std::max(fm, f[t]);
    }
    std::vector<Eigen::Index> active;
    for (Eigen::Index t = 0; t < count; ++t)
        if (f[t] >= fm * (1.0 - active_window_rel)) active.push_back(t);

    const auto a = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd g(2 * prob.r, a);
    for (Eigen::Index j = 0; j < a; ++j) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(count);
        w[active[j]] = 1.0;
        g.col(j) = prob.weighted_grad(z, w);
    }

    CertificateResult res;
    const double n2 = y.squaredNorm();
    res.boundary = n2 >= prob.budget - std::max(feas_tol, 1e-12 * prob.budget);
    Eigen::VectorXd mhat;
    if (res.boundary && n2 > 0.0) mhat = y / std::sqrt(n2);

    const auto residual = [&](const Eigen::VectorXd& w) {
        Eigen::VectorXd rvec = g * w;
        if (mhat.size() > 0) {
            const double comp = rvec.dot(mhat);
            if (comp < 0.0) rvec -= comp * mhat;
        }
        return rvec;
    };

    Eigen::VectorXd w = Eigen::VectorXd::Constant(a, 1.0 / static_cast<double>(a));
    const double lips = g.squaredNorm() + 1e-30;
    for (int it = 0; it < 6000; ++it) {
        const Eigen::VectorXd rvec = residual(w);
        w -= (g.transpose() * rvec) / lips;
        project_simplex(w);
    }
    double gscale = 1e-30;
    for (Eigen::Index j = 0; j < a; ++j) gscale = std::max(gscale, g.col(j).norm());
    res.residual_rel = residual(w).norm() / gscale;
    return res;
}

// Polyak subgradient steps on the true max, averaging the gradients of all
// peaks within a tight window (handles ties at the optimum).
void polish(const PeakProblem& prob, Eigen::VectorXd& y, double target, int iters,
            double scale, double* fbest_out, int* iter_count) {
    Eigen::VectorXd best = y;
    double fbest = prob.true_obj(y);
    for (int k = 0; k < iters; ++k) {
        const Eigen::VectorXcd z = prob.z_of(y);
        const Eigen::Index count = z.size();
        Eigen::VectorXd f(count);
        double fm = 0.0;
        for (Eigen::Index t = 0; t < count; ++t) {
            f[t] = std::norm(z[t]);
            fm = std::max(fm, f[t]);
        }
        Eigen::VectorXd w = Eigen::VectorXd::Zero(count);
        int nact = 0;
        const double window = std::max(1e-12 * scale, 1e-9 * fm);
        for (Eigen::Index t = 0; t < count; ++t)
            if (f[t] >= fm - window) {
                w[t] = 1.0;
                ++nact;
            }
        w /= static_cast<double>(nact);
        const Eigen::VectorXd gvec = prob.weighted_grad(z, w);
        const double gn = gvec.squaredNorm();
        ++*iter_count;
        if (gn < 1e-30 * scale) break;
        const double step = (fm - target) / gn;
        if (step <= 0.0) break;
        y -= step * gvec;
        prob.project(y);
        const double ft = prob.true_obj(y);
        if (ft < fbest) {
            fbest = ft;
            best = y;
        }
    }
    y = best;
    *fbest_out = fbest;
}

}  // namespace

PeakSolution minimize_peak(const Eigen::VectorXcd& u, std::span<const int> prt_positions,
                           double energy_budget, const PeakSolverConfig& cfg,
                           const IdftOperator& idft, const IdftOperator* recheck_idft) {
    const int n = idft.n();
    if (u.size() != n) throw DimensionError("minimize_peak: u length does not match idft n");
    if (energy_budget < 0.0) throw ConfigError("minimize_peak: negative energy budget");
    std::vector<int> pos(prt_positions.begin(), prt_positions.end());
    std::sort(pos.begin(), pos.end());
    for (std::size_t i = 0; i < pos.size(); ++i) {
        if (pos[i] < 0 || pos[i] >= n)
            throw DimensionError("minimize_peak: PRT position out of range");
        if (i > 0 && pos[i] == pos[i - 1])
            throw DimensionError("minimize_peak: duplicate PRT position");
        if (std::abs(u[pos[i]]) != 0.0)
            throw ConfigError("minimize_peak: u must be zero on the PRT positions");
    }

    PeakProblem prob;
    prob.r = static_cast<int>(pos.size());
    prob.budget = energy_budget;
    const Eigen::MatrixXcd a_full = idft.scaled_matrix(SamplingConvention::UnitMeanPower);
    prob.z_u = a_full * u;
    prob.b.resize(a_full.rows(), prob.r);
    for (int i = 0; i < prob.r; ++i) prob.b.col(i) = a_full.col(pos[i]);

    PeakSolution sol;
    sol.c = Eigen::VectorXcd::Zero(n);
    sol.report.budget = energy_budget;
    sol.report.objective_before = PeakProblem::peak(prob.z_u);

    const auto fill_recheck = [&](const Eigen::VectorXcd& x_c) {
        if (!recheck_idft) return;
        Eigen::VectorXcd x = u + x_c;
        sol.report.recheck_peak =
            recheck_idft->apply(x, SamplingConvention::UnitMeanPower).peak_power();
    };

    if (prob.r == 0 || energy_budget == 0.0) {
        // feasible set is {0}
        sol.report.objective_after = sol.report.objective_before;
        sol.report.certified = true;
        fill_recheck(sol.c);
        return sol;
    }

    Eigen::VectorXd y = Eigen::VectorXd::Zero(2 * prob.r);
    if (cfg.start_jitter_seed) {
        RngStream jrng(*cfg.start_jitter_seed);
        for (int i = 0; i < 2 * prob.r; ++i) y[i] = 0.01 * std::sqrt(energy_budget) * jrng.normal();
        prob.project(y);
    }

    const double scale = std::max(sol.report.objective_before, 1e-30);
    double tau = cfg.init_temperature * scale;
    const double tau_min = cfg.rel_obj_tol * scale * 1e-3;
    double lips = scale;
    int iters = 0;
    double f_tau_last = 0.0, tau_last = tau;

    while (tau > tau_min && iters < cfg.max_iters) {
        ++sol.report.stages;
        Eigen::VectorXd yk = y, v = y;
        double theta = 1.0;
        Eigen::VectorXd gv(2 * prob.r);
        double fk = prob.smooth(yk, tau, nullptr);
        for (int k = 0; k < 600 && iters < cfg.max_iters; ++k) {
            const double fv = prob.smooth(v, tau, &gv);
            Eigen::VectorXd ynew;
            double fn = 0.0;
            for (;;) {
                ynew = v - gv / lips;
                prob.project(ynew);
                const Eigen::VectorXd d = ynew - v;
                fn = prob.smooth(ynew, tau, nullptr);
                if (fn <= fv + gv.dot(d) + 0.5 * lips * d.squaredNorm() + 1e-16 * scale) break;
                lips *= 2.0;
            }
            ++iters;
            const double step = (ynew - yk).norm();
            const double theta_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
            if (fn > fk) {
                v = yk;  // restart momentum
                theta = 1.0;
            } else {
                v = ynew + ((theta - 1.0) / theta_new) * (ynew - yk);
                prob.project(v);
                yk = ynew;
                fk = fn;
                theta = theta_new;
            }
            lips = std::max(lips * 0.7, 1e-12 * scale);
            if (k > 5 && step < 1e-14 * std::sqrt(energy_budget + 1.0)) break;
        }
        y = yk;
        f_tau_last = fk;
        tau_last = tau;
        tau *= cfg.temperature_decay;
    }

    // Polyak polish toward the smoothing lower bound f* >= F_tau - tau ln T
    const double ln_t = std::log(static_cast<double>(prob.z_u.size()));
    double target = f_tau_last - 1.5 * tau_last * ln_t;
    double fbest = 0.0;
    polish(prob, y, target, cfg.polish_iters, scale, &fbest, &iters);

    CertificateResult cert{};
    if (cfg.run_certificate) {
        cert = kkt_certificate(prob, y, cfg.rel_obj_tol, cfg.feas_tol);
        for (int round = 0; round < cfg.certificate_rounds &&
                            cert.residual_rel > cfg.certificate_tol && iters < cfg.max_iters;
             ++round) {
            target = fbest * (1.0 - 1e-9) - 1e-13 * scale;
            polish(prob, y, target, cfg.polish_iters, scale, &fbest, &iters);
            cert = kkt_certificate(prob, y, cfg.rel_obj_tol, cfg.feas_tol);
        }
        sol.report.certified = cert.residual_rel <= cfg.certificate_tol;
        sol.report.certificate_residual = cert.residual_rel;
        sol.report.boundary_active = cert.boundary;
    } else {
        sol.report.boundary_active =
            y.squaredNorm() >= energy_budget - std::max(cfg.feas_tol, 1e-12 * energy_budget);
    }

    // the start point (c = 0 unless jittered) is feasible, so never return
    // anything worse than it
    if (fbest > sol.report.objective_before) {
        y.setZero();
        fbest = sol.report.objective_before;
    }

    const Eigen::VectorXcd c_compact = prob.c_of(y);
    for (int i = 0; i < prob.r; ++i) sol.c[pos[i]] = c_compact[i];
    sol.report.objective_after = fbest;
    sol.report.c_energy = y.squaredNorm();
    sol.report.iterations = iters;
    fill_recheck(sol.c);
    return sol;
}

int tr_data_bit_count(const GridConfig& config, int r, int k) {
    const int pilots = (config.n + 1) / 2;
    const int data_res =
        (config.m - 1) * (config.n - r) + (config.n - pilots - r / 2);
    return data_res * k;
}

TrSlot build_tr_slot(std::span<const std::uint8_t> bits, const GridConfig& config, int r,
                     const QamConstellation& constellation, const PeakSolverConfig& solver,
                     RngStream& rng, int threads) {
    config.validate();
    const int k = constellation.bits_per_symbol;
    const int expected_bits = tr_data_bit_count(config, r, k);
    if (static_cast<int>(bits.size()) != expected_bits)
        throw DimensionError("build_tr_slot: expected " + std::to_string(expected_bits) +
                             " bits, got " + std::to_string(bits.size()));

    TrSlot slot;
    slot.grid = insert_pilots(make_resource_grid(config), config, rng);
    slot.placement = sample_prt_placement(config, r, rng);

    for (int m = 0; m < config.m; ++m)
        for (int p : slot.placement.sets[m]) slot.grid.set_role(m, p, ReRole::Prt);

    std::size_t bit_pos = 0;
    for (int m = 0; m < config.m; ++m) {
        for (int p = 0; p < config.n; ++p) {
            if (slot.grid.role(m, p) != ReRole::Data) continue;
            slot.grid.values(m, p) = constellation.map_bits(bits.subspan(bit_pos, k));
            bit_pos += k;
        }
    }

    const IdftOperator idft(config.n, solver.oversampling);
    const IdftOperator recheck(config.n, solver.oversampling * 4);
    slot.reports.resize(config.m);
    std::vector<Eigen::VectorXcd> reductions(config.m);
    parallel_for(config.m, threads, [&](std::size_t m) {
        const auto mi = static_cast<int>(m);
        const Eigen::VectorXcd u = slot.grid.values.row(mi).transpose();
        const auto& prts = slot.placement.sets[m];
        const double budget = static_cast<double>(prts.size());
        auto res = minimize_peak(u, prts, budget, solver, idft, &recheck);
        reductions[m] = std::move(res.c);
        slot.reports[m] = res.report;
    });
    for (int m = 0; m < config.m; ++m)
        slot.grid.values.row(m) += reductions[m].transpose();
    return slot;
}

}  // namespace ofdmwave
