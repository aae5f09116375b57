#include "kfp/bs.hpp"

#include "kfp/errors.hpp"
#include "kfp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <thread>
#include <utility>

namespace kfp {

namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double threshold_distance(double lambda) {
    const double nearest = std::max(0.0, std::round(lambda));
    return std::abs(lambda - nearest);
}

bool family_potential(const Potential& pot) {
    return pot.family() == "power_law" || pot.family() == "gaussian_bump";
}

void check_admissible(const Potential& pot, double s) {
    if (!(s > 0.5)) throw ValidationError("coupling weight: s must exceed 1/2");
    if (pot.family() == "gaussian_bump") return; // super-polynomial decay: any s > 1/2
    const double cap = 0.5 * (1.0 + pot.rho());
    if (!(s < cap)) {
        std::ostringstream msg;
        msg << "coupling weight: s = " << s << " must stay below (1 + rho)/2 = " << cap
            << " or <x>^{2s} V' stops decaying";
        throw ValidationError(msg.str());
    }
}

int scan_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::min(8u, std::max(1u, hw)));
}

struct GoldenResult {
    double x;
    double f;
    int evals;
};

// Golden-section minimization; the sigma_min landscape near a characteristic
// value is a |lambda - lambda*|-shaped trough, so unimodality holds on any
// bracket around a single crossing.
template <class F>
GoldenResult golden_min(F f, double a, double b, double xtol, int max_eval) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    int evals = 2;
    while (b - a > xtol && evals < max_eval) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
        ++evals;
    }
    return f1 <= f2 ? GoldenResult{x1, f1, evals} : GoldenResult{x2, f2, evals};
}

double sigma_min_of(const MatrixXcd& K) {
    const MatrixXcd A = MatrixXcd::Identity(K.rows(), K.cols()) + K;
    return smallest_singular(A).sigma;
}

// ||<x>^s u|| / ||u|| over the x-major (node, mode) layout: the norm of the
// physical state behind the weighted vector u, relative to u itself.  Its
// behaviour under window enlargement separates extended states from
// square-integrable ones.
double growth_stat(const VectorXcd& u, const Grid& grid, int N, double s) {
    const VectorXd wx = grid.bracket_pow(s);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
        const double blk = u.segment(i * N, N).squaredNorm();
        num += wx(i) * wx(i) * blk;
        den += blk;
    }
    return std::sqrt(num / den);
}

Grid enlarged_window(const Grid& grid, double factor) {
    const GridSpec& sp = grid.spec();
    const double xc = 0.5 * (sp.x_min + sp.x_max);
    const double half = 0.5 * (sp.x_max - sp.x_min);
    const double scaled = factor * grid.size();
    const int m2 = static_cast<int>(std::lround(scaled));
    if (std::abs(scaled - m2) > 1e-9 || m2 % 2 != 0)
        throw ValidationError("window growth: factor must scale the node count to an even integer");
    return Grid(GridSpec{xc - factor * half, xc + factor * half, m2});
}

BoundaryParams side_params(double lambda, int sign, double s, const std::vector<double>& deltas) {
    BoundaryParams q;
    q.lambda = lambda;
    q.sign = sign;
    q.s = s;
    q.deltas = deltas;
    return q;
}

} // namespace

Eigen::MatrixXcd bs_operator_from(const Eigen::MatrixXcd& R0w, const HermiteTruncation& trunc,
                                  const Grid& grid, const Potential& pot, double s) {
    check_admissible(pot, s);
    const int N = trunc.N;
    const int M = grid.size();
    const int n = M * N;
    if (R0w.rows() != n || R0w.cols() != n)
        throw ValidationError("coupling: operator dimension must equal node count x truncation size");
    // (-<x>^{2s} V') (x) d/dv acts blockwise: column block i' picks up the
    // scalar a(i') on the right-multiplied mode derivative.
    const VectorXd a = -(grid.bracket_pow(2.0 * s).array() * pot.derivative().array()).matrix();
    const MatrixXcd D = trunc.dv_matrix().cast<std::complex<double>>();
    MatrixXcd K(n, n);
    for (int i = 0; i < M; ++i)
        K.middleCols(i * N, N).noalias() = a(i) * (R0w.middleCols(i * N, N) * D);
    return K;
}

Eigen::MatrixXcd bs_operator(const HermiteTruncation& trunc, const Grid& grid,
                             const CutoffSpec& cutoff, const Potential& pot,
                             const BoundaryParams& p) {
    check_admissible(pot, p.s);
    const MatrixXcd R0w = free_resolvent_boundary(trunc, grid, cutoff, p);
    return bs_operator_from(R0w, trunc, grid, pot, p.s);
}

std::string classification_label(double sigma_plus, double sigma_minus, double overlap,
                                 double growth_ratio, const ClassifyParams& p) {
    const bool out = sigma_plus < p.detection_threshold;
    const bool in = sigma_minus < p.detection_threshold;
    if (!out && !in) return "regular";
    if (out && !in) return "outgoing_resonance";
    if (in && !out) return "incoming_resonance";
    // Two-sided: an embedded candidate must present the same state on both
    // sides and a bounded norm-growth ratio; anything else is a resonance on
    // the side that is closer to singular.  A NaN growth ratio (diagnostic
    // unavailable) deliberately fails the bounded test.
    if (overlap >= p.overlap_min && growth_ratio <= p.growth_embedded) return "embedded_candidate";
    return sigma_plus <= sigma_minus ? "outgoing_resonance" : "incoming_resonance";
}

Classification classify(const HermiteTruncation& trunc, const Grid& grid,
                        const CutoffSpec& cutoff, const Potential& pot, double lambda,
                        const ClassifyParams& cp) {
    Classification c;
    if (threshold_distance(lambda) < cp.exclusion_radius) {
        c.label = "threshold_excluded";
        c.sigma_plus = kNaN;
        c.sigma_minus = kNaN;
        c.diagnostics = "threshold_window";
        return c;
    }
    check_admissible(pot, cp.s);
    const int n = grid.size() * trunc.N;
    VectorXcd u_plus, u_minus;
    for (int sg : {+1, -1}) {
        const MatrixXcd K =
            bs_operator(trunc, grid, cutoff, pot, side_params(lambda, sg, cp.s, cp.deltas));
        const MatrixXcd A = MatrixXcd::Identity(n, n) + K;
        const SmallestSV sv = smallest_singular(A);
        if (sg > 0) {
            c.sigma_plus = sv.sigma;
            u_plus = sv.right;
        } else {
            c.sigma_minus = sv.sigma;
            u_minus = sv.right;
        }
    }
    c.overlap = std::abs(u_plus.dot(u_minus));
    const bool hit_plus = c.sigma_plus < cp.detection_threshold;
    const bool hit_minus = c.sigma_minus < cp.detection_threshold;
    std::ostringstream diag;
    diag << "sigma_plus=" << c.sigma_plus << ";sigma_minus=" << c.sigma_minus
         << ";overlap=" << c.overlap;
    if (hit_plus && hit_minus) {
        const int sg = (c.sigma_plus <= c.sigma_minus) ? +1 : -1;
        const VectorXcd& u = (sg > 0) ? u_plus : u_minus;
        if (family_potential(pot)) {
            const double r_base = growth_stat(u, grid, trunc.N, cp.s);
            const Grid big = enlarged_window(grid, cp.window_factor);
            const Potential pot_big =
                Potential::make(pot.family(), pot.coupling(), pot.rho(), big);
            const MatrixXcd K_big = bs_operator(trunc, big, cutoff, pot_big,
                                                side_params(lambda, sg, cp.s, cp.deltas));
            const int nb = big.size() * trunc.N;
            const MatrixXcd A_big = MatrixXcd::Identity(nb, nb) + K_big;
            const VectorXcd u_big = smallest_singular(A_big).right;
            const double r_big = growth_stat(u_big, big, trunc.N, cp.s);
            c.growth_ratio = r_big / r_base;
            diag << ";growth_ratio=" << c.growth_ratio;
        } else {
            c.growth_ratio = kNaN;
            diag << ";flag=growth_unavailable_for_sampled_potential";
        }
    }
    c.label = classification_label(c.sigma_plus, c.sigma_minus, c.overlap, c.growth_ratio, cp);
    c.null_vector = (c.sigma_plus <= c.sigma_minus) ? u_plus : u_minus;
    c.diagnostics = diag.str();
    return c;
}

ScanOutcome resonance_scan(const HermiteTruncation& trunc, const Grid& grid,
                           const CutoffSpec& cutoff, const Potential& pot,
                           const ScanParams& sp) {
    if (!(sp.lambda_min > 0.0) || !(sp.lambda_max > sp.lambda_min))
        throw ValidationError("scan window must satisfy 0 < lambda_min < lambda_max");
    if (sp.steps < 3) throw ValidationError("scan needs at least 3 grid points");
    if (sp.sign != 1 && sp.sign != -1) throw ValidationError("scan sign must be +1 or -1");
    if (!(sp.detection_threshold > 0.0) || !(sp.survival_cap > 0.0))
        throw ValidationError("scan thresholds must be positive");
    if (cutoff.l <= sp.lambda_max || cutoff.plateau_r <= sp.lambda_max)
        throw ValidationError("scan window exceeds the thresholds retained by the cutoff");
    check_admissible(pot, sp.s);

    const int n = grid.size() * trunc.N;
    const double step = (sp.lambda_max - sp.lambda_min) / (sp.steps - 1);

    ScanOutcome out;
    out.points.resize(sp.steps);
    parallel_for(sp.steps, scan_threads(sp.threads), [&](int idx) {
        const double lam = sp.lambda_min + idx * step;
        ScanPoint pt;
        pt.lambda = lam;
        pt.sign = sp.sign;
        if (threshold_distance(lam) < sp.exclusion_radius) {
            pt.sigma_min = kNaN;
            pt.norm_k = kNaN;
            pt.classification = "threshold_excluded";
        } else {
            const MatrixXcd K =
                bs_operator(trunc, grid, cutoff, pot, side_params(lam, sp.sign, sp.s, sp.deltas));
            pt.sigma_min = sigma_min_of(K);
            pt.norm_k = operator_norm(K);
            pt.classification = "regular";
        }
        out.points[idx] = pt;
    });

    auto sigma_at = [&](double lam) {
        const MatrixXcd K =
            bs_operator(trunc, grid, cutoff, pot, side_params(lam, sp.sign, sp.s, sp.deltas));
        return sigma_min_of(K);
    };

    for (int i = 1; i + 1 < sp.steps; ++i) {
        const ScanPoint& left = out.points[i - 1];
        const ScanPoint& mid = out.points[i];
        const ScanPoint& right = out.points[i + 1];
        if (!std::isfinite(left.sigma_min) || !std::isfinite(mid.sigma_min) ||
            !std::isfinite(right.sigma_min))
            continue;
        if (!(mid.sigma_min < left.sigma_min && mid.sigma_min <= right.sigma_min)) continue;
        if (!(mid.sigma_min < sp.refine_trigger)) {
            std::ostringstream note;
            note << "local_minimum_not_refined lambda=" << mid.lambda
                 << " sigma=" << mid.sigma_min << " above_trigger=" << sp.refine_trigger;
            out.notes.push_back(note.str());
            continue;
        }
        const GoldenResult hit = golden_min(sigma_at, left.lambda, right.lambda, 1e-8, 48);
        if (!(hit.f < sp.detection_threshold)) {
            std::ostringstream note;
            note << "local_minimum_refined lambda=" << hit.x << " sigma=" << hit.f
                 << " above_threshold=" << sp.detection_threshold;
            out.notes.push_back(note.str());
            continue;
        }
        Detection d;
        d.lambda = hit.x;
        d.sign = sp.sign;
        d.sigma_min = hit.f;
        std::ostringstream diag;
        diag << "bracket=[" << left.lambda << "," << right.lambda
             << "];golden_evals=" << hit.evals;
        if (family_potential(pot)) {
            const HermiteTruncation trunc_fine(trunc.N + 8);
            const Grid grid_fine(
                GridSpec{grid.spec().x_min, grid.spec().x_max, 2 * grid.size()});
            const Potential pot_fine =
                Potential::make(pot.family(), pot.coupling(), pot.rho(), grid_fine);
            const MatrixXcd K_fine =
                bs_operator(trunc_fine, grid_fine, cutoff, pot_fine,
                            side_params(hit.x, sp.sign, sp.s, sp.deltas));
            d.sigma_fine = sigma_min_of(K_fine);
            diag << ";sigma_fine=" << d.sigma_fine;
            if (d.sigma_fine < sp.survival_cap) {
                d.verified = true;
                ClassifyParams cp;
                cp.s = sp.s;
                cp.exclusion_radius = sp.exclusion_radius;
                // The category is structural; judge the two sides against the
                // survival cap so a few lost digits of sigma on either side
                // cannot flip a two-sided hit into a one-sided label.
                cp.detection_threshold = sp.survival_cap;
                cp.deltas = sp.deltas;
                const Classification c = classify(trunc, grid, cutoff, pot, hit.x, cp);
                d.classification = c.label;
                diag << ";classify:" << c.diagnostics;
            } else {
                d.verified = false;
                d.classification = "regular";
                diag << ";flag=not_reproduced_at_refined_discretization";
            }
        } else {
            d.verified = false;
            d.classification = "regular";
            d.sigma_fine = kNaN;
            diag << ";flag=refinement_unavailable_for_sampled_potential";
        }
        d.diagnostics = diag.str();
        out.detections.push_back(d);
    }
    return out;
}

Eigen::MatrixXcd perturbed_resolvent_boundary(const HermiteTruncation& trunc, const Grid& grid,
                                              const CutoffSpec& cutoff, const Potential& pot,
                                              const BoundaryParams& p, double near_singular_tol) {
    const MatrixXcd R0w = free_resolvent_boundary(trunc, grid, cutoff, p);
    const MatrixXcd K = bs_operator_from(R0w, trunc, grid, pot, p.s);
    const int n = static_cast<int>(R0w.rows());
    const MatrixXcd A = MatrixXcd::Identity(n, n) + K;
    const double sigma = smallest_singular(A).sigma;
    if (sigma < near_singular_tol) {
        std::ostringstream msg;
        msg << "perturbed boundary value: 1 + K is numerically singular (sigma_min = " << sigma
            << " < " << near_singular_tol << ") at lambda = " << p.lambda
            << "; classify this lambda instead of inverting";
        throw NumericalError(msg.str());
    }
    return A.partialPivLu().solve(R0w);
}

SyntheticResonance synthetic_resonance(const HermiteTruncation& trunc, const Grid& grid,
                                       const CutoffSpec& cutoff, const Potential& probe,
                                       double lambda_lo, double lambda_hi, double s, int sign,
                                       int coarse_points, double im_tol, int max_iter) {
    if (!(lambda_lo > 0.0) || !(lambda_hi > lambda_lo))
        throw ValidationError("continuation window must satisfy 0 < lo < hi");
    if (coarse_points < 3) throw ValidationError("continuation needs at least 3 coarse points");
    if (!family_potential(probe))
        throw ValidationError("continuation needs a family potential to rescale the coupling");
    if (probe.coupling() == 0.0)
        throw ValidationError("continuation probe coupling must be nonzero");

    SyntheticResonance res;
    const int n = grid.size() * trunc.N;

    auto K_at = [&](double lam) {
        ++res.evaluations;
        return bs_operator(trunc, grid, cutoff, probe, side_params(lam, sign, s, {1e-2, 1e-3, 1e-4}));
    };
    auto branch_at = [&](const MatrixXcd& K, std::complex<double> guess) {
        const auto pairs = eigs_near_shift(K, guess, 1);
        if (pairs.empty()) throw NumericalError("continuation: eigenvalue solver returned nothing");
        const RitzPair& rp = pairs.front();
        if (rp.residual > 1e-7 * (1.0 + std::abs(rp.value))) {
            std::ostringstream msg;
            msg << "continuation: branch tracking lost (residual " << rp.residual << ")";
            throw NumericalError(msg.str());
        }
        return rp.value;
    };

    // Coarse sweep: seed with the dominant eigenvalue, then follow the branch
    // by shifting to the previous value.
    std::vector<double> lams(coarse_points);
    std::vector<std::complex<double>> mus(coarse_points);
    for (int i = 0; i < coarse_points; ++i) {
        lams[i] = lambda_lo + i * (lambda_hi - lambda_lo) / (coarse_points - 1);
        if (threshold_distance(lams[i]) < 0.02)
            throw ValidationError("continuation window must stay clear of integer thresholds");
    }
    for (int i = 0; i < coarse_points; ++i) {
        const MatrixXcd K = K_at(lams[i]);
        std::complex<double> guess;
        if (i == 0) {
            VectorXcd v = seeded_vector(n, 12345u);
            v.normalize();
            std::complex<double> mu = 0.0;
            for (int it = 0; it < 400; ++it) {
                const VectorXcd w = K * v;
                const double nw = w.norm();
                if (nw == 0.0)
                    throw NumericalError("continuation: probe operator annihilated the start vector");
                const std::complex<double> mu_new = v.dot(w);
                const bool settled =
                    it > 20 && std::abs(mu_new - mu) < 1e-12 * (1.0 + std::abs(mu_new));
                mu = mu_new;
                v = w / nw;
                if (settled) break;
            }
            // nudge off the eigenvalue so the shifted solve stays regular
            guess = mu * (1.0 + 1e-6) + std::complex<double>(1e-12, 0.0);
        } else {
            guess = mus[i - 1];
        }
        mus[i] = branch_at(K, guess);
    }

    int bracket = -1;
    for (int i = 0; i + 1 < coarse_points; ++i) {
        if (std::signbit(mus[i].imag()) != std::signbit(mus[i + 1].imag())) {
            bracket = i;
            break;
        }
    }
    if (bracket < 0)
        throw NumericalError(
            "continuation: tracked branch has no real-axis crossing in the window; "
            "widen the window or change the probe");

    // Illinois iteration on Im mu(lambda); the mu endpoints stay genuine so the
    // branch guess interpolates honestly, only the bracketing weights decay.
    double la = lams[bracket], lb = lams[bracket + 1];
    std::complex<double> ma = mus[bracket], mb = mus[bracket + 1];
    double fa = ma.imag(), fb = mb.imag();
    double lm = la;
    std::complex<double> mm = ma;
    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
        double lnew = lb - fb * (lb - la) / (fb - fa);
        const double lo = std::min(la, lb), hi = std::max(la, lb);
        if (!std::isfinite(lnew) || lnew <= lo || lnew >= hi) lnew = 0.5 * (la + lb);
        const MatrixXcd K = K_at(lnew);
        const double t = (lnew - la) / (lb - la);
        mm = branch_at(K, ma + t * (mb - ma));
        lm = lnew;
        const double fm = mm.imag();
        if (std::abs(fm) < im_tol * std::max(1.0, std::abs(mm))) {
            converged = true;
            break;
        }
        if ((fm > 0.0) == (fb > 0.0)) {
            lb = lnew;
            fb = fm;
            mb = mm;
            fa *= 0.5;
        } else {
            la = lb;
            fa = fb;
            ma = mb;
            lb = lnew;
            fb = fm;
            mb = mm;
        }
    }
    if (!converged)
        throw NumericalError("continuation: real-axis crossing did not converge");
    if (!(std::abs(mm.real()) > 1e-3 * std::abs(mm)))
        throw NumericalError(
            "continuation: branch crosses near the origin; coupling rescale is ill-conditioned");

    res.g_star = -probe.coupling() / mm.real();
    res.lambda_star = lm;
    res.mu = mm;
    return res;
}

} // namespace kfp
