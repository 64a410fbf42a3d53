#include "spdcwg/branches.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spdcwg/error.hpp"

namespace spdcwg {

namespace {

std::size_t nearest_index(const std::vector<double>& xs, double x) {
    const auto it = std::lower_bound(xs.begin(), xs.end(), x);
    if (it == xs.begin()) return 0;
    if (it == xs.end()) return xs.size() - 1;
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    return (x - xs[hi - 1] <= xs[hi] - x) ? hi - 1 : hi;
}

struct Assignment {
    std::vector<int> pick;     // candidate index per branch
    std::vector<double> gain;  // overlap of the pick
    bool ambiguous = false;
};

// Exhaustive max-total-overlap matching; branch counts are tiny.  A branch is
// ambiguous when its two best contenders are serious (>0.5) and closer than
// the margin, which is the anti-crossing coarse-step signature.
Assignment assign(const std::vector<EimMode>& prev, const std::vector<EimMode>& cand,
                  double margin) {
    const int nb = static_cast<int>(prev.size());
    const int nc = static_cast<int>(cand.size());
    std::vector<std::vector<double>> o(nb, std::vector<double>(nc));
    for (int b = 0; b < nb; ++b)
        for (int c = 0; c < nc; ++c) o[b][c] = std::abs(mode_inner_product(prev[b], cand[c]));

    Assignment out;
    out.pick.assign(nb, -1);
    out.gain.assign(nb, 0.0);

    std::vector<int> pick(nb, -1), best(nb, -1);
    std::vector<bool> used(nc, false);
    double best_total = -1.0;
    auto rec = [&](int b, double total, auto&& self) -> void {
        if (b == nb) {
            if (total > best_total) {
                best_total = total;
                best = pick;
            }
            return;
        }
        for (int c = 0; c < nc; ++c) {
            if (used[c]) continue;
            used[c] = true;
            pick[b] = c;
            self(b + 1, total + o[b][c], self);
            used[c] = false;
        }
    };
    rec(0, 0.0, rec);

    out.pick = best;
    for (int b = 0; b < nb; ++b) {
        out.gain[b] = o[b][best[b]];
        double top1 = 0.0, top2 = 0.0;
        for (int c = 0; c < nc; ++c) {
            if (o[b][c] > top1) {
                top2 = top1;
                top1 = o[b][c];
            } else {
                top2 = std::max(top2, o[b][c]);
            }
        }
        if (top2 > 0.5 && top1 - top2 < margin) out.ambiguous = true;
    }
    return out;
}

}  // namespace

const EimMode& ModeBranch::nearest(double lambda_um) const {
    return samples[nearest_index(lambdas, lambda_um)];
}

double ModeBranch::core_fraction(double lambda_um, const CoreBox& box) const {
    return mode_fraction(nearest(lambda_um), box);
}

std::vector<ModeBranch> track_branches(const MaterialLibrary& lib,
                                       const std::shared_ptr<const CrossSection>& cs,
                                       double lambda_lo_um, double lambda_hi_um,
                                       Polarization pol, int n_branches,
                                       const TrackOptions& opt) {
    if (!(lambda_lo_um > 0.0) || !(lambda_hi_um > lambda_lo_um))
        raise(Errc::BadConfig, "branch tracking needs an increasing positive wavelength range");
    if (n_branches < 1) raise(Errc::BadConfig, "n_branches must be >= 1");
    if (opt.initial_samples < 2) raise(Errc::BadConfig, "initial_samples must be >= 2");

    auto solve = [&](double lam) {
        return solve_ridge_modes_eim(lib, cs, lam, pol, opt.scan_samples);
    };

    std::vector<ModeBranch> branches(static_cast<std::size_t>(n_branches));
    const std::vector<EimMode> first = solve(lambda_lo_um);
    if (static_cast<int>(first.size()) < n_branches)
        raise(Errc::NoGuidedMode, "only " + std::to_string(first.size()) + " modes at " +
                                      std::to_string(lambda_lo_um) + " um, need " +
                                      std::to_string(n_branches));
    std::vector<EimMode> front(first.begin(), first.begin() + n_branches);
    for (int b = 0; b < n_branches; ++b) {
        branches[b].id = b;
        branches[b].pol = pol;
        branches[b].lambdas.push_back(lambda_lo_um);
        branches[b].samples.push_back(front[b]);
    }

    double front_lambda = lambda_lo_um;
    // The solver's peak gauge flips when a mode's intensity peak migrates
    // between cores, so each accepted sample is re-signed to stay continuous
    // with its predecessor; the first sample anchors the branch gauge.
    auto accept = [&](double lam, std::vector<EimMode> picked) {
        for (int b = 0; b < n_branches; ++b) {
            if (mode_inner_product(front[static_cast<std::size_t>(b)],
                                   picked[static_cast<std::size_t>(b)]) < 0.0)
                picked[static_cast<std::size_t>(b)].amplitude =
                    -picked[static_cast<std::size_t>(b)].amplitude;
            branches[b].lambdas.push_back(lam);
            branches[b].samples.push_back(picked[b]);
        }
        front = std::move(picked);
        front_lambda = lam;
    };

    auto advance = [&](double lam_to, auto&& self) -> void {
        const std::vector<EimMode> cand = solve(lam_to);
        const bool can_split = lam_to - front_lambda > 2.0 * opt.lambda_floor_um;
        if (static_cast<int>(cand.size()) < n_branches) {
            if (!can_split)
                raise(Errc::NoGuidedMode,
                      "a tracked branch has no continuation at " + std::to_string(lam_to) + " um");
            const double mid = 0.5 * (front_lambda + lam_to);
            self(mid, self);
            self(lam_to, self);
            return;
        }
        const Assignment asg = assign(front, cand, opt.ambiguity_margin);
        const double worst = *std::min_element(asg.gain.begin(), asg.gain.end());
        std::vector<EimMode> picked;
        picked.reserve(static_cast<std::size_t>(n_branches));
        for (int b = 0; b < n_branches; ++b)
            picked.push_back(cand[static_cast<std::size_t>(asg.pick[b])]);
        // Raw profile overlap follows the diabatic continuation straight
        // across a narrow anti-crossing when the step clears the whole mixing
        // window, silently swapping the n_eff order of the branches.  The
        // physical branches are the adiabatic (order-preserving) curves, so an
        // order flip forces refinement; only at the floor is it accepted as a
        // genuine crossing of uncoupled modes.
        const bool ordered = std::is_sorted(
            picked.begin(), picked.end(),
            [](const EimMode& a, const EimMode& b) { return a.n_eff > b.n_eff; });
        // A per-step n_eff jump larger than the local inter-branch gap can
        // step over a narrower anti-crossing entirely, so the step is refined
        // until the jump resolves the gap.
        double max_jump = 0.0;
        for (int b = 0; b < n_branches; ++b)
            max_jump = std::max(max_jump, std::abs(picked[static_cast<std::size_t>(b)].n_eff -
                                                   front[static_cast<std::size_t>(b)].n_eff));
        double min_gap = std::numeric_limits<double>::infinity();
        for (int b = 0; b + 1 < n_branches; ++b)
            min_gap = std::min(min_gap, std::abs(picked[static_cast<std::size_t>(b)].n_eff -
                                                 picked[static_cast<std::size_t>(b) + 1].n_eff));
        const bool smooth = n_branches < 2 || max_jump <= min_gap;
        if (!asg.ambiguous && worst > opt.overlap_floor && ((ordered && smooth) || !can_split)) {
            accept(lam_to, std::move(picked));
            return;
        }
        if (!can_split) {
            if (asg.ambiguous)
                raise(Errc::BranchAmbiguity, "competing assignments within the overlap margin at " +
                                                 std::to_string(lam_to) + " um");
            raise(Errc::BranchAmbiguity, "branch continuity unattainable at the 0.05 nm floor near " +
                                             std::to_string(lam_to) + " um");
        }
        const double mid = 0.5 * (front_lambda + lam_to);
        self(mid, self);
        self(lam_to, self);
    };

    for (int i = 1; i < opt.initial_samples; ++i) {
        const double lam =
            lambda_lo_um + (lambda_hi_um - lambda_lo_um) * i / (opt.initial_samples - 1);
        advance(lam, advance);
    }

    for (auto& b : branches) {
        std::vector<double> n(b.samples.size());
        for (std::size_t i = 0; i < b.samples.size(); ++i) n[i] = b.samples[i].n_eff;
        b.interp = CubicSpline(b.lambdas, std::move(n));
    }
    return branches;
}

double coupling_wavelength(const ModeBranch& a, const ModeBranch& b) {
    const double lo = std::max(a.interp.x_front(), b.interp.x_front());
    const double hi = std::min(a.interp.x_back(), b.interp.x_back());
    if (!(hi > lo)) raise(Errc::BadConfig, "branches share no wavelength range");

    auto gap = [&](double lam) { return std::abs(a.n_eff(lam) - b.n_eff(lam)); };

    const int n = 2000;
    int imin = 0;
    double gmin = std::numeric_limits<double>::infinity();
    double gmax = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double g = gap(lo + (hi - lo) * i / n);
        if (g < gmin) {
            gmin = g;
            imin = i;
        }
        gmax = std::max(gmax, g);
    }
    if (gmax - gmin < 1e-3 * std::max(gmax, 1e-12))
        raise(Errc::NoAnticrossing, "branch gap is flat over the common range");
    if (imin == 0 || imin == n)
        raise(Errc::NoAnticrossing, "branch gap is monotonic over the common range");

    double x1 = lo + (hi - lo) * (imin - 1) / n;
    double x2 = lo + (hi - lo) * (imin + 1) / n;
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double m1 = x2 - inv_phi * (x2 - x1);
    double m2 = x1 + inv_phi * (x2 - x1);
    double g1 = gap(m1), g2 = gap(m2);
    while (x2 - x1 > 1e-6) {
        if (g1 < g2) {
            x2 = m2;
            m2 = m1;
            g2 = g1;
            m1 = x2 - inv_phi * (x2 - x1);
            g1 = gap(m1);
        } else {
            x1 = m1;
            m1 = m2;
            g1 = g2;
            m2 = x1 + inv_phi * (x2 - x1);
            g2 = gap(m2);
        }
    }
    return 0.5 * (x1 + x2);
}

EimMode branch_mode_at(const MaterialLibrary& lib, const ModeBranch& br, double lambda_um,
                       int scan_samples) {
    if (br.samples.empty()) raise(Errc::BadConfig, "branch carries no samples");
    if (lambda_um < br.interp.x_front() - 1e-9 || lambda_um > br.interp.x_back() + 1e-9)
        raise(Errc::FrequencyOutOfRange,
              "branch tracked over [" + std::to_string(br.interp.x_front()) + ", " +
                  std::to_string(br.interp.x_back()) + "] um, requested " +
                  std::to_string(lambda_um));
    const EimMode& ref = br.nearest(lambda_um);
    const auto cands = solve_ridge_modes_eim(lib, ref.cs, lambda_um, br.pol, scan_samples);
    const EimMode* best = nullptr;
    double best_gain = 0.0;
    for (const auto& cand : cands) {
        const double gain = mode_inner_product(ref, cand);
        if (std::abs(gain) > std::abs(best_gain)) {
            best_gain = gain;
            best = &cand;
        }
    }
    if (!best || std::abs(best_gain) <= 0.5)
        raise(Errc::BranchAmbiguity,
              "no mode at " + std::to_string(lambda_um) + " um resembles branch " +
                  std::to_string(br.id));
    EimMode out = *best;
    if (best_gain < 0.0) out.amplitude = -out.amplitude;
    return out;
}

}  // namespace spdcwg
