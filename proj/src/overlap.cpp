#include "spdcwg/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "spdcwg/error.hpp"

namespace spdcwg {

namespace {

constexpr double kEnergyTol = 1e-3;  // relative omega_p mismatch allowed

char axis_letter(Polarization p) { return p == Polarization::TE ? 'x' : 'y'; }

std::pair<double, double> layer_bounds(const LayerStack& st, int layer) {
    double z0 = st.base_z_um;
    for (int i = 1; i < layer; ++i) z0 += st.layers[static_cast<std::size_t>(i)].thickness_um;
    return {z0, z0 + st.layers[static_cast<std::size_t>(layer)].thickness_um};
}

Eigen::VectorXd nodes(double a, double b, double h) {
    const int n = std::max(2, static_cast<int>(std::ceil((b - a) / h)) + 1);
    return Eigen::VectorXd::LinSpaced(n, a, b);
}

double trapezoid(const Eigen::VectorXd& f, double dx) {
    return (f.sum() - 0.5 * (f[0] + f[f.size() - 1])) * dx;
}

std::optional<EimMode> try_branch_mode(const MaterialLibrary& lib, const ModeBranch& br,
                                       double lambda_um) {
    try {
        return branch_mode_at(lib, br, lambda_um);
    } catch (const Error&) {
        return std::nullopt;
    }
}

const std::shared_ptr<const CrossSection>& branch_cs(const ModeBranch& br) {
    if (br.samples.empty()) raise(Errc::BadConfig, "branch carries no samples");
    return br.samples.front().cs;
}

}  // namespace

SpectralAxes SpectralAxes::from_lambda_window(double lambda_s_lo_um, double lambda_s_hi_um,
                                              double lambda_i_lo_um, double lambda_i_hi_um,
                                              int n_s, int n_i) {
    if (!(lambda_s_lo_um > 0.0 && lambda_s_lo_um < lambda_s_hi_um) ||
        !(lambda_i_lo_um > 0.0 && lambda_i_lo_um < lambda_i_hi_um) || n_s < 2 || n_i < 2)
        raise(Errc::BadConfig, "axes need ascending positive wavelength windows and >= 2 samples");
    SpectralAxes a;
    a.omega_s = Eigen::VectorXd::LinSpaced(n_s, omega_from_lambda(lambda_s_hi_um),
                                           omega_from_lambda(lambda_s_lo_um));
    a.omega_i = Eigen::VectorXd::LinSpaced(n_i, omega_from_lambda(lambda_i_hi_um),
                                           omega_from_lambda(lambda_i_lo_um));
    return a;
}

int OverlapGrid::invalid_count() const {
    int n = 0;
    for (Eigen::Index i = 0; i < values.rows(); ++i)
        for (Eigen::Index j = 0; j < values.cols(); ++j)
            if (!std::isfinite(values(i, j))) ++n;
    return n;
}

double effective_overlap(const EimMode& mode_s, const EimMode& mode_i, const EimMode& mode_p,
                         double quad_spacing_um) {
    if (!mode_s.cs || mode_s.cs != mode_i.cs || mode_s.cs != mode_p.cs)
        raise(Errc::GridMismatch, "the three modes belong to different cross-sections");
    const CrossSection& cs = *mode_s.cs;

    const double ws = omega_from_lambda(mode_s.lambda_um);
    const double wi = omega_from_lambda(mode_i.lambda_um);
    const double wp = omega_from_lambda(mode_p.lambda_um);
    if (std::abs(ws + wi - wp) > kEnergyTol * wp)
        raise(Errc::GridMismatch, "pump wavelength violates energy conservation");

    struct Active {
        const Chi2Entry* entry;
        double coef;
    };
    std::vector<Active> active;
    for (const auto& entry : cs.chi2) {
        if (entry.value == 0.0) continue;
        if (entry.component[0] != axis_letter(mode_s.pol) ||
            entry.component[1] != axis_letter(mode_i.pol) ||
            entry.component[2] != axis_letter(mode_p.pol))
            continue;
        active.push_back({&entry, entry.value * (entry.qpm ? 2.0 / pi : 1.0)});
    }
    if (active.empty()) {
        std::fprintf(stderr,
                     "warning: no chi2 component couples polarizations %c%c%c in '%s'; "
                     "overlap is zero\n",
                     axis_letter(mode_s.pol), axis_letter(mode_i.pol), axis_letter(mode_p.pol),
                     cs.label.c_str());
        return 0.0;
    }

    const double h =
        (quad_spacing_um > 0.0 ? quad_spacing_um : cs.grid.spacing_um / 8.0);
    const auto edges = cs.region_edges();

    double total = 0.0;
    for (const auto& a : active) {
        const int r = cs.region_index(a.entry->region);
        const auto& region = cs.regions[static_cast<std::size_t>(r)];

        double xpart = 0.0;
        if (cs.is_slab()) {
            Eigen::VectorXd x0(1);
            x0[0] = 0.0;
            xpart = mode_s.field_x(x0)[0] * mode_i.field_x(x0)[0] * mode_p.field_x(x0)[0];
        } else {
            if (region.semi_infinite)
                raise(Errc::BadConfig, "chi2 region '" + region.name +
                                           "' is laterally unbounded; the overlap integral "
                                           "diverges");
            const Eigen::VectorXd xn = nodes(edges[static_cast<std::size_t>(r) - 1],
                                             edges[static_cast<std::size_t>(r)], h);
            const Eigen::VectorXd prod = (mode_s.field_x(xn).array() *
                                          mode_i.field_x(xn).array() *
                                          mode_p.field_x(xn).array())
                                             .matrix();
            xpart = trapezoid(prod, xn[1] - xn[0]);
        }

        const auto [z0, z1] = layer_bounds(region.stack, a.entry->layer);
        const Eigen::VectorXd zn = nodes(z0, z1, h);
        const Eigen::VectorXd prod = (mode_s.field_y(r, zn).array() *
                                      mode_i.field_y(r, zn).array() *
                                      mode_p.field_y(r, zn).array())
                                         .matrix();
        total += a.coef * xpart * trapezoid(prod, zn[1] - zn[0]);
    }
    return total;
}

OverlapGrid overlap_grid(const MaterialLibrary& lib, const ModeBranch& branch_s,
                         const ModeBranch& branch_i, const ModeBranch& branch_p,
                         const SpectralAxes& axes) {
    const auto& cs = branch_cs(branch_s);
    if (cs != branch_cs(branch_i) || cs != branch_cs(branch_p))
        raise(Errc::GridMismatch, "branches belong to different cross-sections");

    OverlapGrid g;
    g.omega_s = axes.omega_s;
    g.omega_i = axes.omega_i;
    g.branch_s = branch_s.id;
    g.branch_i = branch_i.id;
    g.branch_p = branch_p.id;
    const Eigen::Index ns = axes.omega_s.size(), ni = axes.omega_i.size();
    g.values.setConstant(ns, ni, std::numeric_limits<double>::quiet_NaN());

    std::vector<std::optional<EimMode>> ms(static_cast<std::size_t>(ns));
    std::vector<std::optional<EimMode>> mi(static_cast<std::size_t>(ni));
    for (Eigen::Index i = 0; i < ns; ++i)
        ms[static_cast<std::size_t>(i)] =
            try_branch_mode(lib, branch_s, lambda_from_omega(axes.omega_s[i]));
    for (Eigen::Index j = 0; j < ni; ++j)
        mi[static_cast<std::size_t>(j)] =
            try_branch_mode(lib, branch_i, lambda_from_omega(axes.omega_i[j]));

    // Anti-diagonals of uniform axes share the pump frequency up to rounding;
    // keying the cache on a 1e-12 rad/fs quantum collapses them to one solve.
    std::map<long long, std::optional<EimMode>> mp;
    for (Eigen::Index i = 0; i < ns; ++i) {
        if (!ms[static_cast<std::size_t>(i)]) continue;
        for (Eigen::Index j = 0; j < ni; ++j) {
            if (!mi[static_cast<std::size_t>(j)]) continue;
            const double wp = axes.omega_s[i] + axes.omega_i[j];
            const long long key = std::llround(wp * 1e12);
            auto it = mp.find(key);
            if (it == mp.end())
                it = mp.emplace(key, try_branch_mode(lib, branch_p, lambda_from_omega(wp))).first;
            if (!it->second) continue;
            try {
                g.values(i, j) = effective_overlap(*ms[static_cast<std::size_t>(i)],
                                                   *mi[static_cast<std::size_t>(j)], *it->second);
            } catch (const Error&) {
            }
        }
    }
    for (Eigen::Index i = 0; i < ns; ++i)
        for (Eigen::Index j = 0; j < ni; ++j)
            if (std::isfinite(g.values(i, j)))
                g.peak = std::max(g.peak, std::abs(g.values(i, j)));
    return g;
}

OverlapLine overlap_line(const MaterialLibrary& lib, const ModeBranch& branch_s,
                         const ModeBranch& branch_i, const ModeBranch& branch_p,
                         const Eigen::VectorXd& omega_s, double omega_p) {
    const auto& cs = branch_cs(branch_s);
    if (cs != branch_cs(branch_i) || cs != branch_cs(branch_p))
        raise(Errc::GridMismatch, "branches belong to different cross-sections");

    OverlapLine line;
    line.omega_p = omega_p;
    line.omega_s = omega_s;
    line.branch_s = branch_s.id;
    line.branch_i = branch_i.id;
    line.branch_p = branch_p.id;
    line.values.setConstant(omega_s.size(), std::numeric_limits<double>::quiet_NaN());

    const EimMode pump = branch_mode_at(lib, branch_p, lambda_from_omega(omega_p));
    for (Eigen::Index i = 0; i < omega_s.size(); ++i) {
        const auto s = try_branch_mode(lib, branch_s, lambda_from_omega(omega_s[i]));
        if (!s) continue;
        const auto id = try_branch_mode(lib, branch_i, lambda_from_omega(omega_p - omega_s[i]));
        if (!id) continue;
        try {
            line.values[i] = effective_overlap(*s, *id, pump);
        } catch (const Error&) {
        }
    }
    for (Eigen::Index i = 0; i < omega_s.size(); ++i)
        if (std::isfinite(line.values[i]))
            line.peak = std::max(line.peak, std::abs(line.values[i]));
    return line;
}

double falling_edge_width_um(const Eigen::VectorXd& lambda_um, const Eigen::VectorXd& values) {
    if (lambda_um.size() != values.size() || lambda_um.size() < 3)
        raise(Errc::BadConfig, "edge width needs matching lambda/value samples");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) continue;
        lo = std::min(lo, values[i]);
        hi = std::max(hi, values[i]);
    }
    if (!(hi > lo)) raise(Errc::BadConfig, "edge width undefined on constant or empty data");
    const double v90 = lo + 0.9 * (hi - lo);
    const double v10 = lo + 0.1 * (hi - lo);

    auto crossing_below = [&](double level, Eigen::Index start) -> std::pair<double, Eigen::Index> {
        for (Eigen::Index i = start; i + 1 < values.size(); ++i) {
            if (!std::isfinite(values[i]) || !std::isfinite(values[i + 1])) continue;
            if (values[i] >= level && values[i + 1] < level) {
                const double t = (values[i] - level) / (values[i] - values[i + 1]);
                return {lambda_um[i] + t * (lambda_um[i + 1] - lambda_um[i]), i};
            }
        }
        raise(Errc::BadConfig, "no falling edge crosses the requested level");
    };

    const auto [l90, i90] = crossing_below(v90, 0);
    const auto [l10, i10] = crossing_below(v10, i90);
    (void)i10;
    return l10 - l90;
}

}  // namespace spdcwg
