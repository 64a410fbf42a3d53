#include "spdcwg/eim.hpp"

#include <algorithm>
#include <cmath>

#include "spdcwg/constants.hpp"
#include "spdcwg/error.hpp"

namespace spdcwg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t stack_layer(const ResolvedStack& s, double z) {
    const std::vector<double> ifs = s.interfaces();
    return std::upper_bound(ifs.begin(), ifs.end(), z) - ifs.begin();
}

double decay_rate(const SlabMode& m, bool top) {
    const double n_out = top ? m.stack().n.back() : m.stack().n.front();
    const double k0 = 2.0 * pi / m.lambda_um;
    return k0 * std::sqrt(std::max(m.n_eff * m.n_eff - n_out * n_out, 0.0));
}

// Weights of the power form.  Vertical factors solved with TM continuity are
// stored H-like and evaluated as e = H/n^2; the flux integrand n^2 e^2 then
// carries n^2 relative to e, i.e. 1/n^2 relative to the stored field.
std::vector<double> vertical_weights(const ResolvedStack& s, Polarization pol) {
    std::vector<double> w(s.n.size(), 1.0);
    if (pol == Polarization::TM)
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 / (s.n[i] * s.n[i]);
    return w;
}

std::vector<double> lateral_weights(const ResolvedStack& s, Polarization pol) {
    // pol is the 2D mode's polarization; the lateral solve uses the swapped
    // convention, so TE modes carry the TM-type lateral factor.
    return vertical_weights(s, pol == Polarization::TE ? Polarization::TM : Polarization::TE);
}

// z bounds of one layer of a stack (outer layers extend to infinity).
std::pair<double, double> layer_bounds(const LayerStack& stack, int layer) {
    const int nl = static_cast<int>(stack.layers.size());
    double lo = stack.base_z_um;
    for (int i = 1; i < layer; ++i) lo += stack.layers[i].thickness_um;
    if (layer == 0) return {-kInf, stack.base_z_um};
    if (layer == nl - 1) return {stack.top_z(), kInf};
    return {lo, lo + stack.layers[layer].thickness_um};
}

ParityHint classify_parity(const EimMode& m) {
    const CrossSection& cs = *m.cs;
    if (cs.cores.size() < 2) return ParityHint::uncoupled;
    std::vector<std::pair<double, const CoreBox*>> ranked;
    for (const CoreBox& c : cs.cores) ranked.emplace_back(mode_fraction(m, c), &c);
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& l, const auto& r) { return l.first > r.first; });
    const CoreBox& a = *ranked[0].second;
    const CoreBox& b = *ranked[1].second;
    if (ranked[1].first < 0.02) return ParityHint::uncoupled;
    auto center_value = [&](const CoreBox& box) {
        const int r = cs.region_index(box.region);
        auto [x0, x1] = m.region_span(r);
        const double x = std::isinf(x0) || std::isinf(x1) ? 0.0 : 0.5 * (x0 + x1);
        auto [z0, z1] = layer_bounds(cs.regions[r].stack, box.layer);
        return m.field(x, 0.5 * (z0 + z1));
    };
    const double s = center_value(a) * center_value(b);
    if (s > 0.0) return ParityHint::symmetric_like;
    if (s < 0.0) return ParityHint::antisymmetric_like;
    return ParityHint::uncoupled;
}

// Sign of the field at its intensity peak; separability makes the per-region
// peak the product of the lateral and vertical maxima, and outer regions peak
// at their inner edge.
double peak_sign(const EimMode& m) {
    const CrossSection& cs = *m.cs;
    const double h = cs.grid.spacing_um;
    const auto edges = cs.region_edges();
    const double z0 = cs.z_min(), z1 = cs.z_max();
    const int nz = std::max(2, static_cast<int>(std::ceil((z1 - z0) / h)) + 1);
    const Eigen::VectorXd zn = Eigen::VectorXd::LinSpaced(nz, z0, z1);

    double best = -1.0, sign = 1.0;
    for (int r = 0; r < static_cast<int>(cs.regions.size()); ++r) {
        Eigen::VectorXd xn(1);
        if (cs.is_slab())
            xn[0] = 0.0;
        else if (r == 0)
            xn[0] = edges.front();
        else if (r + 1 == static_cast<int>(cs.regions.size()))
            xn[0] = edges.back();
        else {
            const double a = edges[r - 1], b = edges[r];
            const int nx = std::max(2, static_cast<int>(std::ceil((b - a) / h)) + 1);
            xn = Eigen::VectorXd::LinSpaced(nx, a, b);
        }
        const Eigen::VectorXd X = m.field_x(xn);
        const Eigen::VectorXd Y = m.field_y(r, zn);
        Eigen::Index ix = 0, iz = 0;
        const double mx = X.cwiseAbs().maxCoeff(&ix);
        const double my = Y.cwiseAbs().maxCoeff(&iz);
        if (mx * my > best) {
            best = mx * my;
            sign = (X[ix] * Y[iz] >= 0.0) ? 1.0 : -1.0;
        }
    }
    return sign;
}

}  // namespace

const char* parity_name(ParityHint p) {
    switch (p) {
        case ParityHint::symmetric_like: return "symmetric-like";
        case ParityHint::antisymmetric_like: return "antisymmetric-like";
        default: return "uncoupled";
    }
}

const SlabMode& EimMode::vertical_profile(int region) const {
    return *parts[parts[region].donor].vertical;
}

std::pair<double, double> EimMode::region_span(int region) const {
    const std::vector<double> edges = cs->region_edges();
    const double lo = region == 0 ? -kInf : edges[region - 1];
    const double hi =
        region == static_cast<int>(edges.size()) ? kInf : edges[region];
    return {lo, hi};
}

double EimMode::field(double x, double z) const {
    const int r = cs->region_at(x);
    double fx = amplitude;
    if (lateral) {
        fx *= lateral->phi(x);
        if (pol == Polarization::TE) {
            const double nl = parts[r].n_lat;
            fx /= nl * nl;
        }
    }
    const SlabMode& y = vertical_profile(r);
    double fy = y.phi(z) * parts[r].y_norm;
    if (pol == Polarization::TM) {
        const double nz = y.stack().n[stack_layer(y.stack(), z)];
        fy /= nz * nz;
    }
    return fx * fy;
}

Eigen::VectorXd EimMode::field_x(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double fx = amplitude;
        if (lateral) {
            fx *= lateral->phi(x[i]);
            if (pol == Polarization::TE) {
                const double nl = parts[cs->region_at(x[i])].n_lat;
                fx /= nl * nl;
            }
        }
        out[i] = fx;
    }
    return out;
}

Eigen::VectorXd EimMode::field_y(int region, const Eigen::VectorXd& z) const {
    const SlabMode& y = vertical_profile(region);
    Eigen::VectorXd out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        double fy = y.phi(z[i]) * parts[region].y_norm;
        if (pol == Polarization::TM) {
            const double nz = y.stack().n[stack_layer(y.stack(), z[i])];
            fy /= nz * nz;
        }
        out[i] = fy;
    }
    return out;
}

std::vector<EimMode> solve_ridge_modes_eim(const MaterialLibrary& lib,
                                           const std::shared_ptr<const CrossSection>& cs,
                                           double lambda_um, Polarization pol,
                                           int scan_samples) {
    const int nr = static_cast<int>(cs->regions.size());
    std::vector<std::vector<SlabMode>> vm(nr);
    std::vector<double> lat_fallback(nr);
    int families = 0;
    for (int r = 0; r < nr; ++r) {
        const LateralRegion& region = cs->regions[r];
        const ResolvedStack vs = region.stack.resolve(lib, lambda_um, pol);
        vm[r] = solve_slab_modes(vs, lambda_um, pol, scan_samples);
        if (region.fallback_material) {
            lat_fallback[r] =
                lib.index(*region.fallback_material, OpticalAxis::isotropic, lambda_um);
        } else if (vm[r].empty()) {
            if (cs->is_slab()) return {};
            raise(Errc::EIMBreakdown, "region " + region.name +
                                          " has no vertical mode and no declared fallback");
        } else {
            lat_fallback[r] = std::max(vs.n.front(), vs.n.back());
        }
        families = std::max(families, static_cast<int>(vm[r].size()));
    }

    std::vector<EimMode> out;
    for (int k = 0; k < families; ++k) {
        std::vector<int> donor(nr);
        for (int r = 0; r < nr; ++r) {
            donor[r] = -1;
            for (int off = 0; off < nr; ++off) {
                if (r - off >= 0 && k < static_cast<int>(vm[r - off].size())) {
                    donor[r] = r - off;
                    break;
                }
                if (r + off < nr && k < static_cast<int>(vm[r + off].size())) {
                    donor[r] = r + off;
                    break;
                }
            }
        }

        auto assemble = [&](double n_eff, double residual, std::optional<SlabMode> lateral,
                            int order) {
            EimMode m;
            m.lambda_um = lambda_um;
            m.pol = pol;
            m.n_eff = n_eff;
            m.residual = residual;
            m.family = k;
            m.lateral_order = order;
            m.lateral = std::move(lateral);
            m.cs = cs;
            m.parts.resize(nr);
            std::vector<double> norms(nr, 0.0);
            for (int r = 0; r < nr; ++r) {
                EimMode::RegionPart& part = m.parts[r];
                part.donor = donor[r];
                if (k < static_cast<int>(vm[r].size())) {
                    part.vertical = vm[r][k];
                    part.n_lat = vm[r][k].n_eff;
                } else {
                    part.n_lat = lat_fallback[r];
                }
            }
            for (int r = 0; r < nr; ++r) {
                const int d = m.parts[r].donor;
                if (norms[d] == 0.0) {
                    const SlabMode& y = *m.parts[d].vertical;
                    norms[d] = 1.0 /
                               std::sqrt(mode_moment(y, y, vertical_weights(y.stack(), pol)));
                }
                m.parts[r].y_norm = norms[d];
            }
            double flux;
            if (m.lateral) {
                flux = n_eff * mode_moment(*m.lateral, *m.lateral,
                                           lateral_weights(m.lateral->stack(), pol));
            } else {
                flux = n_eff;
            }
            m.amplitude = 1.0 / std::sqrt(flux);
            if (peak_sign(m) < 0.0) m.amplitude = -m.amplitude;
            m.parity = classify_parity(m);
            return m;
        };

        if (cs->is_slab()) {
            if (k < static_cast<int>(vm[0].size()))
                out.push_back(assemble(vm[0][k].n_eff, vm[0][k].residual, std::nullopt, 0));
            continue;
        }

        ResolvedStack lat;
        lat.base_z_um = 0.0;
        for (int r = 0; r < nr; ++r) {
            lat.n.push_back(k < static_cast<int>(vm[r].size()) ? vm[r][k].n_eff
                                                               : lat_fallback[r]);
            if (r > 0 && r + 1 < nr) lat.d.push_back(cs->regions[r].width_um);
        }
        const std::vector<SlabMode> lat_modes =
            solve_slab_modes(lat, lambda_um, swapped(pol), scan_samples);
        for (std::size_t i = 0; i < lat_modes.size(); ++i)
            out.push_back(assemble(lat_modes[i].n_eff, lat_modes[i].residual, lat_modes[i],
                                   static_cast<int>(i)));
    }

    std::sort(out.begin(), out.end(),
              [](const EimMode& a, const EimMode& b) { return a.n_eff > b.n_eff; });
    return out;
}

double mode_fraction(const EimMode& m, const CoreBox& box) {
    const CrossSection& cs = *m.cs;
    const int r = cs.region_index(box.region);
    auto [z0, z1] = layer_bounds(cs.regions[r].stack, box.layer);
    const SlabMode& y = m.vertical_profile(r);
    const double ym =
        mode_moment(y, y, vertical_weights(y.stack(), m.pol), z0, z1) * m.parts[r].y_norm *
        m.parts[r].y_norm;
    double xm;
    if (m.lateral) {
        auto [x0, x1] = m.region_span(r);
        xm = mode_moment(*m.lateral, *m.lateral, lateral_weights(m.lateral->stack(), m.pol),
                         x0, x1);
    } else {
        xm = 1.0;
    }
    return m.n_eff * m.amplitude * m.amplitude * xm * ym;
}

double mode_inner_product(const EimMode& a, const EimMode& b) {
    if (a.cs.get() != b.cs.get() && a.cs->regions.size() != b.cs->regions.size())
        raise(Errc::BadConfig, "mode_inner_product: modes from different cross-sections");
    const int nr = static_cast<int>(a.parts.size());
    const double scale =
        std::sqrt(a.n_eff * b.n_eff) * a.amplitude * b.amplitude;
    double acc = 0.0;
    for (int r = 0; r < nr; ++r) {
        const SlabMode& ya = a.vertical_profile(r);
        const SlabMode& yb = b.vertical_profile(r);
        const double ym = mode_moment(ya, yb, vertical_weights(ya.stack(), a.pol)) *
                          a.parts[r].y_norm * b.parts[r].y_norm;
        double xm;
        if (a.lateral) {
            auto [x0, x1] = a.region_span(r);
            xm = mode_moment(*a.lateral, *b.lateral,
                             lateral_weights(a.lateral->stack(), a.pol), x0, x1);
        } else {
            xm = (r == 0) ? 1.0 : 0.0;
        }
        acc += xm * ym;
    }
    return scale * acc;
}

ModeGrid make_grid(const CrossSection& cs, const std::vector<const EimMode*>& modes,
                   double spacing_um) {
    const double spacing = spacing_um > 0.0 ? spacing_um : cs.grid.spacing_um;

    double core_w = 0.0, core_t = 0.0;
    for (const CoreBox& box : cs.cores) {
        const LateralRegion& region = cs.regions[cs.region_index(box.region)];
        if (!region.semi_infinite) core_w = std::max(core_w, region.width_um);
        const Layer& layer = region.stack.layers[box.layer];
        if (!layer.semi_infinite) core_t = std::max(core_t, layer.thickness_um);
    }
    for (const LateralRegion& region : cs.regions) {
        if (!region.semi_infinite && cs.cores.empty())
            core_w = std::max(core_w, region.width_um);
        for (const Layer& layer : region.stack.layers)
            if (!layer.semi_infinite && cs.cores.empty())
                core_t = std::max(core_t, layer.thickness_um);
    }
    core_w = std::max(core_w, 0.5);
    core_t = std::max(core_t, 0.1);

    const std::vector<double> edges = cs.region_edges();
    const double x_lo_s = edges.empty() ? 0.0 : edges.front();
    const double x_hi_s = edges.empty() ? 0.0 : edges.back();
    const double z_lo_s = cs.z_min();
    const double z_hi_s = cs.z_max();

    // Decay-driven padding: distance for the slowest given mode to fall
    // another 1e-4 past the structure edge.
    // One extra e-folding beyond the 1e-4 target keeps the boundary samples
    // under threshold even when an outer field lobe sits close to the peak.
    const double kDecades = -std::log(1e-4) + 1.0;
    double pad_xl = 0.0, pad_xr = 0.0, pad_zb = 0.0, pad_zt = 0.0;
    for (const EimMode* m : modes) {
        if (m->lateral) {
            pad_xl = std::max(pad_xl, kDecades / std::max(decay_rate(*m->lateral, false), 0.2));
            pad_xr = std::max(pad_xr, kDecades / std::max(decay_rate(*m->lateral, true), 0.2));
        }
        for (const EimMode::RegionPart& part : m->parts) {
            if (!part.vertical) continue;
            pad_zb = std::max(pad_zb, kDecades / std::max(decay_rate(*part.vertical, false), 0.2));
            pad_zt = std::max(pad_zt, kDecades / std::max(decay_rate(*part.vertical, true), 0.2));
        }
    }
    const double span_cap = 60.0;
    auto pad = [&](double spec, double decay) {
        return std::min(std::max(spec, decay), span_cap);
    };
    const double wf = cs.grid.window_factor;
    const double spec_x = std::max(0.0, 0.5 * (wf * core_w - (x_hi_s - x_lo_s)));
    const double spec_z = std::max(0.0, 0.5 * (wf * core_t - (z_hi_s - z_lo_s)));

    ModeGrid grid;
    auto fill_axis = [&](double lo, double hi) {
        const int n = std::max(2, static_cast<int>(std::ceil((hi - lo) / spacing)) + 1);
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
        return v;
    };
    if (cs.is_slab()) {
        grid.x = Eigen::VectorXd::Zero(1);
        grid.dx = 0.0;
    } else {
        const double lo = x_lo_s - pad(spec_x, pad_xl);
        const double hi = x_hi_s + pad(spec_x, pad_xr);
        grid.x = fill_axis(lo, hi);
        grid.dx = grid.x[1] - grid.x[0];
    }
    const double zlo = z_lo_s - pad(spec_z, pad_zb);
    const double zhi = z_hi_s + pad(spec_z, pad_zt);
    grid.z = fill_axis(zlo, zhi);
    grid.dz = grid.z[1] - grid.z[0];
    return grid;
}

ModeProfile materialize(const EimMode& m, const ModeGrid& grid) {
    ModeProfile p;
    p.grid = grid;
    p.e.resize(grid.z.size(), grid.x.size());
    const int nr = static_cast<int>(m.parts.size());
    std::vector<Eigen::VectorXd> columns(nr);
    std::vector<bool> have(nr, false);
    const Eigen::VectorXd fx = m.field_x(grid.x);
    for (Eigen::Index j = 0; j < grid.x.size(); ++j) {
        const int r = m.cs->region_at(grid.x[j]);
        if (!have[r]) {
            columns[r] = m.field_y(r, grid.z);
            have[r] = true;
        }
        p.e.col(j) = fx[j] * columns[r];
    }
    return p;
}

}  // namespace spdcwg
