#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spdcwg/branches.hpp"
#include "spdcwg/constants.hpp"
#include "spdcwg/eim.hpp"
#include "spdcwg/error.hpp"
#include "spdcwg/geometry.hpp"
#include "spdcwg/materials.hpp"
#include "spdcwg/overlap.hpp"

using namespace spdcwg;

namespace {

const MaterialLibrary& lib() {
    static MaterialLibrary l = MaterialLibrary::builtin();
    return l;
}

nlohmann::json fixture_doc(const std::string& name) {
    const std::string path = std::string(SPDCWG_REPO_DIR) + "/data/fixtures/" + name + ".json";
    return load_json_section(path, "structure");
}

std::shared_ptr<const CrossSection> fixture(const std::string& name) {
    return std::make_shared<CrossSection>(CrossSection::from_json(fixture_doc(name)));
}

std::shared_ptr<const CrossSection> from_doc(const nlohmann::json& doc) {
    return std::make_shared<CrossSection>(CrossSection::from_json(doc));
}

EimMode pick_by_fraction(const std::shared_ptr<const CrossSection>& cs, double lambda_um,
                         Polarization pol, const std::string& core) {
    const auto modes = solve_ridge_modes_eim(lib(), cs, lambda_um, pol);
    REQUIRE(!modes.empty());
    const CoreBox& box = cs->core(core);
    std::size_t best = 0;
    double best_f = -1.0;
    for (std::size_t k = 0; k < modes.size(); ++k) {
        const double f = mode_fraction(modes[k], box);
        if (f > best_f) {
            best_f = f;
            best = k;
        }
    }
    return modes[best];
}

struct Triple {
    EimMode sig, idl, pmp;
};

// Ridge modes satisfying 1/1.55 + 1/1.55 = 1/0.775 exactly, each picked as
// the strongest AlGaAs-core mode of its band.
Triple ridge_triple(const std::shared_ptr<const CrossSection>& cs) {
    return {pick_by_fraction(cs, 1.55, Polarization::TE, "core1"),
            pick_by_fraction(cs, 1.55, Polarization::TM, "core1"),
            pick_by_fraction(cs, 0.775, Polarization::TE, "core1")};
}

std::pair<double, double> layer_bounds(const LayerStack& st, int layer) {
    double z0 = st.base_z_um;
    for (int j = 1; j < layer; ++j) z0 += st.layers[j].thickness_um;
    return {z0, z0 + st.layers[layer].thickness_um};
}

Eigen::VectorXd cell_nodes(double a, double b, double h) {
    const int n = std::max(2, static_cast<int>(std::ceil((b - a) / h)) + 1);
    return Eigen::VectorXd::LinSpaced(n, a, b);
}

// Re-evaluates the overlap as a genuinely two-dimensional trapezoid sum over
// each tensor cell, never factorizing into line integrals, so the library's
// separable evaluation is checked against the full tensor-product quadrature
// it claims to equal.
double brute_overlap_2d(const EimMode& s, const EimMode& i, const EimMode& p, double h) {
    const CrossSection& cs = *s.cs;
    REQUIRE(!cs.is_slab());
    double total = 0.0;
    for (const auto& entry : cs.chi2) {
        const int r = cs.region_index(entry.region);
        const auto [x0, x1] = s.region_span(r);
        const auto [z0, z1] = layer_bounds(cs.regions[r].stack, entry.layer);
        const Eigen::VectorXd xs = cell_nodes(x0, x1, h);
        const Eigen::VectorXd zs = cell_nodes(z0, z1, h);
        const Eigen::VectorXd fx =
            s.field_x(xs).cwiseProduct(i.field_x(xs)).cwiseProduct(p.field_x(xs));
        const Eigen::VectorXd fz =
            s.field_y(r, zs).cwiseProduct(i.field_y(r, zs)).cwiseProduct(p.field_y(r, zs));
        double cell = 0.0;
        for (int ix = 0; ix < xs.size(); ++ix) {
            const double wx = (ix == 0 || ix == xs.size() - 1) ? 0.5 : 1.0;
            for (int iz = 0; iz < zs.size(); ++iz) {
                const double wz = (iz == 0 || iz == zs.size() - 1) ? 0.5 : 1.0;
                cell += wx * wz * fx[ix] * fz[iz];
            }
        }
        const double dx = (x1 - x0) / (xs.size() - 1);
        const double dz = (z1 - z0) / (zs.size() - 1);
        total += entry.value * (entry.qpm ? 2.0 / pi : 1.0) * cell * dx * dz;
    }
    return total;
}

struct RidgeBranches {
    std::shared_ptr<const CrossSection> cs;
    std::vector<ModeBranch> te, tm, pump;
};

const RidgeBranches& ridge_branches() {
    static RidgeBranches rb = [] {
        RidgeBranches r;
        r.cs = fixture("algaas_asi");
        r.te = track_branches(lib(), r.cs, 1.50, 1.66, Polarization::TE, 2);
        r.tm = track_branches(lib(), r.cs, 1.46, 1.62, Polarization::TM, 1);
        r.pump = track_branches(lib(), r.cs, 0.7745, 0.7755, Polarization::TE, 4);
        return r;
    }();
    return rb;
}

// The loading-strip pump band holds two strip modes above the AlGaAs core
// mode, so the pump branch is the one most confined to the core.
const ModeBranch& ridge_pump_branch() {
    const RidgeBranches& rb = ridge_branches();
    const CoreBox& box = rb.cs->core("core1");
    std::size_t best = 0;
    double best_f = -1.0;
    for (std::size_t b = 0; b < rb.pump.size(); ++b) {
        const double f = rb.pump[b].core_fraction(0.775, box);
        if (f > best_f) {
            best_f = f;
            best = b;
        }
    }
    return rb.pump[best];
}

double interp_crossing(const Eigen::VectorXd& x, const Eigen::VectorXd& v, double level, int i0,
                       int i1) {
    const int step = i1 > i0 ? 1 : -1;
    for (int i = i0; i != i1; i += step) {
        const double a = v[i], b = v[i + step];
        if ((a - level) * (b - level) <= 0.0 && a != b)
            return x[i] + (x[i + step] - x[i]) * (level - a) / (b - a);
    }
    REQUIRE(false);
    return 0.0;
}

}  // namespace

TEST_CASE("falling edge width of synthetic profiles") {
    const int n = 101;
    Eigen::VectorXd lam = Eigen::VectorXd::LinSpaced(n, 1.50, 1.60);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) {
        const double t = (lam[i] - 1.52) / 0.05;
        v[i] = 1.0 - std::clamp(t, 0.0, 1.0);
    }
    CHECK(falling_edge_width_um(lam, v) == doctest::Approx(0.040).epsilon(1e-9));

    Eigen::VectorXd flat = Eigen::VectorXd::Constant(n, 0.7);
    CHECK_THROWS_AS((void)falling_edge_width_um(lam, flat), Error);
    CHECK_THROWS_AS((void)falling_edge_width_um(lam.head(2), v.head(2)), Error);
    CHECK_THROWS_AS((void)falling_edge_width_um(lam, v.head(n - 1)), Error);
}

TEST_CASE("tensor entries that couple no field component give zero") {
    nlohmann::json doc = fixture_doc("algaas_asi");

    doc["chi2"][0]["value"] = 0.0;
    auto cs_zero = from_doc(doc);
    Triple t0 = ridge_triple(cs_zero);
    CHECK(effective_overlap(t0.sig, t0.idl, t0.pmp) == 0.0);

    doc["chi2"][0]["value"] = 1.0;
    doc["chi2"][0]["component"] = "yyy";
    auto cs_yyy = from_doc(doc);
    Triple ty = ridge_triple(cs_yyy);
    CHECK(effective_overlap(ty.sig, ty.idl, ty.pmp) == 0.0);
}

TEST_CASE("overlap is linear in the tensor value") {
    auto cs = fixture("algaas_asi");
    Triple t = ridge_triple(cs);
    const double base = effective_overlap(t.sig, t.idl, t.pmp);
    REQUIRE(base > 0.0);

    nlohmann::json doc = fixture_doc("algaas_asi");
    doc["chi2"][0]["value"] = 3.7;
    auto cs_scaled = from_doc(doc);
    Triple ts = ridge_triple(cs_scaled);
    CHECK(effective_overlap(ts.sig, ts.idl, ts.pmp) ==
          doctest::Approx(3.7 * base).epsilon(1e-12));
}

TEST_CASE("swapping signal and idler with transposed component letters is neutral") {
    auto cs = fixture("algaas_asi");
    Triple t = ridge_triple(cs);
    const double base = effective_overlap(t.sig, t.idl, t.pmp);

    nlohmann::json doc = fixture_doc("algaas_asi");
    doc["chi2"][0]["component"] = "yxx";
    auto cs_sw = from_doc(doc);
    Triple ts = ridge_triple(cs_sw);
    CHECK(effective_overlap(ts.idl, ts.sig, ts.pmp) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("separable evaluation equals a two-dimensional trapezoid sum") {
    auto cs = fixture("algaas_asi");
    Triple t = ridge_triple(cs);
    const double h = 0.0025;
    const double fast = effective_overlap(t.sig, t.idl, t.pmp, h);
    const double brute = brute_overlap_2d(t.sig, t.idl, t.pmp, h);
    CHECK(fast == doctest::Approx(brute).epsilon(1e-10));
}

TEST_CASE("default quadrature spacing is inside the convergence plateau") {
    auto cs = fixture("algaas_asi");
    Triple t = ridge_triple(cs);
    const double coarse = effective_overlap(t.sig, t.idl, t.pmp);
    const double fine = effective_overlap(t.sig, t.idl, t.pmp, cs->grid.spacing_um / 16.0);
    const double rel = std::abs(coarse - fine) / std::abs(fine);
    CHECK(rel < 1e-4);
    CHECK(rel > 1e-13);
}

TEST_CASE("foreign modes and non-conserving frequencies are rejected") {
    auto cs_a = fixture("algaas_asi");
    auto cs_b = fixture("algaas_asi");
    Triple ta = ridge_triple(cs_a);
    Triple tb = ridge_triple(cs_b);
    try {
        effective_overlap(ta.sig, tb.idl, ta.pmp);
        FAIL("expected GridMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::GridMismatch);
    }

    EimMode pump_at_signal = pick_by_fraction(cs_a, 1.55, Polarization::TE, "core1");
    try {
        effective_overlap(ta.sig, ta.idl, pump_at_signal);
        FAIL("expected GridMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::GridMismatch);
    }
}

TEST_CASE("nonlinearity in a laterally unbounded region is rejected") {
    nlohmann::json doc = fixture_doc("algaas_asi");
    doc["regions"][0]["stack"] =
        R"x([["semi", "AlGaAs(0.9)"], [0.5, "SiO2"], ["semi", "air"]])x"_json;
    doc["chi2"].push_back(R"({"region": "left", "layer": 1, "component": "xyx", "value": 1.0})"_json);
    auto cs = from_doc(doc);
    Triple t = ridge_triple(cs);
    try {
        effective_overlap(t.sig, t.idl, t.pmp);
        FAIL("expected BadConfig");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::BadConfig);
    }
}

TEST_CASE("line across the strip transfer window falls on the long-wavelength side") {
    const RidgeBranches& rb = ridge_branches();
    const ModeBranch& pump = ridge_pump_branch();

    const int n = 61;
    const double omega_p = omega_from_lambda(0.775);
    Eigen::VectorXd omega_s(n), lam_s(n);
    for (int i = 0; i < n; ++i) {
        lam_s[i] = 1.535 + (1.625 - 1.535) * i / (n - 1);
        omega_s[i] = omega_from_lambda(lam_s[i]);
    }
    const OverlapLine line = overlap_line(lib(), rb.te[1], rb.tm[0], pump, omega_s, omega_p);

    CHECK(line.branch_s == rb.te[1].id);
    CHECK(line.branch_p == pump.id);
    CHECK(line.peak == doctest::Approx(3.11e-3).epsilon(0.07));
    for (int i = 0; i < n; ++i) {
        REQUIRE(std::isfinite(line.values[i]));
        CHECK(line.values[i] >= 0.0);
        CHECK(line.lambda_s(i) == doctest::Approx(lam_s[i]).epsilon(1e-12));
        if (lam_s[i] <= 1.570) CHECK(line.values[i] > 0.9 * line.peak);
    }
    CHECK(line.values[n - 1] < 0.1 * line.peak);

    const double width = falling_edge_width_um(lam_s, line.values);
    CHECK(width > 0.015);
    CHECK(width < 0.020);
}

TEST_CASE("grid samples follow energy conservation and mark failed solves") {
    const RidgeBranches& rb = ridge_branches();
    const ModeBranch& pump = ridge_pump_branch();

    const SpectralAxes axes = SpectralAxes::from_lambda_window(1.549, 1.551, 1.549, 1.551, 3, 3);
    CHECK(axes.omega_s[0] < axes.omega_s[2]);
    const OverlapGrid g = overlap_grid(lib(), rb.te[1], rb.tm[0], pump, axes);
    CHECK(g.lambda_s(0) == doctest::Approx(1.551).epsilon(1e-12));
    CHECK(g.invalid_count() == 0);
    REQUIRE(g.peak > 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            REQUIRE(g.valid(i, j));
            CHECK(g.values(i, j) >= 0.9 * g.peak);
        }

    // Widening the signal window pushes corner samples past the tracked pump
    // band, which must surface as invalid samples rather than zeros.
    const SpectralAxes wide = SpectralAxes::from_lambda_window(1.545, 1.551, 1.549, 1.551, 3, 3);
    const OverlapGrid gw = overlap_grid(lib(), rb.te[1], rb.tm[0], pump, wide);
    CHECK(gw.invalid_count() == 5);
    CHECK(gw.peak > 0.0);
    int finite = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (gw.valid(i, j)) {
                ++finite;
                CHECK(gw.values(i, j) > 0.0);
            }
    CHECK(finite == 4);
}

TEST_CASE("isolated ridge line stays flat without the loading strip") {
    auto cs = fixture("algaas_isolated");
    auto te = track_branches(lib(), cs, 1.49, 1.64, Polarization::TE, 1);
    auto tm = track_branches(lib(), cs, 1.46, 1.62, Polarization::TM, 1);
    auto pump = track_branches(lib(), cs, 0.7745, 0.7755, Polarization::TE, 1);
    REQUIRE(pump[0].core_fraction(0.775, cs->core("core1")) > 0.9);

    const int n = 21;
    Eigen::VectorXd omega_s(n);
    for (int i = 0; i < n; ++i)
        omega_s[i] = omega_from_lambda(1.50 + (1.63 - 1.50) * i / (n - 1));
    const OverlapLine line =
        overlap_line(lib(), te[0], tm[0], pump[0], omega_s, omega_from_lambda(0.775));

    CHECK(line.peak == doctest::Approx(3.13e-3).epsilon(0.07));
    double vmin = 1e300;
    for (int i = 0; i < n; ++i) {
        REQUIRE(std::isfinite(line.values[i]));
        CHECK(line.values[i] > 0.0);
        vmin = std::min(vmin, line.values[i]);
    }
    CHECK(vmin > 0.95 * line.peak);
}

TEST_CASE("modes confined to different cores overlap far less than co-located ones") {
    auto cs = fixture("five_layer_slab");
    const double lam_s = 1.50, lam_i = 1.60;
    const double lam_p = 1.0 / (1.0 / lam_s + 1.0 / lam_i);
    EimMode sig_strip = pick_by_fraction(cs, lam_s, Polarization::TE, "core1");
    EimMode sig_core = pick_by_fraction(cs, lam_s, Polarization::TE, "core2");
    EimMode idl = pick_by_fraction(cs, lam_i, Polarization::TM, "core2");
    EimMode pmp = pick_by_fraction(cs, lam_p, Polarization::TE, "core2");

    const double cross = effective_overlap(sig_strip, idl, pmp);
    const double co = effective_overlap(sig_core, idl, pmp);
    REQUIRE(co > 0.02);
    CHECK(std::abs(cross) < 0.01 * co);
}

TEST_CASE("two staggered strips bracket a conjugate-line passband") {
    auto cs = fixture("three_core_slab");
    auto br = track_branches(lib(), cs, 1.46, 1.71, Polarization::TE, 3);
    const double lc1 = coupling_wavelength(br[1], br[2]);
    const double lc2 = coupling_wavelength(br[0], br[1]);
    CHECK(lc1 == doctest::Approx(1.5170).epsilon(2e-3));
    CHECK(lc2 == doctest::Approx(1.6417).epsilon(2e-3));

    // Choosing omega_p as the sum of the two crossing frequencies maps each
    // passband edge onto the other, so signal and idler share both cutoffs.
    const double omega_p = omega_from_lambda(lc1) + omega_from_lambda(lc2);
    EimMode pmp =
        pick_by_fraction(cs, lambda_from_omega(omega_p), Polarization::TE, "core2");

    const int n = 49;
    Eigen::VectorXd lam_i(n), vals(n);
    for (int i = 0; i < n; ++i) {
        lam_i[i] = 1.47 + (1.70 - 1.47) * i / (n - 1);
        const double lam_s = lambda_from_omega(omega_p - omega_from_lambda(lam_i[i]));
        EimMode sig = branch_mode_at(lib(), br[1], lam_s);
        EimMode idl = branch_mode_at(lib(), br[1], lam_i[i]);
        vals[i] = effective_overlap(sig, idl, pmp);
    }

    const double peak = vals.cwiseAbs().maxCoeff();
    CHECK(peak == doctest::Approx(0.2175).epsilon(0.1));
    for (int i = 0; i < n; ++i) {
        CHECK(vals[i] >= 0.0);
        if (lam_i[i] > 1.53 && lam_i[i] < 1.63) CHECK(vals[i] > 0.9 * peak);
    }
    CHECK(vals[0] < 0.01 * peak);
    CHECK(vals[n - 1] < 0.01 * peak);

    const int mid = n / 2;
    const double rise = interp_crossing(lam_i, vals, 0.5 * peak, mid, 0);
    const double fall = interp_crossing(lam_i, vals, 0.5 * peak, mid, n - 1);
    CHECK(std::abs(rise - lc1) < 0.006);
    CHECK(std::abs(fall - lc2) < 0.006);
}
