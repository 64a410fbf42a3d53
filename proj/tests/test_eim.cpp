#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "spdcwg/eim.hpp"
#include "spdcwg/error.hpp"
#include "spdcwg/geometry.hpp"
#include "spdcwg/materials.hpp"
#include "spdcwg/slab.hpp"

using namespace spdcwg;

namespace {

const MaterialLibrary& lib() {
    static MaterialLibrary l = MaterialLibrary::builtin();
    return l;
}

std::shared_ptr<const CrossSection> fixture(const std::string& name) {
    const std::string path = std::string(SPDCWG_REPO_DIR) + "/data/fixtures/" + name + ".json";
    return std::make_shared<CrossSection>(
        CrossSection::from_json(load_json_section(path, "structure")));
}

std::vector<EimMode> te_modes(const std::shared_ptr<const CrossSection>& cs, double lam) {
    return solve_ridge_modes_eim(lib(), cs, lam, Polarization::TE);
}

// Minimum of the gap between two adjacent supermodes by ternary search; the
// mixing window of a weak anti-crossing is ~1 nm wide, so localization checks
// at the crossing need the minimum itself, not a rounded wavelength.
double min_gap_lambda(const std::shared_ptr<const CrossSection>& cs, double lo, double hi,
                      int i, int j) {
    for (int it = 0; it < 60; ++it) {
        const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        auto g = [&](double lam) {
            const auto ms = te_modes(cs, lam);
            REQUIRE(static_cast<int>(ms.size()) > j);
            return ms[i].n_eff - ms[j].n_eff;
        };
        if (g(m1) < g(m2))
            hi = m2;
        else
            lo = m1;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("ridge fixture parses with regions, cores and chi2 intact") {
    auto cs = fixture("algaas_asi");
    REQUIRE(cs->regions.size() == 3);
    CHECK(cs->regions[0].semi_infinite);
    CHECK(cs->regions[2].semi_infinite);
    CHECK(cs->regions[1].name == "ridge");
    CHECK(cs->regions[1].width_um == doctest::Approx(1.6));
    CHECK(cs->regions[1].stack.layers.size() == 5);
    CHECK_FALSE(cs->is_slab());

    const auto edges = cs->region_edges();
    REQUIRE(edges.size() == 2);
    CHECK(edges[0] == doctest::Approx(0.0));
    CHECK(edges[1] == doctest::Approx(1.6));
    CHECK(cs->region_at(-1.0) == 0);
    CHECK(cs->region_at(0.8) == 1);
    CHECK(cs->region_at(2.0) == 2);

    CHECK(cs->core("core1").layer == 1);
    CHECK(cs->core("core2").layer == 3);
    CHECK_THROWS_AS(cs->core("nope"), Error);
    REQUIRE(cs->chi2.size() == 1);
    CHECK(cs->chi2[0].component == "xyx");
    CHECK(cs->chi2[0].qpm);
    CHECK(cs->grid.spacing_um == doctest::Approx(0.02));
}

TEST_CASE("cross-section validation rejects malformed structures") {
    const auto base = R"({
      "regions": [
        {"name": "slab", "width_um": "semi", "base_z_um": 0.0,
         "stack": [["semi", "SiO2"], [0.3, "a-Si"], ["semi", "SiO2"]]}
      ],
      "cores": [{"name": "core1", "region": "slab", "layer": 1}],
      "chi2": [{"region": "slab", "layer": 1, "component": "xyx", "value": 1.0}]
    })"_json;

    CHECK_NOTHROW(CrossSection::from_json(base));

    auto bad = base;
    bad["regions"][0]["stack"][0] = {0.5, "SiO2"};
    CHECK_THROWS_AS(CrossSection::from_json(bad), Error);

    bad = base;
    bad["regions"][0]["stack"][1] = {-0.3, "a-Si"};
    CHECK_THROWS_AS(CrossSection::from_json(bad), Error);

    bad = base;
    bad["chi2"][0]["layer"] = 2;  // semi-infinite outer layer cannot host chi2
    CHECK_THROWS_AS(CrossSection::from_json(bad), Error);

    bad = base;
    bad["cores"][0]["layer"] = 7;
    CHECK_THROWS_AS(CrossSection::from_json(bad), Error);

    bad = base;
    bad["cores"][0]["region"] = "ghost";
    CHECK_THROWS_AS(CrossSection::from_json(bad), Error);

    bad = base;
    bad["regions"].push_back(bad["regions"][0]);
    bad["regions"][1]["width_um"] = 1.0;
    CHECK_THROWS_AS(CrossSection::from_json(bad), Error);  // duplicate name

    bad = base;
    bad["chi2"][0]["component"] = "xq";
    CHECK_THROWS_AS(CrossSection::from_json(bad), Error);
}

TEST_CASE("a laterally uniform cross-section reproduces the plain slab solve exactly") {
    auto cs = fixture("five_layer_slab");
    REQUIRE(cs->is_slab());
    for (Polarization pol : {Polarization::TE, Polarization::TM}) {
        const auto eim = solve_ridge_modes_eim(lib(), cs, 1.55, pol);
        const auto direct =
            solve_slab_modes(cs->regions[0].stack.resolve(lib(), 1.55, pol), 1.55, pol);
        REQUIRE(eim.size() == direct.size());
        for (std::size_t i = 0; i < eim.size(); ++i) CHECK(eim[i].n_eff == direct[i].n_eff);
    }
}

TEST_CASE("ridge effective indices are stable regression values") {
    const auto ms = te_modes(fixture("algaas_asi"), 1.55);
    REQUIRE(ms.size() == 6);
    CHECK(ms[0].n_eff == doctest::Approx(3.121326386275).epsilon(1e-7));
    CHECK(ms[1].n_eff == doctest::Approx(3.116624260015).epsilon(1e-7));
    CHECK(std::is_sorted(ms.begin(), ms.end(),
                         [](const EimMode& a, const EimMode& b) { return a.n_eff > b.n_eff; }));
}

TEST_CASE("mode indices respect guidance bounds and report tiny residuals") {
    auto ridge = fixture("algaas_asi");
    for (double lam : {1.50, 1.55, 1.65}) {
        for (Polarization pol : {Polarization::TE, Polarization::TM}) {
            const double n_strip = lib().index("a-Si", OpticalAxis::isotropic, lam);
            const double n_side = lib().index("AlGaAs(0.9)", OpticalAxis::isotropic, lam);
            const auto ms = solve_ridge_modes_eim(lib(), ridge, lam, pol);
            REQUIRE(!ms.empty());
            for (const auto& m : ms) {
                CHECK(m.n_eff < n_strip);
                CHECK(m.n_eff > n_side);
                CHECK(std::abs(m.residual) < 1e-10);
                CHECK(m.pol == pol);
            }
        }
    }
}

TEST_CASE("solver sampling resolution does not move the roots") {
    auto cs = fixture("algaas_asi");
    const auto coarse = solve_ridge_modes_eim(lib(), cs, 1.55, Polarization::TE, 4000);
    const auto fine = solve_ridge_modes_eim(lib(), cs, 1.55, Polarization::TE, 9000);
    REQUIRE(coarse.size() == fine.size());
    for (std::size_t i = 0; i < coarse.size(); ++i)
        CHECK(std::abs(coarse[i].n_eff - fine[i].n_eff) < 1e-9);
}

TEST_CASE("modes are unit-norm and mutually orthogonal under the declared inner product") {
    for (const char* name : {"algaas_asi", "five_layer_slab", "three_core_slab"}) {
        auto cs = fixture(name);
        const auto ms = te_modes(cs, 1.55);
        REQUIRE(!ms.empty());
        for (std::size_t i = 0; i < ms.size(); ++i) {
            CHECK(mode_inner_product(ms[i], ms[i]) == doctest::Approx(1.0).epsilon(1e-9));
            for (std::size_t j = i + 1; j < ms.size(); ++j)
                CHECK(std::abs(mode_inner_product(ms[i], ms[j])) < 1e-3);
        }
    }
}

TEST_CASE("the lower ridge branch hands its power from the AlGaAs core to the a-Si strip") {
    auto cs = fixture("algaas_asi");

    const auto below = te_modes(cs, 1.50);
    REQUIRE(below.size() >= 2);
    CHECK(mode_fraction(below[1], cs->core("core1")) > 0.8);
    CHECK(mode_fraction(below[0], cs->core("core2")) > 0.9);

    const auto above = te_modes(cs, 1.65);
    REQUIRE(above.size() >= 2);
    CHECK(mode_fraction(above[1], cs->core("core2")) > 0.8);
    CHECK(mode_fraction(above[0], cs->core("core1")) > 0.8);
}

TEST_CASE("ridge supermodes at the anti-crossing carry definite parity") {
    auto cs = fixture("algaas_asi");
    const double lc = min_gap_lambda(cs, 1.57, 1.60, 0, 1);
    CHECK(lc == doctest::Approx(1.58391).epsilon(2e-4));
    const auto at = te_modes(cs, lc);
    CHECK(at[0].parity == ParityHint::symmetric_like);
    CHECK(at[1].parity == ParityHint::antisymmetric_like);
    const auto far = te_modes(cs, 1.50);
    CHECK(far[0].parity == ParityHint::uncoupled);
    CHECK(far[1].parity == ParityHint::uncoupled);
}

TEST_CASE("coupled slab supermodes split 50/50 between the cores at the crossing") {
    auto cs = fixture("five_layer_slab");
    const double lc = min_gap_lambda(cs, 1.57, 1.60, 0, 1);
    const auto ms = te_modes(cs, lc);
    REQUIRE(ms.size() == 2);
    for (const auto& m : ms) {
        const double f1 = mode_fraction(m, cs->core("core1"));
        const double f2 = mode_fraction(m, cs->core("core2"));
        CHECK(f1 > 0.45);
        CHECK(f1 < 0.55);
        CHECK(f2 > 0.45);
        CHECK(f2 < 0.55);
        CHECK(f1 / (f1 + f2) == doctest::Approx(0.5).epsilon(0.1));
    }
    CHECK(ms[0].parity == ParityHint::symmetric_like);
    CHECK(ms[1].parity == ParityHint::antisymmetric_like);
}

TEST_CASE("far below the crossing the top slab supermode sits >90% in its own core") {
    auto cs = fixture("five_layer_slab");
    const auto ms = te_modes(cs, 1.50);
    REQUIRE(ms.size() == 2);
    CHECK(mode_fraction(ms[0], cs->core("core1")) > 0.90);
}

TEST_CASE("three-core middle branch holds the center core only between its two crossings") {
    auto cs = fixture("three_core_slab");
    const auto& mid_core = cs->core("core2");

    auto middle_fraction = [&](double lam) {
        const auto ms = te_modes(cs, lam);
        REQUIRE(ms.size() == 3);
        return mode_fraction(ms[1], mid_core);
    };

    CHECK(middle_fraction(1.46) < 0.05);
    CHECK(middle_fraction(1.55) > 0.6);
    CHECK(middle_fraction(1.60) > 0.6);
    CHECK(middle_fraction(1.70) < 0.05);

    const auto high = te_modes(cs, 1.70);
    CHECK(mode_fraction(high[0], mid_core) > 0.6);
}

TEST_CASE("near-degenerate pairs hiding between scan samples are still found") {
    // At this wavelength the two anti-crossing roots are ~1.9e-4 apart in
    // n_eff and the dispersion function's sign lobe between them is narrower
    // than the default scan spacing.
    auto cs = fixture("three_core_slab");
    const auto ms = te_modes(cs, 1.515555556);
    REQUIRE(ms.size() == 3);
    const double pair_gap = ms[1].n_eff - ms[2].n_eff;
    CHECK(pair_gap > 0.0);
    CHECK(pair_gap < 5e-4);
    for (const auto& m : ms) CHECK(std::abs(m.residual) < 1e-10);
}

TEST_CASE("a region with no vertical mode and no fallback raises EIMBreakdown") {
    const auto doc = R"({
      "regions": [
        {"name": "left", "width_um": "semi", "base_z_um": 0.0,
         "stack": [["semi", "SiO2"], ["semi", "air"]]},
        {"name": "ridge", "width_um": 1.0, "base_z_um": 0.0,
         "stack": [["semi", "SiO2"], [0.3, "a-Si"], ["semi", "air"]]},
        {"name": "right", "width_um": "semi", "base_z_um": 0.0,
         "stack": [["semi", "SiO2"], ["semi", "air"]]}
      ]
    })"_json;
    auto cs = std::make_shared<CrossSection>(CrossSection::from_json(doc));
    try {
        solve_ridge_modes_eim(lib(), cs, 1.55, Polarization::TE);
        FAIL("expected EIMBreakdown");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::EIMBreakdown);
    }
}

TEST_CASE("TM solves are available and strip-blind at the operating band") {
    auto cs = fixture("algaas_asi");
    const auto ms = solve_ridge_modes_eim(lib(), cs, 1.55, Polarization::TM);
    REQUIRE(!ms.empty());
    CHECK(mode_fraction(ms[0], cs->core("core1")) > 0.8);
    CHECK(mode_fraction(ms[0], cs->core("core2")) < 0.01);
}

TEST_CASE("sampled profiles decay below 1e-4 of peak at the window boundary") {
    auto cs = fixture("algaas_asi");
    const auto ms = te_modes(cs, 1.55);
    std::vector<const EimMode*> ptrs;
    for (const auto& m : ms) ptrs.push_back(&m);
    const ModeGrid grid = make_grid(*cs, ptrs);
    for (const auto& m : ms) {
        const ModeProfile p = materialize(m, grid);
        const double peak = p.e.cwiseAbs().maxCoeff();
        REQUIRE(peak > 0.0);
        const double edge = std::max({p.e.row(0).cwiseAbs().maxCoeff(),
                                      p.e.row(p.e.rows() - 1).cwiseAbs().maxCoeff(),
                                      p.e.col(0).cwiseAbs().maxCoeff(),
                                      p.e.col(p.e.cols() - 1).cwiseAbs().maxCoeff()});
        CHECK(edge < 1e-4 * peak);
    }
}

TEST_CASE("materialized profiles agree with direct field evaluation") {
    auto cs = fixture("algaas_asi");
    const auto ms = te_modes(cs, 1.55);
    REQUIRE(!ms.empty());
    const EimMode& m = ms[1];
    const ModeGrid grid = make_grid(*cs, {&m}, 0.04);
    const ModeProfile p = materialize(m, grid);
    REQUIRE(p.e.rows() == grid.z.size());
    REQUIRE(p.e.cols() == grid.x.size());
    for (Eigen::Index i = 0; i < grid.z.size(); i += 17)
        for (Eigen::Index j = 0; j < grid.x.size(); j += 13)
            CHECK(p.e(i, j) == doctest::Approx(m.field(grid.x[j], grid.z[i])).epsilon(1e-12));
    CHECK(grid.dx <= 0.04 + 1e-12);
    CHECK(grid.dz <= 0.04 + 1e-12);
}
