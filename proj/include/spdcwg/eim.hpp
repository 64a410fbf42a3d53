#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "spdcwg/geometry.hpp"
#include "spdcwg/materials.hpp"
#include "spdcwg/slab.hpp"

namespace spdcwg {

enum class ParityHint { symmetric_like, antisymmetric_like, uncoupled };
const char* parity_name(ParityHint p);

inline Polarization swapped(Polarization p) {
    return p == Polarization::TE ? Polarization::TM : Polarization::TE;
}

// A 2D guided mode from the effective-index method: per lateral region a
// vertical slab solve, then one lateral slab solve over the resulting
// effective indices with the polarization convention swapped.  The field is
// the separable product e(x,y) = X(x) * Y_r(y) of the lateral profile and the
// region's vertical profile, expressed as the dominant transverse E component:
// wherever a factor came from a TM-convention solve, the stored slab field is
// H-like and evaluation divides by the local n^2.
//
// Normalization is analytic (grid-free): each vertical factor satisfies
// integral(v * Y^2) = 1 with v = n^2(z) for TM modes and 1 for TE, and the
// lateral amplitude is scaled so the power flux n_eff * integral(u * X^2) is
// 1, with u = 1/n_lat^2 folded in for TE modes (whose lateral step is the
// TM-convention one).  Power fractions, the inner product, and sampled
// profiles all inherit this single convention.  The overall sign is fixed so
// the field is positive at its intensity peak.
struct EimMode {
    double lambda_um = 0.0;
    Polarization pol = Polarization::TE;
    double n_eff = 0.0;
    double residual = 0.0;
    int family = 0;         // vertical mode order feeding the lateral problem
    int lateral_order = 0;  // index among the family's lateral solutions
    ParityHint parity = ParityHint::uncoupled;

    std::optional<SlabMode> lateral;  // absent for a laterally uniform cross-section
    double amplitude = 1.0;           // overall scale folded into the lateral factor

    struct RegionPart {
        std::optional<SlabMode> vertical;  // this region's own vertical mode, if any
        int donor = 0;      // region whose vertical profile (and weight) shapes the field here
        double n_lat = 0.0; // lateral index used for this region
        double y_norm = 1.0;
    };
    std::vector<RegionPart> parts;
    std::shared_ptr<const CrossSection> cs;

    double field(double x, double z) const;
    Eigen::VectorXd field_x(const Eigen::VectorXd& x) const;
    Eigen::VectorXd field_y(int region, const Eigen::VectorXd& z) const;
    const SlabMode& vertical_profile(int region) const;

    // x interval covered by a region (infinite for the outer ones)
    std::pair<double, double> region_span(int region) const;
};

// All EIM modes of the cross-section at one wavelength, descending n_eff
// across all vertical families.  A region with no vertical mode at all and no
// declared fallback material raises EIMBreakdown; a region merely missing a
// higher-order vertical mode falls back to its declared material or, absent
// that, to its strongest outer bulk index.
std::vector<EimMode> solve_ridge_modes_eim(const MaterialLibrary& lib,
                                           const std::shared_ptr<const CrossSection>& cs,
                                           double lambda_um, Polarization pol,
                                           int scan_samples = 4000);

// Power fraction inside a core box (one region/layer cell).
double mode_fraction(const EimMode& m, const CoreBox& box);

// Inner product under the declared power form (weights from a's convention);
// both modes normalized, so |result| <= 1 up to quadrature.
double mode_inner_product(const EimMode& a, const EimMode& b);

struct ModeGrid {
    Eigen::VectorXd x, z;
    double dx = 0.0, dz = 0.0;
};

// Uniform sampling grid: the structure's finite extent plus, per side, the
// larger of the spec'd window padding (window_factor * widest core box / 2)
// and the distance at which every given mode has decayed below 1e-4 of its
// boundary value.  Spacing is snapped down so nodes hit the window edges.
ModeGrid make_grid(const CrossSection& cs, const std::vector<const EimMode*>& modes,
                   double spacing_um = 0.0);

struct ModeProfile {
    ModeGrid grid;
    Eigen::MatrixXd e;  // e(i, j) = field at (x[j], z[i])
};

ModeProfile materialize(const EimMode& m, const ModeGrid& grid);

}  // namespace spdcwg
