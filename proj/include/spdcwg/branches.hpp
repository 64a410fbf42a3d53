#pragma once

#include <memory>
#include <vector>

#include "spdcwg/eim.hpp"
#include "spdcwg/spline.hpp"

namespace spdcwg {

// One physical mode branch followed across wavelength.  Identity is kept by
// maximal profile-overlap assignment between adjacent samples, so through an
// anti-crossing the branch follows the continuously morphing supermode (the
// n_eff-ordered curve), not the core content.
struct ModeBranch {
    int id = 0;  // rank by descending n_eff at the short-wavelength end
    Polarization pol = Polarization::TE;
    std::vector<double> lambdas;   // strictly increasing
    std::vector<EimMode> samples;  // one per wavelength

    CubicSpline interp;  // n_eff(lambda) through the samples

    double n_eff(double lambda_um) const { return interp(lambda_um); }
    double n_g(double lambda_um) const {
        return interp(lambda_um) - lambda_um * interp.derivative(lambda_um);
    }

    const EimMode& nearest(double lambda_um) const;
    double core_fraction(double lambda_um, const CoreBox& box) const;
};

struct TrackOptions {
    int initial_samples = 17;
    double overlap_floor = 0.8;      // continuity requirement between samples
    double ambiguity_margin = 1e-3;  // two contenders closer than this: refine or report
    double lambda_floor_um = 5e-5;   // 0.05 nm refinement floor
    int scan_samples = 4000;
};

// Follows the n_branches highest-n_eff modes at lambda_lo through the range.
// Sampling bisects wherever branch continuity (overlap > floor) fails or the
// assignment is ambiguous, down to the wavelength floor; ambiguity that
// survives at the floor raises BranchAmbiguity rather than guessing.
std::vector<ModeBranch> track_branches(const MaterialLibrary& lib,
                                       const std::shared_ptr<const CrossSection>& cs,
                                       double lambda_lo_um, double lambda_hi_um,
                                       Polarization pol, int n_branches,
                                       const TrackOptions& opt = {});

// Wavelength minimizing the |n_eff| gap between two branches on their common
// range, resolved well below 0.1 nm.  Raises NoAnticrossing when the gap is
// monotonic (minimum at a range edge) or flat to within one part in 1e3.
double coupling_wavelength(const ModeBranch& a, const ModeBranch& b);

// Full solve at an arbitrary wavelength inside the branch's tracked range,
// the mode chosen by maximal profile overlap against the nearest tracked
// sample.  Raises FrequencyOutOfRange outside the range and BranchAmbiguity
// when no candidate resembles the branch.
EimMode branch_mode_at(const MaterialLibrary& lib, const ModeBranch& br, double lambda_um,
                       int scan_samples = 4000);

}  // namespace spdcwg
