#pragma once

#include <cmath>

#include <Eigen/Core>

#include "spdcwg/branches.hpp"
#include "spdcwg/constants.hpp"

namespace spdcwg {

// Uniform angular-frequency axes (rad/fs, ascending) for the signal and idler
// spectral directions.
struct SpectralAxes {
    Eigen::VectorXd omega_s, omega_i;

    static SpectralAxes from_lambda_window(double lambda_s_lo_um, double lambda_s_hi_um,
                                           double lambda_i_lo_um, double lambda_i_hi_um, int n_s,
                                           int n_i);
};

// Three-field overlap sampled over (omega_s, omega_i), the pump wavelength
// following energy conservation per sample.  Values inherit the modes' power
// normalization, so only the relative scale is meaningful; a sample whose
// solve failed is NaN, never silently zero.
struct OverlapGrid {
    Eigen::VectorXd omega_s, omega_i;
    Eigen::MatrixXd values;  // values(i, j) at (omega_s[i], omega_i[j])
    int branch_s = 0, branch_i = 0, branch_p = 0;
    double peak = 0.0;  // largest finite |value|

    double lambda_s(int i) const { return lambda_from_omega(omega_s[i]); }
    double lambda_i(int j) const { return lambda_from_omega(omega_i[j]); }
    bool valid(int i, int j) const { return std::isfinite(values(i, j)); }
    int invalid_count() const;
};

// Overlap along the CW energy-conservation line omega_i = omega_p - omega_s.
struct OverlapLine {
    double omega_p = 0.0;
    Eigen::VectorXd omega_s;
    Eigen::VectorXd values;  // NaN marks failed samples
    int branch_s = 0, branch_i = 0, branch_p = 0;
    double peak = 0.0;

    double lambda_s(int i) const { return lambda_from_omega(omega_s[i]); }
    double lambda_i(int i) const { return lambda_from_omega(omega_p - omega_s[i]); }
};

// chi2-weighted product integral of the three mode fields over the
// cross-section, signal and idler taken as written and the pump conjugated.
// Each active tensor cell factorizes into lateral x vertical line integrals
// (the fields are separable within one region), evaluated by trapezoid on a
// cell-aligned grid at an eighth of the structure grid spacing unless
// overridden.  The result is a signed real: solver modes carry the
// real-positive-peak gauge, and branch-resolved modes additionally carry the
// branch's continuity sign so grids stay smooth through transfer windows.
// QPM cells carry the first-order Fourier factor 2/pi.  A tensor that couples
// none of the three polarizations yields 0 with a warning on stderr.
double effective_overlap(const EimMode& mode_s, const EimMode& mode_i, const EimMode& mode_p,
                         double quad_spacing_um = 0.0);

// Grid of effective_overlap samples with per-sample mode re-solves guided by
// the tracked branches; solver failures mark the sample invalid.
OverlapGrid overlap_grid(const MaterialLibrary& lib, const ModeBranch& branch_s,
                         const ModeBranch& branch_i, const ModeBranch& branch_p,
                         const SpectralAxes& axes);

// Same sampling restricted to the line omega_s + omega_i = omega_p; the
// single pump solve failing is an error, not an invalid line.
OverlapLine overlap_line(const MaterialLibrary& lib, const ModeBranch& branch_s,
                         const ModeBranch& branch_i, const ModeBranch& branch_p,
                         const Eigen::VectorXd& omega_s, double omega_p);

// 10-90% width (um) of the first falling edge of values along ascending
// lambda, crossing positions linearly interpolated between samples.
double falling_edge_width_um(const Eigen::VectorXd& lambda_um, const Eigen::VectorXd& values);

}  // namespace spdcwg
