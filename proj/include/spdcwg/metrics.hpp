#pragma once

#include <Eigen/Core>

#include "spdcwg/spdc.hpp"

namespace spdcwg {

struct SchmidtResult {
    Eigen::VectorXd coefficients;  // descending, nonnegative, sum 1
    double K = 1.0;                // 1 / sum coefficients^2
    double purity = 1.0;           // 1 / K
};

// Singular value decomposition of the sampled 2D amplitude; line amplitudes
// are rejected with NotTwoDimensional.
SchmidtResult schmidt_decompose(const BiphotonAmplitude& bwf);

// Polarization concurrence of the post-selected two-qubit state behind an
// ideal dichroic splitter: the exchange overlap
// C = |sum f(w) conj(f(w_p - w)) dw| / sum |f(w)|^2 dw over the correctly
// split pairs (one photon each side of the splitting frequency).  Pairs
// landing on the same side are excluded and reported as loss_fraction;
// splitting_inside_support flags a splitting frequency strictly inside the
// amplitude's support (|f| above 1e-6 of peak on both sides).  When the axis
// is symmetric about w_p/2 the exchange is an exact sample reversal;
// otherwise it is linearly interpolated with zero outside the axis.
struct CwConcurrence {
    double C = 0.0;
    double loss_fraction = 0.0;
    bool splitting_inside_support = false;
};

CwConcurrence concurrence_cw(const BiphotonAmplitude& bwf, double splitting_nm);

// Concurrence maximized over a relative spectral delay exp(i tau (w - w_p/2))
// applied to f before the exchange overlap: a coarse scan over
// [-tau_range_fs, tau_range_fs] brackets the best lobe and golden-section
// refines it to 0.1 fs.  A landscape flat around zero returns tau = 0 with C
// unchanged, and the result is never below the uncompensated concurrence.
struct Compensation {
    double c_max = 0.0;
    double tau_fs = 0.0;
};

Compensation compensated_concurrence(const BiphotonAmplitude& bwf, double tau_range_fs,
                                     double splitting_nm);

// Projections of |psi|^2 onto each frequency axis, each integrating to 1
// against its ascending axis.
struct Marginals {
    Eigen::VectorXd omega_s, signal;
    Eigen::VectorXd omega_i, idler;
};

Marginals marginal_spectra(const BiphotonAmplitude& bwf);

}  // namespace spdcwg
