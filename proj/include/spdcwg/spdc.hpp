#pragma once

#include <complex>

#include <Eigen/Core>
#include <json.hpp>

#include "spdcwg/branches.hpp"
#include "spdcwg/constants.hpp"
#include "spdcwg/overlap.hpp"

namespace spdcwg {

enum class PumpRegime { cw, pulsed };

struct PumpSpec {
    double lambda_p_um = 0.775;
    PumpRegime regime = PumpRegime::cw;
    double duration_fwhm_fs = 0.0;  // intensity FWHM, pulsed only

    static PumpSpec from_json(const nlohmann::json& doc);
    void validate() const;
    double omega_p() const { return omega_from_lambda(lambda_p_um); }
    // Field-amplitude spectral width of a Gaussian pulse whose intensity FWHM
    // is duration_fwhm_fs, in the exp(-x^2 / 4 sigma^2) convention.
    double sigma_omega() const;
};

enum class PmfShape { sinc, gaussian_fit };

struct ProcessSpec {
    double length_mm = 2.0;
    double lambda_grating_um = 0.0;  // <= 0 requests the degeneracy solve
    double splitting_nm = 1550.0;
    PmfShape pmf_shape = PmfShape::sinc;

    static ProcessSpec from_json(const nlohmann::json& doc);
    void validate() const;
    bool grating_resolved() const { return lambda_grating_um > 0.0; }
    double length_um() const { return 1000.0 * length_mm; }
};

// Pump spectral amplitude at a given signal+idler frequency sum, peak 1 at
// zero detuning.  CW concentrates all amplitude on the energy-conservation
// line: it returns 1 on the line (to 1e-9 relative) and 0 off it.
std::complex<double> pump_envelope(const PumpSpec& pump, double omega_sum);

// Copy of the process with the grating period solved so that the collinear
// first-order QPM mismatch vanishes at pump degeneracy; a copy with an
// explicit positive period is returned unchanged.
ProcessSpec resolve_grating(const ProcessSpec& process, const PumpSpec& pump,
                            const ModeBranch& sig, const ModeBranch& idl, const ModeBranch& pmp);

struct Mismatch {
    double dk = 0.0;  // rad/um
    std::complex<double> pmf;
};

// dk = k_P(omega_s+omega_i) - k_S(omega_s) - k_I(omega_i) - 2 pi / grating,
// with k = n_eff * omega / c from the branch interpolators, and
// pmf = sinc(dk L / 2) * exp(i dk L / 2).  gaussian_fit swaps the sinc
// magnitude for its amplitude-FWHM-matched Gaussian, keeping the phase.
Mismatch phase_mismatch(const ProcessSpec& process, const ModeBranch& sig, const ModeBranch& idl,
                        const ModeBranch& pmp, double omega_s, double omega_i);

enum class BwfKind { grid2d, line1d };

// Joint spectral amplitude, normalized so sum |psi|^2 * measure = 1 with the
// uniform axis-step measure (d_omega_s * d_omega_i for grid2d, d_omega_s for
// line1d).  line1d stores the amplitude along omega_i = omega_p - omega_s as
// a single column; its omega_i axis descends as omega_s ascends.
struct BiphotonAmplitude {
    BwfKind kind = BwfKind::grid2d;
    double omega_p = 0.0;
    Eigen::VectorXd omega_s, omega_i;
    Eigen::MatrixXcd values;  // grid2d: (n_s, n_i); line1d: (n, 1)

    double d_omega_s() const { return (omega_s[omega_s.size() - 1] - omega_s[0]) / (omega_s.size() - 1); }
    double d_omega_i() const { return (omega_i[omega_i.size() - 1] - omega_i[0]) / (omega_i.size() - 1); }
    double measure() const;
    double norm_sum() const;  // sum |psi|^2 * measure, 1 after construction
    double lambda_s(int i) const { return lambda_from_omega(omega_s[i]); }
    double lambda_i(int j) const { return lambda_from_omega(omega_i[j]); }
    Eigen::MatrixXd jsi() const { return values.cwiseAbs2(); }
};

// Assembles overlap x pump envelope x phase-matching over the axes and
// normalizes.  A null overlap is the flat baseline (factor 1).  The pump
// regime picks the representation: pulsed fills the 2D grid, CW collapses to
// the energy-conservation line through axes.omega_s.  Overlap samples come
// from bilinear interpolation on the grid's uniform axes, so a biphoton grid
// sharing the overlap grid's axes reproduces its node values exactly; an
// invalid overlap sample inside the requested window raises GridMismatch.
BiphotonAmplitude build_bwf(const ProcessSpec& process, const PumpSpec& pump,
                            const ModeBranch& sig, const ModeBranch& idl, const ModeBranch& pmp,
                            const SpectralAxes& axes, const OverlapGrid* overlap = nullptr);

// CW line variant taking the overlap already sampled on the conjugate line;
// the line's pump frequency must match the pump spec.
BiphotonAmplitude build_bwf(const ProcessSpec& process, const PumpSpec& pump,
                            const ModeBranch& sig, const ModeBranch& idl, const ModeBranch& pmp,
                            const Eigen::VectorXd& omega_s_line,
                            const OverlapLine* overlap = nullptr);

// Default sampling windows: CW spans degeneracy +/- halfwidth_nm with n
// samples; the pulsed axes cover the pump's +/-4 sigma band along the sum
// direction and +/-4 phase-matching lobes along the difference direction.
Eigen::VectorXd default_cw_axis(const PumpSpec& pump, double halfwidth_nm = 60.0, int n = 4096);
SpectralAxes default_pulsed_axes(const ProcessSpec& process, const PumpSpec& pump,
                                 const ModeBranch& sig, const ModeBranch& idl,
                                 const ModeBranch& pmp, int n = 512);

}  // namespace spdcwg
