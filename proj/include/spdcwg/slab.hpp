#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace spdcwg {

enum class Polarization { TE, TM };

const char* polarization_name(Polarization p);
Polarization polarization_from_string(const std::string& s);

// One multilayer slab at a single wavelength, reduced to raw indices.  The
// first and last entries of n are the semi-infinite outer layers; d holds the
// interior thicknesses (n.size() - 2 entries).  base_z is the coordinate of
// the bottom outer interface; z increases toward the last layer.
struct ResolvedStack {
    std::vector<double> n;
    std::vector<double> d;
    double base_z_um = 0.0;

    double z_top() const;
    std::vector<double> interfaces() const;  // n.size() - 1 positions
};

// Guided slab solution.  phi is the principal field (E for TE, H for TM);
// psi = p * dphi/dz with p = 1 (TE) or 1/n^2 (TM) is continuous across
// interfaces.  Profiles are evaluated piecewise-analytically from the layer
// coefficients; no grid is stored here.
class SlabMode {
  public:
    double lambda_um = 0.0;
    Polarization pol = Polarization::TE;
    double n_eff = 0.0;
    double residual = 0.0;  // Newton-step estimate of the relative n_eff error

    double phi(double z) const;
    Eigen::VectorXd sample(const Eigen::VectorXd& z) const;

    const ResolvedStack& stack() const { return stack_; }

  private:
    friend struct SlabModeBuilder;
    ResolvedStack stack_;
    // Per layer: (phi, psi) at the layer's lower edge plus local q^2 and p.
    std::vector<double> phi0_, psi0_, q2_, p_;
    std::vector<double> z_lo_;
    double k0_ = 0.0;
};

// Transfer-matrix dispersion function; zero at guided modes.  Scaled to the
// magnitude of its two composing terms so roots can be qualified by an
// absolute residual threshold.
double slab_dispersion(const ResolvedStack& s, double lambda_um, Polarization pol,
                       double n_eff);

// All guided modes in descending n_eff.  The root scan walks n_eff from just
// below max(n) to just above max(n_outer) on >= `scan_samples` points,
// subdivides cells where |D| dips locally (near-degenerate pairs), and
// bisects every bracketed sign change; roots closer than 1e-9 merge.
std::vector<SlabMode> solve_slab_modes(const ResolvedStack& s, double lambda_um,
                                       Polarization pol, int scan_samples = 4000);

// Integral of weight(z) * phi_a(z) * phi_b(z) over [lo, hi] (infinities
// allowed).  The weight is piecewise constant per layer of a's stack; the
// evanescent tails are integrated in closed form and the interior by
// panelized Gauss-Legendre quadrature with panels broken at both modes'
// interfaces, so the result is grid-free and accurate to rounding.
double mode_moment(const SlabMode& a, const SlabMode& b, const std::vector<double>& weights,
                   double lo = -std::numeric_limits<double>::infinity(),
                   double hi = std::numeric_limits<double>::infinity());

}  // namespace spdcwg
