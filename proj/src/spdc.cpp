#include "spdcwg/spdc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spdcwg/error.hpp"

namespace spdcwg {

namespace {

constexpr double kCwLineTol = 1e-9;      // relative, on omega_s + omega_i - omega_p
constexpr double kSupportFloor = 1e-12;  // of the factorwise peak product
constexpr double kSincFitGamma = 0.193;  // exp(-gamma x^2) matches sinc's amplitude FWHM

double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

double k_of(const ModeBranch& br, double omega, const char* role) {
    const double lam = lambda_from_omega(omega);
    if (lam < br.interp.x_front() - 1e-9 || lam > br.interp.x_back() + 1e-9)
        raise(Errc::FrequencyOutOfRange,
              std::string(role) + " wavelength " + std::to_string(lam) +
                  " um is outside the tracked branch range [" +
                  std::to_string(br.interp.x_front()) + ", " +
                  std::to_string(br.interp.x_back()) + "]");
    return br.n_eff(lam) * omega / c_um_per_fs;
}

// Bilinear sample of an overlap grid on its uniform ascending axes; exact at
// the grid's own nodes so shared-axes biphoton grids reproduce node values.
double sample_overlap(const OverlapGrid& g, double ws, double wi) {
    const auto locate = [](const Eigen::VectorXd& ax, double w, const char* name) {
        const int n = static_cast<int>(ax.size());
        const double step = (ax[n - 1] - ax[0]) / (n - 1);
        const double u = (w - ax[0]) / step;
        if (u < -1e-9 || u > n - 1 + 1e-9)
            raise(Errc::GridMismatch, std::string("requested ") + name +
                                          " frequency lies outside the overlap grid axes");
        const int i = std::clamp(static_cast<int>(std::floor(u)), 0, n - 2);
        return std::pair<int, double>{i, u - i};
    };
    const auto [i, t] = locate(g.omega_s, ws, "signal");
    const auto [j, u] = locate(g.omega_i, wi, "idler");
    const double v00 = g.values(i, j), v10 = g.values(i + 1, j);
    const double v01 = g.values(i, j + 1), v11 = g.values(i + 1, j + 1);
    if (!std::isfinite(v00) || !std::isfinite(v10) || !std::isfinite(v01) || !std::isfinite(v11))
        raise(Errc::GridMismatch,
              "overlap grid is invalid near lambda_s = " +
                  std::to_string(lambda_from_omega(ws)) + " um, lambda_i = " +
                  std::to_string(lambda_from_omega(wi)) + " um");
    return (1.0 - t) * ((1.0 - u) * v00 + u * v01) + t * ((1.0 - u) * v10 + u * v11);
}

double sample_overlap_line(const OverlapLine& line, double ws) {
    const int n = static_cast<int>(line.omega_s.size());
    const double step = (line.omega_s[n - 1] - line.omega_s[0]) / (n - 1);
    const double u = (ws - line.omega_s[0]) / step;
    if (u < -1e-9 || u > n - 1 + 1e-9)
        raise(Errc::GridMismatch, "requested signal frequency lies outside the overlap line");
    const int i = std::clamp(static_cast<int>(std::floor(u)), 0, n - 2);
    const double t = u - i;
    const double v0 = line.values[i], v1 = line.values[i + 1];
    if (!std::isfinite(v0) || !std::isfinite(v1))
        raise(Errc::GridMismatch, "overlap line is invalid near lambda_s = " +
                                      std::to_string(lambda_from_omega(ws)) + " um");
    return (1.0 - t) * v0 + t * v1;
}

// Normalizes in place against the uniform-measure sum; all-dead support is
// detected against the product of the factors' separate peaks, so a grid
// whose factors never coincide fails loudly instead of normalizing noise.
void finalize(BiphotonAmplitude& bwf, double peak_product) {
    const double peak = bwf.values.cwiseAbs().maxCoeff();
    if (!(peak > kSupportFloor * peak_product))
        raise(Errc::EmptySupport, "biphoton amplitude has no support on the requested axes");
    const double sum = bwf.values.cwiseAbs2().sum() * bwf.measure();
    bwf.values /= std::sqrt(sum);
}

}  // namespace

PumpSpec PumpSpec::from_json(const nlohmann::json& doc) {
    PumpSpec p;
    p.lambda_p_um = doc.at("lambda_p_um").get<double>();
    const std::string regime = doc.value("regime", std::string{"cw"});
    if (regime == "cw")
        p.regime = PumpRegime::cw;
    else if (regime == "pulsed")
        p.regime = PumpRegime::pulsed;
    else
        raise(Errc::BadConfig, "pump: regime must be \"cw\" or \"pulsed\"");
    p.duration_fwhm_fs = doc.value("duration_fwhm_fs", 0.0);
    p.validate();
    return p;
}

void PumpSpec::validate() const {
    if (!(lambda_p_um > 0.0)) raise(Errc::BadConfig, "pump: lambda_p_um must be positive");
    if (regime == PumpRegime::pulsed && !(duration_fwhm_fs > 0.0))
        raise(Errc::BadConfig, "pump: pulsed regime needs duration_fwhm_fs > 0");
}

double PumpSpec::sigma_omega() const {
    if (regime != PumpRegime::pulsed)
        raise(Errc::BadConfig, "pump: sigma_omega is defined for the pulsed regime only");
    return std::sqrt(2.0 * std::log(2.0)) / duration_fwhm_fs;
}

ProcessSpec ProcessSpec::from_json(const nlohmann::json& doc) {
    ProcessSpec p;
    p.length_mm = doc.at("length_mm").get<double>();
    if (doc.contains("lambda_grating_um")) {
        const auto& jg = doc.at("lambda_grating_um");
        if (jg.is_string()) {
            if (jg.get<std::string>() != "auto")
                raise(Errc::BadConfig, "process: lambda_grating_um must be a number or \"auto\"");
            p.lambda_grating_um = 0.0;
        } else {
            p.lambda_grating_um = jg.get<double>();
        }
    }
    p.splitting_nm = doc.value("splitting_nm", 1550.0);
    const std::string shape = doc.value("pmf_shape", std::string{"sinc"});
    if (shape == "sinc")
        p.pmf_shape = PmfShape::sinc;
    else if (shape == "gaussian_fit")
        p.pmf_shape = PmfShape::gaussian_fit;
    else
        raise(Errc::BadConfig, "process: pmf_shape must be \"sinc\" or \"gaussian_fit\"");
    p.validate();
    return p;
}

void ProcessSpec::validate() const {
    if (!(length_mm > 0.0)) raise(Errc::BadConfig, "process: length_mm must be positive");
    if (!(splitting_nm > 0.0)) raise(Errc::BadConfig, "process: splitting_nm must be positive");
}

std::complex<double> pump_envelope(const PumpSpec& pump, double omega_sum) {
    pump.validate();
    const double detuning = omega_sum - pump.omega_p();
    if (pump.regime == PumpRegime::cw)
        return std::abs(detuning) <= kCwLineTol * pump.omega_p() ? 1.0 : 0.0;
    const double s = pump.sigma_omega();
    return std::exp(-detuning * detuning / (4.0 * s * s));
}

ProcessSpec resolve_grating(const ProcessSpec& process, const PumpSpec& pump,
                            const ModeBranch& sig, const ModeBranch& idl,
                            const ModeBranch& pmp) {
    process.validate();
    if (process.grating_resolved()) return process;
    const double wp = pump.omega_p();
    const double mismatch =
        k_of(pmp, wp, "pump") - k_of(sig, wp / 2.0, "signal") - k_of(idl, wp / 2.0, "idler");
    if (!(mismatch > 0.0))
        raise(Errc::BadConfig,
              "grating solve needs k_P > k_S + k_I at degeneracy for first-order collinear QPM");
    ProcessSpec resolved = process;
    resolved.lambda_grating_um = 2.0 * pi / mismatch;
    return resolved;
}

Mismatch phase_mismatch(const ProcessSpec& process, const ModeBranch& sig, const ModeBranch& idl,
                        const ModeBranch& pmp, double omega_s, double omega_i) {
    if (!process.grating_resolved())
        raise(Errc::BadConfig, "process: grating period unresolved; call resolve_grating first");
    Mismatch m;
    m.dk = k_of(pmp, omega_s + omega_i, "pump") - k_of(sig, omega_s, "signal") -
           k_of(idl, omega_i, "idler") - 2.0 * pi / process.lambda_grating_um;
    const double x = 0.5 * m.dk * process.length_um();
    const double mag =
        process.pmf_shape == PmfShape::sinc ? sinc(x) : std::exp(-kSincFitGamma * x * x);
    m.pmf = mag * std::complex<double>(std::cos(x), std::sin(x));
    return m;
}

BiphotonAmplitude build_bwf(const ProcessSpec& process, const PumpSpec& pump,
                            const ModeBranch& sig, const ModeBranch& idl, const ModeBranch& pmp,
                            const SpectralAxes& axes, const OverlapGrid* overlap) {
    pump.validate();
    if (pump.regime == PumpRegime::cw) {
        const int n = static_cast<int>(axes.omega_s.size());
        Eigen::VectorXd line_ovl;
        if (overlap) {
            line_ovl.resize(n);
            for (int i = 0; i < n; ++i)
                line_ovl[i] =
                    sample_overlap(*overlap, axes.omega_s[i], pump.omega_p() - axes.omega_s[i]);
        }
        OverlapLine line;
        line.omega_p = pump.omega_p();
        line.omega_s = axes.omega_s;
        line.values = line_ovl;
        return build_bwf(process, pump, sig, idl, pmp, axes.omega_s,
                         overlap ? &line : nullptr);
    }

    const ProcessSpec proc = resolve_grating(process, pump, sig, idl, pmp);
    BiphotonAmplitude bwf;
    bwf.kind = BwfKind::grid2d;
    bwf.omega_p = pump.omega_p();
    bwf.omega_s = axes.omega_s;
    bwf.omega_i = axes.omega_i;
    const int ns = static_cast<int>(axes.omega_s.size());
    const int ni = static_cast<int>(axes.omega_i.size());
    bwf.values.resize(ns, ni);
    double peak_ovl = 0.0, peak_alpha = 0.0, peak_pmf = 0.0;
    for (int i = 0; i < ns; ++i) {
        const double ws = axes.omega_s[i];
        for (int j = 0; j < ni; ++j) {
            const double wi = axes.omega_i[j];
            const double ovl = overlap ? sample_overlap(*overlap, ws, wi) : 1.0;
            const std::complex<double> alpha = pump_envelope(pump, ws + wi);
            const Mismatch mm = phase_mismatch(proc, sig, idl, pmp, ws, wi);
            bwf.values(i, j) = ovl * alpha * mm.pmf;
            peak_ovl = std::max(peak_ovl, std::abs(ovl));
            peak_alpha = std::max(peak_alpha, std::abs(alpha));
            peak_pmf = std::max(peak_pmf, std::abs(mm.pmf));
        }
    }
    finalize(bwf, peak_ovl * peak_alpha * peak_pmf);
    return bwf;
}

BiphotonAmplitude build_bwf(const ProcessSpec& process, const PumpSpec& pump,
                            const ModeBranch& sig, const ModeBranch& idl, const ModeBranch& pmp,
                            const Eigen::VectorXd& omega_s_line, const OverlapLine* overlap) {
    pump.validate();
    if (pump.regime != PumpRegime::cw)
        raise(Errc::BadConfig, "line amplitudes are a CW representation; pulsed pumps need axes");
    if (omega_s_line.size() < 2)
        raise(Errc::BadConfig, "line axis needs at least two samples");
    if (overlap &&
        std::abs(overlap->omega_p - pump.omega_p()) > kCwLineTol * pump.omega_p())
        raise(Errc::GridMismatch, "overlap line was sampled for a different pump frequency");

    const ProcessSpec proc = resolve_grating(process, pump, sig, idl, pmp);
    BiphotonAmplitude bwf;
    bwf.kind = BwfKind::line1d;
    bwf.omega_p = pump.omega_p();
    bwf.omega_s = omega_s_line;
    const int n = static_cast<int>(omega_s_line.size());
    bwf.omega_i = Eigen::VectorXd::Constant(n, pump.omega_p()) - omega_s_line;
    bwf.values.resize(n, 1);
    double peak_ovl = 0.0, peak_pmf = 0.0;
    for (int i = 0; i < n; ++i) {
        const double ws = omega_s_line[i];
        const double wi = bwf.omega_i[i];
        const double ovl = overlap ? sample_overlap_line(*overlap, ws) : 1.0;
        const Mismatch mm = phase_mismatch(proc, sig, idl, pmp, ws, wi);
        bwf.values(i, 0) = ovl * mm.pmf;
        peak_ovl = std::max(peak_ovl, std::abs(ovl));
        peak_pmf = std::max(peak_pmf, std::abs(mm.pmf));
    }
    finalize(bwf, peak_ovl * peak_pmf);
    return bwf;
}

double BiphotonAmplitude::measure() const {
    return kind == BwfKind::grid2d ? d_omega_s() * d_omega_i() : std::abs(d_omega_s());
}

double BiphotonAmplitude::norm_sum() const { return values.cwiseAbs2().sum() * measure(); }

Eigen::VectorXd default_cw_axis(const PumpSpec& pump, double halfwidth_nm, int n) {
    if (n < 2 || !(halfwidth_nm > 0.0))
        raise(Errc::BadConfig, "CW axis needs n >= 2 and a positive halfwidth");
    const double lam_deg = 2.0 * pump.lambda_p_um;
    const double lo = lam_deg - 1e-3 * halfwidth_nm, hi = lam_deg + 1e-3 * halfwidth_nm;
    return Eigen::VectorXd::LinSpaced(n, omega_from_lambda(hi), omega_from_lambda(lo));
}

SpectralAxes default_pulsed_axes(const ProcessSpec& process, const PumpSpec& pump,
                                 const ModeBranch& sig, const ModeBranch& idl,
                                 const ModeBranch& pmp, int n) {
    if (pump.regime != PumpRegime::pulsed)
        raise(Errc::BadConfig, "pulsed axes need a pulsed pump");
    const ProcessSpec proc = resolve_grating(process, pump, sig, idl, pmp);
    const double w0 = pump.omega_p() / 2.0;
    const double lam_deg = lambda_from_omega(w0);
    // Lobe extent along the difference direction from the group-index walk-off
    // between signal and idler; the sum direction is bounded by the pump band.
    const double walkoff =
        std::abs(idl.n_g(lam_deg) - sig.n_g(lam_deg)) / c_um_per_fs;  // fs/um
    if (!(walkoff > 0.0))
        raise(Errc::BadConfig, "pulsed axes need distinct signal/idler group indices");
    const double lobe_half = 8.0 * pi / (proc.length_um() * walkoff);
    const double half = 2.0 * pump.sigma_omega() + 0.5 * lobe_half;
    SpectralAxes axes;
    axes.omega_s = Eigen::VectorXd::LinSpaced(n, w0 - half, w0 + half);
    axes.omega_i = axes.omega_s;
    return axes;
}

}  // namespace spdcwg
