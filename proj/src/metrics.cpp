#include "spdcwg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/SVD>

#include "spdcwg/error.hpp"

namespace spdcwg {

namespace {

constexpr double kSupportLevel = 1e-6;  // of peak |f|, for the splitting flag

struct ExchangeOverlap {
    // Per-sample products f(w) conj(f(w_p - w)) and |f(w)|^2 restricted to
    // correctly split pairs, kept unsummed so a compensation phase can be
    // applied per sample.
    Eigen::VectorXcd cross;
    Eigen::VectorXd detuning;  // w - w_p/2 on the kept samples
    double den = 0.0;
    double loss_fraction = 0.0;
    bool inside_support = false;
};

Eigen::VectorXcd exchange_values(const Eigen::VectorXd& ws, const Eigen::VectorXcd& f,
                                 double omega_p) {
    const int n = static_cast<int>(ws.size());
    Eigen::VectorXcd g(n);
    if (std::abs(ws[0] + ws[n - 1] - omega_p) <= 1e-9 * omega_p) {
        for (int i = 0; i < n; ++i) g[i] = f[n - 1 - i];
        return g;
    }
    const double step = (ws[n - 1] - ws[0]) / (n - 1);
    for (int i = 0; i < n; ++i) {
        const double u = (omega_p - ws[i] - ws[0]) / step;
        if (u < 0.0 || u > n - 1) {
            g[i] = 0.0;
            continue;
        }
        const int k = std::min(static_cast<int>(std::floor(u)), n - 2);
        const double t = u - k;
        g[i] = (1.0 - t) * f[k] + t * f[k + 1];
    }
    return g;
}

ExchangeOverlap exchange_overlap(const BiphotonAmplitude& bwf, double splitting_nm) {
    if (bwf.kind != BwfKind::line1d)
        raise(Errc::NotOneDimensional, "concurrence is defined for CW line amplitudes");
    const double omega_d = omega_from_lambda(1e-3 * splitting_nm);
    const Eigen::VectorXd& ws = bwf.omega_s;
    const Eigen::VectorXcd f = bwf.values.col(0);
    const Eigen::VectorXcd g = exchange_values(ws, f, bwf.omega_p);
    const int n = static_cast<int>(ws.size());

    ExchangeOverlap ex;
    ex.cross.resize(n);
    ex.detuning.resize(n);
    int kept = 0;
    double total = 0.0, lost = 0.0;
    for (int i = 0; i < n; ++i) {
        const double mass = std::norm(f[i]);
        total += mass;
        const bool s_high = ws[i] > omega_d;
        const bool partner_high = bwf.omega_p - ws[i] > omega_d;
        if (s_high == partner_high) {
            lost += mass;
            continue;
        }
        ex.cross[kept] = f[i] * std::conj(g[i]);
        ex.detuning[kept] = ws[i] - bwf.omega_p / 2.0;
        ex.den += mass;
        ++kept;
    }
    ex.cross.conservativeResize(kept);
    ex.detuning.conservativeResize(kept);
    ex.loss_fraction = total > 0.0 ? lost / total : 0.0;

    const double peak = f.cwiseAbs().maxCoeff();
    bool below = false, above = false;
    for (int i = 0; i < n; ++i) {
        if (std::abs(f[i]) < kSupportLevel * peak) continue;
        (ws[i] < omega_d ? below : above) = true;
    }
    ex.inside_support = below && above;
    return ex;
}

double concurrence_at(const ExchangeOverlap& ex, double tau_fs) {
    if (ex.den <= 0.0) return 0.0;
    std::complex<double> num = 0.0;
    for (int i = 0; i < ex.cross.size(); ++i) {
        const double phase = 2.0 * tau_fs * ex.detuning[i];
        num += ex.cross[i] * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return std::abs(num) / ex.den;
}

}  // namespace

SchmidtResult schmidt_decompose(const BiphotonAmplitude& bwf) {
    if (bwf.kind != BwfKind::grid2d)
        raise(Errc::NotTwoDimensional, "Schmidt decomposition needs a 2D amplitude grid");
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(bwf.values);
    const Eigen::VectorXd s2 = svd.singularValues().cwiseAbs2();
    SchmidtResult r;
    r.coefficients = s2 / s2.sum();
    r.K = 1.0 / r.coefficients.squaredNorm();
    r.purity = 1.0 / r.K;
    return r;
}

CwConcurrence concurrence_cw(const BiphotonAmplitude& bwf, double splitting_nm) {
    const ExchangeOverlap ex = exchange_overlap(bwf, splitting_nm);
    CwConcurrence r;
    r.C = concurrence_at(ex, 0.0);
    r.loss_fraction = ex.loss_fraction;
    r.splitting_inside_support = ex.inside_support;
    return r;
}

Compensation compensated_concurrence(const BiphotonAmplitude& bwf, double tau_range_fs,
                                     double splitting_nm) {
    if (!(tau_range_fs >= 0.0))
        raise(Errc::BadConfig, "compensation delay range must be nonnegative");
    const ExchangeOverlap ex = exchange_overlap(bwf, splitting_nm);

    const double c0 = concurrence_at(ex, 0.0);
    Compensation best{c0, 0.0};
    if (tau_range_fs == 0.0) return best;

    const int coarse = 128;
    double bracket = 0.0;
    double bracket_c = c0;
    for (int k = 0; k <= coarse; ++k) {
        const double tau = -tau_range_fs + 2.0 * tau_range_fs * k / coarse;
        const double c = concurrence_at(ex, tau);
        if (c > bracket_c) {
            bracket_c = c;
            bracket = tau;
        }
    }
    const double seg = 2.0 * tau_range_fs / coarse;
    double lo = std::max(-tau_range_fs, bracket - seg);
    double hi = std::min(tau_range_fs, bracket + seg);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
    double fa = concurrence_at(ex, a), fb = concurrence_at(ex, b);
    while (hi - lo > 0.1) {
        if (fa < fb) {
            lo = a;
            a = b;
            fa = fb;
            b = lo + gr * (hi - lo);
            fb = concurrence_at(ex, b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - gr * (hi - lo);
            fa = concurrence_at(ex, a);
        }
    }
    const double tau_star = 0.5 * (lo + hi);
    const double c_star = concurrence_at(ex, tau_star);
    if (c_star > best.c_max) best = {c_star, tau_star};
    return best;
}

Marginals marginal_spectra(const BiphotonAmplitude& bwf) {
    Marginals m;
    if (bwf.kind == BwfKind::grid2d) {
        const Eigen::MatrixXd jsi = bwf.jsi();
        m.omega_s = bwf.omega_s;
        m.omega_i = bwf.omega_i;
        m.signal = jsi.rowwise().sum() * bwf.d_omega_i();
        m.idler = jsi.colwise().sum().transpose() * bwf.d_omega_s();
        return m;
    }
    const Eigen::VectorXd density = bwf.values.col(0).cwiseAbs2();
    m.omega_s = bwf.omega_s;
    m.signal = density;
    const int n = static_cast<int>(bwf.omega_i.size());
    m.omega_i.resize(n);
    m.idler.resize(n);
    for (int i = 0; i < n; ++i) {
        m.omega_i[i] = bwf.omega_i[n - 1 - i];
        m.idler[i] = density[n - 1 - i];
    }
    return m;
}

}  // namespace spdcwg
