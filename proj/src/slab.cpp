#include "spdcwg/slab.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>

#include "spdcwg/constants.hpp"
#include "spdcwg/error.hpp"

namespace spdcwg {

const char* polarization_name(Polarization p) {
    return p == Polarization::TE ? "TE" : "TM";
}

Polarization polarization_from_string(const std::string& s) {
    if (s == "TE" || s == "te") return Polarization::TE;
    if (s == "TM" || s == "tm") return Polarization::TM;
    raise(Errc::BadConfig, "polarization must be TE or TM, got '" + s + "'");
}

double ResolvedStack::z_top() const {
    double z = base_z_um;
    for (double t : d) z += t;
    return z;
}

std::vector<double> ResolvedStack::interfaces() const {
    std::vector<double> zs{base_z_um};
    for (double t : d) zs.push_back(zs.back() + t);
    return zs;
}

namespace {

inline double p_factor(Polarization pol, double n) {
    return pol == Polarization::TE ? 1.0 : 1.0 / (n * n);
}

// Propagate (phi, psi) across a layer of thickness t with transverse
// wavenumber q^2 and continuity factor p.
inline void layer_step(double& phi, double& psi, double q2, double p, double t) {
    if (q2 * t * t > 1e-24) {
        const double q = std::sqrt(q2);
        const double c = std::cos(q * t);
        const double s = std::sin(q * t);
        const double phi2 = phi * c + psi * s / (p * q);
        const double psi2 = -p * q * phi * s + psi * c;
        phi = phi2;
        psi = psi2;
    } else if (q2 * t * t < -1e-24) {
        const double g = std::sqrt(-q2);
        const double c = std::cosh(g * t);
        const double s = std::sinh(g * t);
        const double phi2 = phi * c + psi * s / (p * g);
        const double psi2 = p * g * phi * s + psi * c;
        phi = phi2;
        psi = psi2;
    } else {
        phi += psi * t / p;
    }
}

struct Propagation {
    double phi_end, psi_end;
    double gamma_top, p_top;
};

Propagation propagate(const ResolvedStack& s, double k0, Polarization pol, double n_eff,
                      bool renormalize,
                      std::vector<double>* phi0 = nullptr, std::vector<double>* psi0 = nullptr,
                      std::vector<double>* q2s = nullptr, std::vector<double>* ps = nullptr) {
    const std::size_t nl = s.n.size();
    const double g0 = k0 * std::sqrt(std::max(n_eff * n_eff - s.n.front() * s.n.front(), 0.0));
    const double p0 = p_factor(pol, s.n.front());
    double phi = 1.0;
    double psi = p0 * g0;  // decay toward -inf in the bottom outer layer
    auto record = [&](double q2, double p) {
        if (phi0) {
            phi0->push_back(phi);
            psi0->push_back(psi);
            q2s->push_back(q2);
            ps->push_back(p);
        }
    };
    record(-g0 * g0, p0);
    for (std::size_t i = 1; i + 1 < nl; ++i) {
        const double q2 = k0 * k0 * (s.n[i] * s.n[i] - n_eff * n_eff);
        const double p = p_factor(pol, s.n[i]);
        record(q2, p);
        layer_step(phi, psi, q2, p, s.d[i - 1]);
        if (renormalize) {
            const double m = std::max(std::abs(phi), std::abs(psi));
            if (m > 1e100) {
                phi /= m;
                psi /= m;
            }
        }
    }
    const double gN = k0 * std::sqrt(std::max(n_eff * n_eff - s.n.back() * s.n.back(), 0.0));
    const double pN = p_factor(pol, s.n.back());
    record(-gN * gN, pN);
    return {phi, psi, gN, pN};
}

double dispersion_value(const ResolvedStack& s, double k0, Polarization pol, double n_eff) {
    const Propagation r = propagate(s, k0, pol, n_eff, true);
    const double a = r.psi_end;
    const double b = r.p_top * r.gamma_top * r.phi_end;
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return (a + b) / scale;
}

// Sturm oscillation count for the shooting solution: interior zero crossings
// plus the possible tail zero in the top outer layer.  The count increases by
// exactly one each time n_eff drops through an eigenvalue, which makes missed
// near-degenerate root pairs detectable no matter how narrow the sign lobe of
// the dispersion function is.
int shooting_zero_count(const ResolvedStack& s, double k0, Polarization pol, double n_eff) {
    const std::size_t nl = s.n.size();
    const double g0 = k0 * std::sqrt(std::max(n_eff * n_eff - s.n.front() * s.n.front(), 0.0));
    double phi = 1.0;
    double psi = p_factor(pol, s.n.front()) * g0;
    int count = 0;
    for (std::size_t i = 1; i + 1 < nl; ++i) {
        const double q2 = k0 * k0 * (s.n[i] * s.n[i] - n_eff * n_eff);
        const double p = p_factor(pol, s.n[i]);
        const double t = s.d[i - 1];
        if (q2 * t * t > 1e-24) {
            const double q = std::sqrt(q2);
            const double th0 = std::atan2(q * p * phi, psi) - 1e-12;
            count += static_cast<int>(std::floor((th0 + q * t) / pi) - std::floor(th0 / pi));
            layer_step(phi, psi, q2, p, t);
        } else {
            const double prev = phi;
            layer_step(phi, psi, q2, p, t);
            if (prev * phi < 0.0) ++count;
        }
        const double m = std::max(std::abs(phi), std::abs(psi));
        if (m > 1e100) {
            phi /= m;
            psi /= m;
        }
    }
    const double gN = k0 * std::sqrt(std::max(n_eff * n_eff - s.n.back() * s.n.back(), 0.0));
    const double pN = p_factor(pol, s.n.back());
    if (gN > 0.0) {
        const double grow = phi + psi / (pN * gN);
        const double decay = phi - psi / (pN * gN);
        if (grow * decay < 0.0 && std::abs(decay) > std::abs(grow)) ++count;
    }
    return count;
}

}  // namespace

double slab_dispersion(const ResolvedStack& s, double lambda_um, Polarization pol,
                       double n_eff) {
    return dispersion_value(s, 2.0 * pi / lambda_um, pol, n_eff);
}

double SlabMode::phi(double z) const {
    const std::size_t nl = stack_.n.size();
    // Locate the layer; z below base is the bottom outer layer.
    std::size_t i = 0;
    while (i + 1 < nl && i < z_lo_.size() - 1 && z >= z_lo_[i + 1]) ++i;
    const double p = p_[i];
    const double q2 = q2_[i];
    double ph = phi0_[i];
    double ps = psi0_[i];
    if (i == 0) {
        const double g = std::sqrt(std::max(-q2, 0.0));
        return ph * std::exp(g * (z - z_lo_[1]));  // decays toward -inf
    }
    if (i + 1 == nl) {
        const double g = std::sqrt(std::max(-q2, 0.0));
        return ph * std::exp(-g * (z - z_lo_[i]));  // decays toward +inf
    }
    layer_step(ph, ps, q2, p, z - z_lo_[i]);
    return ph;
}

Eigen::VectorXd SlabMode::sample(const Eigen::VectorXd& z) const {
    Eigen::VectorXd out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = phi(z[i]);
    return out;
}

struct SlabModeBuilder {
    static SlabMode build(const ResolvedStack& s, double lambda_um, Polarization pol,
                          double root, double res) {
        SlabMode m;
        m.lambda_um = lambda_um;
        m.pol = pol;
        m.n_eff = root;
        m.residual = res;
        m.stack_ = s;
        m.k0_ = 2.0 * pi / lambda_um;
        propagate(s, m.k0_, pol, root, false, &m.phi0_, &m.psi0_, &m.q2_, &m.p_);
        // z_lo_[i] is the lower edge of layer i; the bottom outer layer reuses
        // the first interface so the exponential is anchored there.
        const std::vector<double> ifs = s.interfaces();
        m.z_lo_.assign(1, ifs.front());
        m.z_lo_.insert(m.z_lo_.end(), ifs.begin(), ifs.end());
        return m;
    }
};

std::vector<SlabMode> solve_slab_modes(const ResolvedStack& s, double lambda_um,
                                       Polarization pol, int scan_samples) {
    if (s.n.size() < 2 || s.d.size() + 2 != s.n.size())
        raise(Errc::BadConfig, "slab stack needs two outer layers and matching thicknesses");
    for (double t : s.d)
        if (!(t > 0.0)) raise(Errc::BadConfig, "slab layer thicknesses must be positive");
    if (!(lambda_um > 0.0)) raise(Errc::BadConfig, "wavelength must be positive");

    const double k0 = 2.0 * pi / lambda_um;
    const double guard = 1e-9;
    const double n_lo = std::max(s.n.front(), s.n.back()) + guard;
    const double n_hi = *std::max_element(s.n.begin(), s.n.end()) - guard;
    if (n_hi <= n_lo) return {};

    const int n0 = std::max(scan_samples, 2000);
    std::vector<double> xs(n0 + 1), fs(n0 + 1);
    for (int i = 0; i <= n0; ++i) {
        xs[i] = n_lo + (n_hi - n_lo) * i / n0;
        fs[i] = dispersion_value(s, k0, pol, xs[i]);
    }

    std::vector<int> zc(n0 + 1);
    for (int i = 0; i <= n0; ++i) zc[i] = shooting_zero_count(s, k0, pol, xs[i]);

    std::vector<std::pair<double, double>> brackets;
    // An anti-crossing supermode pair can dip through zero twice between scan
    // samples without a sign change at either one; the oscillation count
    // exposes such cells, and binary search on it corners each hidden root
    // until its own sign change becomes visible.
    auto isolate = [&](double a, double b, int za, int zb, auto&& self) -> void {
        if (za <= zb || b - a < 1e-13) return;
        const double fa = dispersion_value(s, k0, pol, a);
        const double fb = dispersion_value(s, k0, pol, b);
        if (za - zb == 1 && (fa == 0.0 || fa * fb < 0.0)) {
            brackets.emplace_back(a, b);
            return;
        }
        const double m = 0.5 * (a + b);
        const int zm = shooting_zero_count(s, k0, pol, m);
        self(a, m, za, zm, self);
        self(m, b, zm, zb, self);
    };

    for (int i = 0; i < n0; ++i) {
        const bool flip = fs[i] == 0.0 || fs[i] * fs[i + 1] < 0.0;
        if (fs[i] == 0.0)
            brackets.emplace_back(xs[i], xs[i]);
        else if (flip)
            brackets.emplace_back(xs[i], xs[i + 1]);
        if (zc[i] - zc[i + 1] > (flip ? 1 : 0))
            isolate(xs[i], xs[i + 1], zc[i], zc[i + 1], isolate);
    }
    if (fs[n0] == 0.0) brackets.emplace_back(xs[n0], xs[n0]);

    // Root quality is reported as the Newton-step estimate |f/f'| relative to
    // n_eff: the dispersion value alone is not scale-free near tightly coupled
    // roots, where its normalized slope can exceed 1e8 per unit index and one
    // ulp of n_eff already moves it above any fixed threshold.
    std::vector<std::pair<double, double>> roots;
    for (auto [a, b] : brackets) {
        if (a == b) {
            roots.emplace_back(a, 0.0);
            continue;
        }
        double fa = dispersion_value(s, k0, pol, a);
        double fb = dispersion_value(s, k0, pol, b);
        if (fa == 0.0) {
            roots.emplace_back(a, 0.0);
            continue;
        }
        if (fb == 0.0) {
            roots.emplace_back(b, 0.0);
            continue;
        }
        if (fa * fb > 0.0) raise(Errc::RootRefinementFailure, "bisection bracket lost");
        for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
            const double c = 0.5 * (a + b);
            const double fc = dispersion_value(s, k0, pol, c);
            if (fc == 0.0) {
                a = b = c;
                break;
            }
            if (fa * fc < 0.0) {
                b = c;
                fb = fc;
            } else {
                a = c;
                fa = fc;
            }
        }
        const double r = 0.5 * (a + b);
        double res = 0.0;
        if (b > a) {
            const double slope = (fb - fa) / (b - a);
            const double fr = dispersion_value(s, k0, pol, r);
            res = slope != 0.0 ? fr / slope / std::max(std::abs(r), 1e-300) : fr;
        }
        roots.emplace_back(r, res);
    }

    std::sort(roots.begin(), roots.end(), std::greater<>());
    std::vector<SlabMode> modes;
    for (auto [r, res] : roots) {
        if (!modes.empty() && std::abs(modes.back().n_eff - r) < 1e-9) continue;
        modes.push_back(SlabModeBuilder::build(s, lambda_um, pol, r, res));
    }
    return modes;
}

namespace {

struct GaussNode {
    double x, w;
};

// 16-point Gauss-Legendre rule on [-1, 1], found once by Newton iteration on
// the Legendre recurrence.
const std::array<GaussNode, 16>& gauss16() {
    static const std::array<GaussNode, 16> table = [] {
        std::array<GaussNode, 16> t{};
        constexpr int n = 16;
        for (int i = 0; i < n; ++i) {
            double x = std::cos(pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 64; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            t[i] = {x, 2.0 / ((1.0 - x * x) * dp * dp)};
        }
        return t;
    }();
    return table;
}

std::size_t layer_at(const std::vector<double>& interfaces, double z) {
    return std::upper_bound(interfaces.begin(), interfaces.end(), z) - interfaces.begin();
}

double outer_decay(const SlabMode& m, bool top) {
    const double n_out = top ? m.stack().n.back() : m.stack().n.front();
    const double k0 = 2.0 * pi / m.lambda_um;
    return k0 * std::sqrt(std::max(m.n_eff * m.n_eff - n_out * n_out, 0.0));
}

}  // namespace

double mode_moment(const SlabMode& a, const SlabMode& b, const std::vector<double>& weights,
                   double lo, double hi) {
    const std::vector<double> ifa = a.stack().interfaces();
    const std::vector<double> ifb = b.stack().interfaces();
    if (weights.size() != a.stack().n.size())
        raise(Errc::BadConfig, "mode_moment: one weight per layer of the first mode's stack");
    if (!(lo < hi)) return 0.0;

    const double z_bot = std::min(ifa.front(), ifb.front());
    const double z_top = std::max(ifa.back(), ifb.back());
    double total = 0.0;

    if (lo < z_bot) {
        const double g = std::max(outer_decay(a, false) + outer_decay(b, false), 1e-300);
        const double t1 = std::min(hi, z_bot);
        const double e1 = std::exp(g * (t1 - z_bot));
        const double e0 = std::isinf(lo) ? 0.0 : std::exp(g * (lo - z_bot));
        total += weights.front() * a.phi(z_bot) * b.phi(z_bot) * (e1 - e0) / g;
    }
    if (hi > z_top) {
        const double g = std::max(outer_decay(a, true) + outer_decay(b, true), 1e-300);
        const double t0 = std::max(lo, z_top);
        const double e0 = std::exp(-g * (t0 - z_top));
        const double e1 = std::isinf(hi) ? 0.0 : std::exp(-g * (hi - z_top));
        total += weights.back() * a.phi(z_top) * b.phi(z_top) * (e0 - e1) / g;
    }

    const double c_lo = std::max(lo, z_bot);
    const double c_hi = std::min(hi, z_top);
    if (c_lo >= c_hi) return total;

    std::vector<double> bp{c_lo};
    for (double z : ifa)
        if (z > c_lo && z < c_hi) bp.push_back(z);
    for (double z : ifb)
        if (z > c_lo && z < c_hi) bp.push_back(z);
    bp.push_back(c_hi);
    std::sort(bp.begin(), bp.end());

    const auto& rule = gauss16();
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
        const double h = bp[i + 1] - bp[i];
        if (!(h > 0.0)) continue;
        const double w_layer = weights[layer_at(ifa, 0.5 * (bp[i] + bp[i + 1]))];
        const int panels = std::max(1, static_cast<int>(std::ceil(h / 0.25)));
        for (int p = 0; p < panels; ++p) {
            const double pa = bp[i] + h * p / panels;
            const double pb = bp[i] + h * (p + 1) / panels;
            const double mid = 0.5 * (pa + pb);
            const double half = 0.5 * (pb - pa);
            double acc = 0.0;
            for (const auto& node : rule) {
                const double z = mid + half * node.x;
                acc += node.w * a.phi(z) * b.phi(z);
            }
            total += w_layer * half * acc;
        }
    }
    return total;
}

}  // namespace spdcwg
