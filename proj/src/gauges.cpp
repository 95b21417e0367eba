#include "dfpt/gauges.hpp"

#include <cmath>

namespace dfpt {

std::string to_string(GaugeKind k) {
    switch (k) {
        case GaugeKind::Orthogonal: return "orth";
        case GaugeKind::Simple: return "simple";
        case GaugeKind::QuantumEspresso: return "qe";
        case GaugeKind::Abinit: return "abinit";
        case GaugeKind::Minimal: return "min";
    }
    return "?";
}

GaugeKind gauge_from_string(const std::string& s) {
    if (s == "orth") return GaugeKind::Orthogonal;
    if (s == "simple") return GaugeKind::Simple;
    if (s == "qe") return GaugeKind::QuantumEspresso;
    if (s == "abinit") return GaugeKind::Abinit;
    if (s == "min") return GaugeKind::Minimal;
    throw std::invalid_argument("unknown gauge kind: " + s);
}

double delta_fermi_level(const std::vector<ChannelDEps>& channels) {
    double num = 0.0, den = 0.0;
    long n_bands = 0;
    for (const auto& c : channels) {
        if (c.d_eps.size() != c.occ_deriv.size())
            throw std::invalid_argument("delta_fermi_level: dimension mismatch");
        for (Eigen::Index i = 0; i < c.d_eps.size(); ++i) {
            num += c.weight * c.occ_deriv[i] * c.d_eps[i];
            den += c.weight * c.occ_deriv[i];
            ++n_bands;
        }
    }
    if (std::abs(den) < 1e-12 * static_cast<double>(n_bands)) return 0.0;  // insulating limit
    return num / den;
}

namespace {

// 1/(1 + e^x) without overflow
double fd_factor(double x) {
    if (x > 0.0) {
        double e = std::exp(-x);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(x));
}

}  // namespace

GaugeMatrix build_gamma(const Mat& delta, const RVec& eps, const RVec& occ,
                        const Mat& dv_occ, const OccupationContext& ctx, GaugeKind kind) {
    const Eigen::Index n = eps.size();
    if (delta.rows() != n || delta.cols() != n || occ.size() != n ||
        dv_occ.rows() != n || dv_occ.cols() != n)
        throw std::invalid_argument("build_gamma: dimension mismatch");

    GaugeMatrix g;
    g.delta = delta;
    g.kind = kind;
    g.gamma = Mat::Zero(n, n);
    const double dtol = degeneracy_tolerance(eps);
    const double temp = ctx.smearing.temperature;

    for (Eigen::Index m = 0; m < n; ++m) {
        for (Eigen::Index k = 0; k < n; ++k) {
            if (m == k) continue;
            switch (kind) {
                case GaugeKind::Orthogonal:
                    if (std::abs(eps[k] - eps[m]) < dtol) {
                        // the orthogonality condition is singular on degenerate
                        // pairs; fall back to the simple rule and flag it
                        g.gamma(m, k) = 0.5 * delta(m, k);
                        g.degenerate_fallback = true;
                    } else {
                        g.gamma(m, k) = occ[k] / (eps[k] - eps[m]) * dv_occ(m, k);
                    }
                    break;
                case GaugeKind::Simple:
                    g.gamma(m, k) = 0.5 * delta(m, k);
                    break;
                case GaugeKind::QuantumEspresso:
                    g.gamma(m, k) = fd_factor((eps[k] - eps[m]) / temp) * delta(m, k);
                    break;
                case GaugeKind::Abinit: {
                    double c = occ[k] > occ[m] ? 1.0 : (occ[k] == occ[m] ? 0.5 : 0.0);
                    g.gamma(m, k) = c * delta(m, k);
                    break;
                }
                case GaugeKind::Minimal: {
                    double fn2 = occ[k] * occ[k];
                    double fm2 = occ[m] * occ[m];
                    g.gamma(m, k) = fn2 / (fn2 + fm2) * delta(m, k);
                    break;
                }
            }
        }
    }
    return g;
}

OccupiedVariation occupied_variation(const GaugeMatrix& gauge, const Mat& phi,
                                     const RVec& d_eps, const RVec& occ_deriv,
                                     double deF) {
    const Eigen::Index n = gauge.gamma.cols();
    if (phi.cols() != n || d_eps.size() != n || occ_deriv.size() != n)
        throw std::invalid_argument("occupied_variation: dimension mismatch");
    OccupiedVariation out;
    out.w = phi * gauge.gamma;
    out.df.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) out.df[i] = occ_deriv[i] * (d_eps[i] - deF);
    out.deF = deF;
    return out;
}

}  // namespace dfpt
