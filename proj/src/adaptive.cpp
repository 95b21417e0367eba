#include "dfpt/adaptive.hpp"

#include <cmath>
#include <random>

#include <Eigen/Dense>

namespace dfpt {

double xi_ratio(double eps1, double epsN, double eps_last_extra) {
    if (!(eps_last_extra > epsN))
        throw std::invalid_argument(
            "xi_ratio: last extra Ritz value must exceed eps_N (no conditioning information)");
    if (!(epsN >= eps1)) throw std::invalid_argument("xi_ratio: eps1 must not exceed epsN");
    return std::sqrt((eps_last_extra - eps1) / (eps_last_extra - epsN));
}

double bauer_fike_lower(double eps_ritz, double res_norm) {
    if (res_norm < 0.0)
        throw std::invalid_argument("bauer_fike_lower: residual norm must be nonnegative");
    return eps_ritz - res_norm;
}

RVec perturbation_bound(const Mat& h0, const Mat& w, double alpha) {
    if (h0.rows() != h0.cols() || w.rows() != w.cols() || h0.rows() != w.rows())
        throw std::invalid_argument("perturbation_bound: dimension mismatch");
    if (alpha < 0.0) throw std::invalid_argument("perturbation_bound: alpha must be >= 0");
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h0 + h0.adjoint()));
    RVec nu = es.eigenvalues();
    if (!(nu[0] + alpha > 0.0))
        throw std::invalid_argument("perturbation_bound: H0 + alpha not positive definite");
    RVec inv_sqrt = (nu.array() + alpha).rsqrt().matrix();
    Mat b = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint();
    Mat m = b * (0.5 * (w + w.adjoint())) * b;
    m = 0.5 * (m + m.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> em(m);
    double norm = em.eigenvalues().cwiseAbs().maxCoeff();
    return ((nu.array() + alpha) * norm).matrix();
}

ConditioningReport build_conditioning_report(const GroundState& gs) {
    ConditioningReport rep;
    for (std::size_t c = 0; c < gs.channels.size(); ++c) {
        const auto& slice = gs.channels[c].slice;
        if (slice.n_occ == 0 || slice.n_extra() == 0) continue;
        ChannelConditioning cc;
        cc.channel_id = static_cast<int>(c);
        cc.eps1 = slice.ritz[0];
        cc.epsN = slice.ritz[slice.n_occ - 1];
        const int last = slice.n_bands() - 1;
        cc.eps_last_extra = slice.ritz[last];
        cc.last_residual = slice.res_norms[last];
        cc.xi = xi_ratio(cc.eps1, cc.epsN, cc.eps_last_extra);
        double corrected = bauer_fike_lower(cc.eps_last_extra, cc.last_residual);
        cc.xi_bauer_fike =
            corrected > cc.epsN ? xi_ratio(cc.eps1, cc.epsN, corrected) : 0.0;
        cc.kappa_up_to_c.resize(slice.n_occ);
        for (int n = 0; n < slice.n_occ; ++n)
            cc.kappa_up_to_c[n] = 1.0 / (cc.eps_last_extra - slice.ritz[n]);
        rep.channels.push_back(std::move(cc));
    }
    return rep;
}

namespace {

Vec seeded_orthonormal_vector(std::mt19937_64& rng, const Mat& against) {
    std::normal_distribution<double> dist(0.0, 1.0);
    const Eigen::Index n = against.rows();
    for (int attempt = 0; attempt < 64; ++attempt) {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double re = dist(rng);
            double im = dist(rng);
            v[i] = Complex(re, im);
        }
        // twice-repeated Gram-Schmidt against all current bands
        for (int pass = 0; pass < 2; ++pass) v -= against * (against.adjoint() * v);
        double nrm = v.norm();
        if (nrm > 1e-8 * std::sqrt(static_cast<double>(n))) return v / nrm;
    }
    throw std::runtime_error("adapt_bands: failed to draw an independent random band");
}

}  // namespace

AdaptResult adapt_bands(const GroundState& gs, int channel_id, double xi_target,
                        int max_added, std::uint64_t seed) {
    if (!(xi_target > 1.0))
        throw std::invalid_argument("adapt_bands: xi_target must exceed 1");
    if (channel_id < 0 || channel_id >= static_cast<int>(gs.channels.size()))
        throw std::invalid_argument("adapt_bands: channel_id out of range");

    const auto& cs = gs.channels[channel_id];
    const HamiltonianChannel& ch = cs.channel;
    const Eigen::Index nb = ch.basis().size();
    AdaptResult out;
    out.slice = cs.slice;
    std::mt19937_64 rng(seed ^ 0xada7f00d12345ull);

    const int n_occ = out.slice.n_occ;
    if (n_occ == 0) throw std::invalid_argument("adapt_bands: no occupied bands");
    const double eps1 = out.slice.ritz[0];
    const double epsN = out.slice.ritz[n_occ - 1];
    const Mat locked = out.slice.phi();

    auto current_xi = [&]() {
        if (out.slice.n_extra() == 0) return std::numeric_limits<double>::infinity();
        double last = out.slice.ritz[out.slice.n_bands() - 1];
        if (!(last > epsN)) return std::numeric_limits<double>::infinity();
        return xi_ratio(eps1, epsN, last);
    };

    double xi = current_xi();
    int step = 0;
    while (xi > xi_target) {
        if (step >= max_added)
            throw AdaptBudgetError("adapt_bands: band budget exhausted with xi = " +
                                       std::to_string(xi),
                                   std::move(out.trace));
        if (out.slice.n_bands() >= nb)
            throw InfeasibleError("adapt_bands: basis exhausted");

        // LOBPCG refinement tolerance from the last band before the addition
        double tol;
        if (out.slice.n_extra() >= 1)
            tol = (out.slice.ritz[out.slice.n_bands() - 1] - epsN) / 50.0;
        else
            tol = std::max((epsN - eps1) / 50.0, 1e-6);
        tol = std::max(tol, 1e-12);

        Vec fresh = seeded_orthonormal_vector(rng, out.slice.bands);
        Mat x0(nb, out.slice.n_extra() + 1);
        x0 << out.slice.phi_ex(), fresh;

        long before = ch.apply_count();
        RefineResult rr = refine_block(ch, locked, std::move(x0), tol, 500, 1.0,
                                       seed + 17 * (step + 1));
        long used = ch.apply_count() - before;
        if (!rr.ok)
            throw EigensolveError("adapt_bands: extra-band refinement stalled",
                                  std::move(out.slice));

        const int total = n_occ + static_cast<int>(rr.x.cols());
        SpectrumSlice next;
        next.bands.resize(nb, total);
        next.bands << locked, rr.x;
        next.ritz.resize(total);
        next.ritz << out.slice.ritz.head(n_occ), rr.ritz;
        next.res_norms.resize(total);
        next.res_norms << out.slice.res_norms.head(n_occ), rr.res_norms;
        next.converged.assign(out.slice.converged.begin(),
                              out.slice.converged.begin() + n_occ);
        next.converged.insert(next.converged.end(), rr.converged.begin(),
                              rr.converged.end());
        next.n_occ = n_occ;
        out.slice = std::move(next);

        xi = current_xi();
        ++step;
        out.trace.push_back({step, out.slice.n_extra(), xi, tol, used});
    }
    return out;
}

}  // namespace dfpt
