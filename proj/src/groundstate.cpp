#include "dfpt/groundstate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "dfpt/sternheimer.hpp"

namespace dfpt {

namespace {

void check_temperature(const SmearingScheme& s) {
    if (!(s.temperature > 0.0))
        throw std::invalid_argument("smearing temperature must be positive");
}

// f_max/(1+e^x) without overflow
double fermi_dirac(double x, double f_max) {
    if (x > 0.0) {
        double e = std::exp(-x);
        return f_max * e / (1.0 + e);
    }
    return f_max / (1.0 + std::exp(x));
}

}  // namespace

double occupation(double eps, double fermi, const SmearingScheme& s, double f_max) {
    check_temperature(s);
    const double x = (eps - fermi) / s.temperature;
    switch (s.kind) {
        case SmearingKind::FermiDirac:
            return fermi_dirac(x, f_max);
        case SmearingKind::Gaussian:
            return 0.5 * f_max * std::erfc(x / std::sqrt(2.0));
    }
    throw std::logic_error("unknown smearing kind");
}

double occupation_derivative(double eps, double fermi, const SmearingScheme& s,
                             double f_max) {
    check_temperature(s);
    const double x = (eps - fermi) / s.temperature;
    double fprime;
    switch (s.kind) {
        case SmearingKind::FermiDirac: {
            // -f_max e^{-|x|} / (1 + e^{-|x|})^2, symmetric in x
            double e = std::exp(-std::abs(x));
            double d = 1.0 + e;
            fprime = -f_max * e / (d * d);
            break;
        }
        case SmearingKind::Gaussian:
            fprime = -0.5 * f_max * std::sqrt(2.0 / M_PI) * std::exp(-0.5 * x * x);
            break;
        default:
            throw std::logic_error("unknown smearing kind");
    }
    return fprime / s.temperature;
}

double occupation_quotient(const OccupationContext& ctx, double eps_n, double eps_m,
                           double degeneracy_tol) {
    if (std::abs(eps_n - eps_m) < degeneracy_tol)
        return ctx.occ_deriv(0.5 * (eps_n + eps_m));
    return (ctx.occ(eps_n) - ctx.occ(eps_m)) / (eps_n - eps_m);
}

double degeneracy_tolerance(const RVec& eps) {
    if (eps.size() == 0) return 1e-8;
    return 1e-8 * std::max(1.0, eps.maxCoeff() - eps.minCoeff());
}

double solve_fermi_level(const std::vector<ChannelLevels>& channels,
                         const SmearingScheme& s, double n_el) {
    check_temperature(s);
    if (channels.empty()) throw std::invalid_argument("solve_fermi_level: no channels");
    if (!(n_el > 0.0)) throw std::invalid_argument("solve_fermi_level: n_el must be positive");

    double capacity = 0.0;
    double eps_min = std::numeric_limits<double>::infinity();
    double eps_max = -std::numeric_limits<double>::infinity();
    for (const auto& c : channels) {
        if (c.eps.size() == 0) throw std::invalid_argument("solve_fermi_level: empty spectrum");
        capacity += c.weight * c.f_max * static_cast<double>(c.eps.size());
        eps_min = std::min(eps_min, c.eps.minCoeff());
        eps_max = std::max(eps_max, c.eps.maxCoeff());
    }
    if (n_el >= capacity)
        throw InfeasibleError("solve_fermi_level: n_el exceeds total band capacity");

    auto charge = [&](double mu) {
        double q = 0.0;
        for (const auto& c : channels) {
            double sum = 0.0;
            for (Eigen::Index i = 0; i < c.eps.size(); ++i)
                sum += occupation(c.eps[i], mu, s, c.f_max);
            q += c.weight * sum;
        }
        return q;
    };
    auto charge_slope = [&](double mu) {
        // d charge / d mu = -sum w f'_n >= 0
        double g = 0.0;
        for (const auto& c : channels) {
            double sum = 0.0;
            for (Eigen::Index i = 0; i < c.eps.size(); ++i)
                sum += occupation_derivative(c.eps[i], mu, s, c.f_max);
            g += c.weight * sum;
        }
        return -g;
    };

    const double margin = 20.0 * s.temperature * std::log(10.0);
    double lo = eps_min - margin;
    double hi = eps_max + margin;
    if (charge(lo) > n_el || charge(hi) < n_el)
        throw InfeasibleError("solve_fermi_level: charge constraint not bracketed");

    double mu = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        double q = charge(mu);
        if (std::abs(q - n_el) <= 1e-13 * n_el) break;
        if (q < n_el)
            lo = mu;
        else
            hi = mu;
        // Newton step on the monotone charge residual, kept inside the bracket
        double slope = charge_slope(mu);
        double next = (slope > 0.0) ? mu - (q - n_el) / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == mu) break;
        mu = next;
    }
    return mu;
}

double SpectrumSlice::orthonormality_defect() const {
    if (n_bands() == 0) return 0.0;
    Mat g = bands.adjoint() * bands;
    g -= Mat::Identity(g.rows(), g.cols());
    return g.cwiseAbs().maxCoeff();
}

double SpectrumSlice::ritz_offdiag(const HamiltonianChannel& ch) const {
    if (n_bands() == 0) return 0.0;
    Mat h = bands.adjoint() * (ch.dense() * bands);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < h.rows(); ++i)
        for (Eigen::Index j = 0; j < h.cols(); ++j)
            if (i != j) worst = std::max(worst, std::abs(h(i, j)));
    return worst;
}

double GroundState::total_charge() const {
    double q = 0.0;
    for (const auto& c : channels) q += c.channel.weight() * c.occupations.sum();
    return q;
}

// ---------------------------------------------------------------------------
// Block preconditioned Rayleigh-Ritz eigensolver
// ---------------------------------------------------------------------------

namespace {

void project_out(Mat& x, const Mat& basis) {
    if (basis.cols() == 0 || x.cols() == 0) return;
    x -= basis * (basis.adjoint() * x);
}

// Modified Gram-Schmidt with a second pass; drops numerically dependent columns.
Mat orthonormalize(const Mat& input, const std::vector<const Mat*>& against) {
    Mat x = input;
    for (const Mat* b : against)
        if (b) project_out(x, *b);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        double pre = x.col(j).norm();
        for (int pass = 0; pass < 2; ++pass) {
            for (const Mat* b : against)
                if (b) x.col(j) -= (*b) * (b->adjoint() * x.col(j));
            for (Eigen::Index i : keep)
                x.col(j) -= x.col(i) * (x.col(i).dot(x.col(j)));
        }
        double post = x.col(j).norm();
        if (pre == 0.0 || post < 1e-10 * pre) continue;
        x.col(j) /= post;
        keep.push_back(j);
    }
    Mat out(x.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) out.col(i) = x.col(keep[i]);
    return out;
}

Vec random_vector(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double re = dist(rng);
        double im = dist(rng);
        v[i] = Complex(re, im);
    }
    return v;
}

struct CoreResult {
    Mat x;
    RVec ritz;
    RVec res_norms;
    std::vector<char> converged;
    int iterations = 0;
    long h_applies = 0;
    bool ok = false;
};

// Three-term subspace [X W P]: W preconditioned residuals, P previous update
// direction. H is reapplied to the full trial block every iteration so the
// reported residuals stay faithful to machine precision.
CoreResult lobpcg_core(const HamiltonianChannel& ch, Mat x, const Mat* locked,
                       int n_req, double tol, int max_iter, double shift,
                       std::uint64_t seed) {
    const Eigen::Index n = ch.basis().size();
    const Eigen::Index k = x.cols();
    const Eigen::Index n_locked = locked ? locked->cols() : 0;
    if (k == 0) throw std::invalid_argument("eigensolver: empty block");
    if (n_req > k) throw std::invalid_argument("eigensolver: n_req exceeds block size");
    if (k + n_locked > n)
        throw std::invalid_argument("eigensolver: block exceeds basis size");

    KineticPreconditioner prec = kinetic_preconditioner(ch.basis(), shift);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);

    std::vector<const Mat*> base;
    if (locked && locked->cols() > 0) base.push_back(locked);

    x = orthonormalize(x, base);
    while (x.cols() < k) {  // replenish dropped initial columns
        Mat extra = random_vector(rng, n);
        std::vector<const Mat*> ag = base;
        ag.push_back(&x);
        Mat e = orthonormalize(extra, ag);
        if (e.cols() == 0) continue;
        Mat nx(n, x.cols() + 1);
        nx << x, e;
        x = std::move(nx);
    }

    Mat w(n, 0), p(n, 0);
    CoreResult r;
    for (int iter = 1; iter <= max_iter; ++iter) {
        const Eigen::Index avail = n - n_locked - k;
        Eigen::Index kw = std::min<Eigen::Index>(w.cols(), avail);
        Eigen::Index kp = std::min<Eigen::Index>(p.cols(), avail - kw);
        Mat s(n, k + kw + kp);
        s << x, w.leftCols(kw), p.leftCols(kp);

        Mat hs = ch.apply_block(s);
        r.h_applies += s.cols();
        Mat a = s.adjoint() * hs;
        a = 0.5 * (a + a.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<Mat> es(a);
        Mat c = es.eigenvectors().leftCols(k);
        Mat x_new = s * c;
        Mat hx_new = hs * c;
        RVec theta = es.eigenvalues().head(k);

        Mat resid = hx_new - x_new * theta.asDiagonal();
        RVec rn(k);
        for (Eigen::Index j = 0; j < k; ++j) rn[j] = resid.col(j).norm();

        r.x = x_new;
        r.ritz = theta;
        r.res_norms = rn;
        r.converged.assign(k, 0);
        for (Eigen::Index j = 0; j < k; ++j) r.converged[j] = rn[j] <= tol;
        r.iterations = iter;

        bool done = true;
        for (int j = 0; j < n_req; ++j)
            if (!r.converged[j]) done = false;
        if (done) {
            r.ok = true;
            return r;
        }
        if (iter == max_iter) return r;

        // next direction block: components of the update orthogonal to old X
        Mat p_new = x_new - x * (x.adjoint() * x_new);
        std::vector<const Mat*> ag = base;
        ag.push_back(&x_new);
        p = orthonormalize(p_new, ag);

        Mat w_new = prec.apply_block(resid);
        ag.push_back(&p);
        w = orthonormalize(w_new, ag);
        if (w.cols() == 0 && avail > 0) {
            // residual space collapsed; restart from a seeded random direction
            Mat rv = random_vector(rng, n);
            w = orthonormalize(rv, ag);
        }
        x = std::move(x_new);
    }
    return r;
}

Mat lowest_kinetic_init(const HamiltonianChannel& ch, int k) {
    const int n = ch.basis().size();
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        double ka = ch.basis().kinetic(a), kb = ch.basis().kinetic(b);
        if (ka != kb) return ka < kb;
        return a < b;
    });
    Mat x = Mat::Zero(n, k);
    for (int j = 0; j < k; ++j) x(idx[j], j) = 1.0;
    return x;
}

}  // namespace

SpectrumSlice block_eigensolve(const HamiltonianChannel& ch, const EigensolveOptions& opts) {
    if (opts.n_conv < 1) throw std::invalid_argument("block_eigensolve: n_conv must be >= 1");
    if (opts.n_ex < 0) throw std::invalid_argument("block_eigensolve: n_ex must be >= 0");
    const int k = opts.n_conv + opts.n_ex;
    if (k > ch.basis().size())
        throw std::invalid_argument("block_eigensolve: n_conv + n_ex exceeds basis size");

    Mat x0 = lowest_kinetic_init(ch, k);
    CoreResult r = lobpcg_core(ch, x0, nullptr, opts.n_conv, opts.tol, opts.max_iter,
                               opts.precond_shift, opts.seed);
    SpectrumSlice slice;
    slice.bands = std::move(r.x);
    slice.ritz = std::move(r.ritz);
    slice.res_norms = std::move(r.res_norms);
    slice.converged = std::move(r.converged);
    slice.n_occ = opts.n_conv;
    if (!r.ok)
        throw EigensolveError("block_eigensolve: max_iter reached before " +
                                  std::to_string(opts.n_conv) + " bands converged",
                              std::move(slice));
    return slice;
}

RefineResult refine_block(const HamiltonianChannel& ch, const Mat& locked, Mat x0,
                          double tol, int max_iter, double precond_shift,
                          std::uint64_t seed) {
    const int k = static_cast<int>(x0.cols());
    CoreResult r = lobpcg_core(ch, std::move(x0), locked.cols() > 0 ? &locked : nullptr,
                               k, tol, max_iter, precond_shift, seed);
    RefineResult out;
    out.x = std::move(r.x);
    out.ritz = std::move(r.ritz);
    out.res_norms = std::move(r.res_norms);
    out.converged = std::move(r.converged);
    out.iterations = r.iterations;
    out.h_applies = r.h_applies;
    out.ok = r.ok;
    return out;
}

// ---------------------------------------------------------------------------
// Ground-state assembly
// ---------------------------------------------------------------------------

GroundState prepare_groundstate(std::vector<HamiltonianChannel> channels,
                                const SmearingScheme& s, double n_el,
                                const BandPolicy& policy, double occ_threshold,
                                std::uint64_t seed) {
    check_temperature(s);
    if (channels.empty()) throw std::invalid_argument("prepare_groundstate: no channels");
    if (!(n_el > 0.0)) throw std::invalid_argument("prepare_groundstate: n_el must be positive");

    GroundState gs;
    gs.smearing = s;
    gs.n_el = n_el;
    gs.occ_threshold = occ_threshold;
    gs.seed = seed;
    gs.policy = policy;

    int channel_id = 0;
    for (auto& ch : channels) {
        int n_conv = policy.n_conv > 0
                         ? policy.n_conv
                         : static_cast<int>(std::ceil(1.2 * n_el / ch.f_max()));
        n_conv = std::max(1, n_conv);
        const int nb = ch.basis().size();
        if (n_conv + policy.n_ex > nb)
            throw std::invalid_argument("prepare_groundstate: band policy exceeds basis size");

        // Solve with one probe band beyond the requested block when there is
        // room: if the block boundary cuts a degenerate cluster the probe is
        // retained, keeping Ran(T) well-defined; otherwise it is trimmed.
        int n_ex = policy.n_ex;
        SpectrumSlice slice;
        for (;;) {
            const bool probing = (n_conv + n_ex < nb);
            EigensolveOptions opts;
            opts.n_conv = n_conv;
            opts.n_ex = n_ex + (probing ? 1 : 0);
            opts.tol = policy.eig_tol;
            opts.max_iter = policy.max_iter;
            opts.seed = seed + 0x51ed270b * static_cast<std::uint64_t>(channel_id + 1);
            slice = block_eigensolve(ch, opts);
            if (!probing) break;
            const int last = slice.n_bands() - 1;
            double scale = std::max(1.0, std::abs(slice.ritz[last]));
            if (slice.ritz[last] - slice.ritz[last - 1] < 1e-10 * scale) {
                ++n_ex;  // boundary cuts a degenerate cluster: keep and re-probe
                continue;
            }
            // trim the probe band
            slice.bands.conservativeResize(Eigen::NoChange, last);
            slice.ritz.conservativeResize(last);
            slice.res_norms.conservativeResize(last);
            slice.converged.resize(last);
            break;
        }

        ChannelState cs{std::move(ch), std::move(slice), RVec(), n_conv};
        gs.channels.push_back(std::move(cs));
        ++channel_id;
    }

    std::vector<ChannelLevels> levels;
    for (const auto& c : gs.channels)
        levels.push_back({c.slice.ritz, c.channel.weight(), c.channel.f_max()});
    gs.fermi_level = solve_fermi_level(levels, s, n_el);

    for (auto& c : gs.channels) {
        const int nb = c.slice.n_bands();
        c.occupations.resize(nb);
        int n_occ = 0;
        for (int i = 0; i < nb; ++i) {
            c.occupations[i] =
                occupation(c.slice.ritz[i], gs.fermi_level, s, c.channel.f_max());
            if (c.occupations[i] >= occ_threshold) n_occ = i + 1;
        }
        c.slice.n_occ = n_occ;
    }
    return gs;
}

}  // namespace dfpt
