#include "dfpt/response.hpp"

#include <cmath>
#include <numbers>

#include "dfpt/oracle.hpp"

namespace dfpt {

namespace {

void validate_channels(const GroundState& gs, const LocalPotential& dv) {
    if (gs.channels.empty()) throw std::invalid_argument("apply_chi0: empty ground state");
    const double l0 = gs.channels.front().channel.basis().cell_length();
    for (const auto& c : gs.channels) {
        if (c.channel.basis().cell_length() != l0)
            throw std::invalid_argument("apply_chi0: channels disagree on cell length");
        if (dv.max_mode() > 2 * c.channel.basis().max_mode())
            throw std::invalid_argument("apply_chi0: perturbation modes exceed basis range");
    }
}

}  // namespace

ResponseResult apply_chi0(const GroundState& gs, const LocalPotential& dv,
                          GaugeKind gauge, const SternheimerOptions& opts) {
    validate_channels(gs, dv);
    const std::size_t nch = gs.channels.size();

    ResponseResult out;
    out.method = opts.method;
    out.gauge = gauge;

    int out_modes = 0;
    for (const auto& c : gs.channels)
        out_modes = std::max(out_modes, 2 * c.channel.basis().max_mode());
    out.drho = DensityCoeffs::zero(out_modes);

    // occupied-block matrix elements of dV, all channels first (global deF)
    std::vector<Mat> dv_phi(nch), dv_occ(nch);
    std::vector<RVec> d_eps(nch), occ_deriv(nch);
    std::vector<ChannelDEps> deps_channels;
    for (std::size_t c = 0; c < nch; ++c) {
        const auto& cs = gs.channels[c];
        const Mat phi = cs.slice.phi();
        const int n_occ = cs.slice.n_occ;
        OccupationContext ctx = gs.context(static_cast<int>(c));

        Mat dvp(phi.rows(), n_occ);
        for (int n = 0; n < n_occ; ++n)
            dvp.col(n) = apply_potential(cs.channel.basis(), dv, phi.col(n));
        out.total_dv_applies += n_occ;
        Mat m = phi.adjoint() * dvp;
        dv_occ[c] = 0.5 * (m + m.adjoint()).eval();
        dv_phi[c] = std::move(dvp);
        d_eps[c] = dv_occ[c].diagonal().real();
        occ_deriv[c].resize(n_occ);
        for (int n = 0; n < n_occ; ++n)
            occ_deriv[c][n] = ctx.occ_deriv(cs.slice.ritz[n]);
        deps_channels.push_back({d_eps[c], occ_deriv[c], cs.channel.weight()});
    }
    out.deF = delta_fermi_level(deps_channels);

    for (std::size_t c = 0; c < nch; ++c) {
        const auto& cs = gs.channels[c];
        const auto& basis = cs.channel.basis();
        const Mat phi = cs.slice.phi();
        const Mat phi_ex = cs.slice.phi_ex();
        const RVec eps_occ = cs.slice.eps();
        const RVec eps_ex = cs.slice.eps_ex();
        const int n_occ = cs.slice.n_occ;
        const double w_ch = cs.channel.weight();
        OccupationContext ctx = gs.context(static_cast<int>(c));

        Mat delta = oracle::delta_matrix(eps_occ, cs.occupations.head(n_occ), dv_occ[c], ctx);
        GaugeMatrix gm = build_gamma(delta, eps_occ, cs.occupations.head(n_occ),
                                     dv_occ[c], ctx, gauge);
        OccupiedVariation ov =
            occupied_variation(gm, phi, d_eps[c], occ_deriv[c], out.deF);

        const double gap =
            n_occ < cs.slice.n_bands() ? cs.slice.ritz[n_occ] - cs.slice.ritz[n_occ - 1] : 0.0;

        Mat h_phi_ex;
        if (opts.method == SternheimerMethod::Schur && phi_ex.cols() > 0) {
            h_phi_ex = cs.channel.apply_block(phi_ex);
            out.total_h_applies += phi_ex.cols();
        }
        RVec shifts;
        if (opts.method == SternheimerMethod::Shifted) {
            double eps_next = n_occ < cs.slice.n_bands() ? cs.slice.ritz[n_occ]
                                                         : cs.slice.ritz[n_occ - 1];
            shifts = default_shifts(eps_occ, eps_next);
        }

        ChannelVariation var;
        var.w = ov.w;
        var.df = ov.df;
        var.dphi_q.resize(phi.rows(), n_occ);

        for (int n = 0; n < n_occ; ++n) {
            Vec q_dv_phi = dv_phi[c].col(n);
            q_dv_phi -= phi * (phi.adjoint() * q_dv_phi);
            const double f_n = cs.occupations[n];

            SternheimerSolution sol;
            Vec v_n;
            try {
                switch (opts.method) {
                    case SternheimerMethod::Direct:
                        sol = solve_direct(cs.channel, eps_occ[n], phi, (-q_dv_phi).eval(),
                                           opts);
                        v_n = ov.w.col(n) + f_n * sol.dphi_q;
                        break;
                    case SternheimerMethod::Schur:
                        sol = solve_schur(cs.channel, eps_occ[n], phi, phi_ex, eps_ex,
                                          h_phi_ex, (-q_dv_phi).eval(), opts);
                        v_n = ov.w.col(n) + f_n * sol.dphi_q;
                        break;
                    case SternheimerMethod::Shifted: {
                        Vec rhs = shifted_rhs(phi, eps_occ, shifts, eps_occ[n], f_n,
                                              q_dv_phi, gm.gamma.col(n));
                        sol = solve_shifted(cs.channel, eps_occ[n], phi, eps_occ, shifts,
                                            rhs, opts);
                        v_n = sol.dphi_q;  // already w_n + f_n dphi_n^Q
                        break;
                    }
                }
            } catch (const SternheimerError& e) {
                out.reports.push_back({static_cast<int>(c), n, opts.method, gauge, gap,
                                       e.partial.iterations, e.partial.final_residual,
                                       e.partial.h_applies});
                throw ResponseError(std::string("apply_chi0: band ") + std::to_string(n) +
                                        " of channel " + std::to_string(c) + ": " +
                                        e.what(),
                                    std::move(out.reports));
            }
            var.dphi_q.col(n) = sol.dphi_q;

            accumulate_pair_density(basis, phi.col(n), v_n, w_ch, out.drho);
            accumulate_pair_density(basis, v_n, phi.col(n), w_ch, out.drho);
            accumulate_pair_density(basis, phi.col(n), phi.col(n), w_ch * ov.df[n], out.drho);

            out.reports.push_back({static_cast<int>(c), n, opts.method, gauge, gap,
                                   sol.iterations, sol.final_residual, sol.h_applies});
            out.total_h_applies += sol.h_applies;
        }
        out.per_channel.push_back(std::move(var));
    }
    return out;
}

LocalPotential HartreeKernel::apply(const DensityCoeffs& drho, double cell_length) const {
    std::map<int, Complex> c;
    const double two_pi = 2.0 * std::numbers::pi;
    for (int m = -drho.max_mode; m <= drho.max_mode; ++m) {
        if (m == 0) continue;
        double g = two_pi * m / cell_length;
        Complex v = scale * 4.0 * std::numbers::pi / (g * g) * drho.at(m);
        if (v != Complex(0.0)) c[m] = v;
    }
    return LocalPotential(std::move(c));
}

ResponseResult solve_dyson(const GroundState& gs, const LocalPotential& dv0,
                           const HartreeKernel& kernel, double mixing, double tol,
                           int max_iter, GaugeKind gauge, const SternheimerOptions& opts) {
    if (!(mixing > 0.0) || mixing > 1.0)
        throw std::invalid_argument("solve_dyson: mixing must lie in (0, 1]");
    const double cell = gs.channels.front().channel.basis().cell_length();

    ResponseResult first = apply_chi0(gs, dv0, gauge, opts);
    const double ref = first.drho.norm();
    long h_total = first.total_h_applies;
    long dv_total = first.total_dv_applies;

    DensityCoeffs drho = first.drho;
    std::vector<double> history;
    if (ref == 0.0) {
        first.dyson_iterations = 1;
        first.dyson_residual = 0.0;
        first.dyson_reference = ref;
        return first;
    }

    for (int k = 1; k <= max_iter; ++k) {
        LocalPotential dv_k = dv0.plus(kernel.apply(drho, cell));
        ResponseResult step = apply_chi0(gs, dv_k, gauge, opts);
        h_total += step.total_h_applies;
        dv_total += step.total_dv_applies;
        double res = (step.drho - drho).norm();
        history.push_back(res);
        if (res <= tol * ref) {
            // drho satisfies the fixed-point contract; keep the last step's
            // reports and deF alongside it
            step.drho = std::move(drho);
            step.total_h_applies = h_total;
            step.total_dv_applies = dv_total;
            step.dyson_iterations = k;
            step.dyson_residual = res;
            step.dyson_reference = ref;
            return step;
        }
        DensityCoeffs next = drho;
        next *= (1.0 - mixing);
        step.drho *= mixing;
        next += step.drho;
        drho = std::move(next);
    }
    throw DysonError("solve_dyson: no convergence in " + std::to_string(max_iter) +
                         " iterations (mixing too aggressive?)",
                     std::move(history));
}

}  // namespace dfpt
