#include "dfpt/oracle.hpp"

#include <Eigen/Dense>

namespace dfpt::oracle {

FullSpectrum full_diagonalize(const HamiltonianChannel& ch) {
    Eigen::SelfAdjointEigenSolver<Mat> es(ch.dense());
    if (es.info() != Eigen::Success)
        throw std::runtime_error("full_diagonalize: eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

namespace {

double global_d_fermi(const std::vector<FullSpectrum>& spectra,
                      const std::vector<HamiltonianChannel>& channels,
                      const std::vector<Mat>& dv_full, const SmearingScheme& smearing,
                      double fermi) {
    double num = 0.0, den = 0.0;
    long n_bands = 0;
    for (std::size_t c = 0; c < spectra.size(); ++c) {
        OccupationContext ctx{smearing, fermi, channels[c].f_max()};
        double w = channels[c].weight();
        for (Eigen::Index i = 0; i < spectra[c].eps.size(); ++i) {
            double fp = ctx.occ_deriv(spectra[c].eps[i]);
            num += w * fp * dv_full[c](i, i).real();
            den += w * fp;
            ++n_bands;
        }
    }
    if (std::abs(den) < 1e-12 * static_cast<double>(n_bands)) return 0.0;
    return num / den;
}

}  // namespace

Chi0Result chi0_sum_over_states(const std::vector<FullSpectrum>& spectra,
                                const std::vector<HamiltonianChannel>& channels,
                                const SmearingScheme& smearing, double n_el,
                                const LocalPotential& dv) {
    if (spectra.size() != channels.size() || spectra.empty())
        throw std::invalid_argument("chi0_sum_over_states: channel/spectrum mismatch");

    std::vector<ChannelLevels> levels;
    for (std::size_t c = 0; c < spectra.size(); ++c)
        levels.push_back({spectra[c].eps, channels[c].weight(), channels[c].f_max()});
    const double fermi = solve_fermi_level(levels, smearing, n_el);

    std::vector<Mat> dv_full(spectra.size());
    for (std::size_t c = 0; c < spectra.size(); ++c) {
        const Mat& u = spectra[c].vectors;
        Mat dv_pw(u.rows(), u.cols());
        for (Eigen::Index j = 0; j < u.cols(); ++j)
            dv_pw.col(j) = apply_potential(channels[c].basis(), dv, u.col(j));
        Mat m = u.adjoint() * dv_pw;
        dv_full[c] = 0.5 * (m + m.adjoint()).eval();
    }

    const double d_fermi = global_d_fermi(spectra, channels, dv_full, smearing, fermi);

    int out_modes = 0;
    for (const auto& ch : channels) out_modes = std::max(out_modes, 2 * ch.basis().max_mode());
    DensityCoeffs drho = DensityCoeffs::zero(out_modes);

    for (std::size_t c = 0; c < spectra.size(); ++c) {
        const RVec& eps = spectra[c].eps;
        const Eigen::Index nb = eps.size();
        OccupationContext ctx{smearing, fermi, channels[c].f_max()};
        const double dtol = degeneracy_tolerance(eps);

        Mat coef(nb, nb);
        for (Eigen::Index m = 0; m < nb; ++m)
            for (Eigen::Index n = 0; n < nb; ++n) {
                double q = occupation_quotient(ctx, eps[n], eps[m], dtol);
                Complex dvmn = dv_full[c](m, n);
                if (m == n) dvmn -= d_fermi;
                coef(m, n) = q * dvmn;
            }
        // delta rho kernel: sum_{nm} coef(m,n) |phi_m><phi_n|
        Mat kernel = spectra[c].vectors * coef * spectra[c].vectors.adjoint();
        DensityCoeffs part = density_from_kernel(channels[c].basis(), kernel);
        part *= channels[c].weight();
        drho += part;
    }
    return {std::move(drho), fermi, d_fermi};
}

DensityCoeffs finite_difference_chi0(const std::vector<HamiltonianChannel>& channels,
                                     const SmearingScheme& smearing, double n_el,
                                     const LocalPotential& dv, double h) {
    if (channels.empty())
        throw std::invalid_argument("finite_difference_chi0: no channels");
    if (!(h > 0.0)) throw std::invalid_argument("finite_difference_chi0: h must be positive");

    auto density_at = [&](double sign) {
        std::vector<FullSpectrum> spectra;
        std::vector<ChannelLevels> levels;
        for (const auto& ch : channels) {
            HamiltonianChannel displaced(ch.basis(), ch.potential().plus(dv, sign * h),
                                         ch.weight(), ch.f_max());
            spectra.push_back(full_diagonalize(displaced));
            levels.push_back({spectra.back().eps, ch.weight(), ch.f_max()});
        }
        double fermi = solve_fermi_level(levels, smearing, n_el);
        int out_modes = 0;
        for (const auto& ch : channels)
            out_modes = std::max(out_modes, 2 * ch.basis().max_mode());
        DensityCoeffs rho = DensityCoeffs::zero(out_modes);
        for (std::size_t c = 0; c < channels.size(); ++c) {
            const Eigen::Index nb = spectra[c].eps.size();
            Vec occ(nb);
            for (Eigen::Index i = 0; i < nb; ++i)
                occ[i] = occupation(spectra[c].eps[i], fermi, smearing, channels[c].f_max());
            Mat kernel =
                spectra[c].vectors * occ.asDiagonal() * spectra[c].vectors.adjoint();
            DensityCoeffs part = density_from_kernel(channels[c].basis(), kernel);
            part *= channels[c].weight();
            rho += part;
        }
        return rho;
    };

    DensityCoeffs plus = density_at(1.0);
    DensityCoeffs minus = density_at(-1.0);
    DensityCoeffs out = plus - minus;
    out *= 1.0 / (2.0 * h);
    return out;
}

Mat delta_matrix(const RVec& eps, const RVec& occ, const Mat& dv_occ,
                 const OccupationContext& ctx) {
    const Eigen::Index n = eps.size();
    if (occ.size() != n || dv_occ.rows() != n || dv_occ.cols() != n)
        throw std::invalid_argument("delta_matrix: dimension mismatch");
    const double dtol = degeneracy_tolerance(eps);
    Mat delta = Mat::Zero(n, n);
    for (Eigen::Index m = 0; m < n; ++m)
        for (Eigen::Index k = 0; k < n; ++k) {
            if (m == k) continue;
            double q;
            if (std::abs(eps[k] - eps[m]) < dtol)
                q = ctx.occ_deriv(0.5 * (eps[k] + eps[m]));
            else
                q = (occ[k] - occ[m]) / (eps[k] - eps[m]);
            delta(m, k) = q * dv_occ(m, k);
        }
    return delta;
}

DensityCoeffs chi0_occupied_block(const PlaneWaveBasis& basis, const Mat& phi,
                                  const RVec& eps, const Mat& dv_occ,
                                  const OccupationContext& ctx, double d_fermi) {
    const Eigen::Index n = eps.size();
    const double dtol = degeneracy_tolerance(eps);
    Mat coef(n, n);
    for (Eigen::Index m = 0; m < n; ++m)
        for (Eigen::Index k = 0; k < n; ++k) {
            double q = occupation_quotient(ctx, eps[k], eps[m], dtol);
            Complex dvmn = dv_occ(m, k);
            if (m == k) dvmn -= d_fermi;
            coef(m, k) = q * dvmn;
        }
    Mat kernel = phi * coef * phi.adjoint();
    return density_from_kernel(basis, kernel);
}

}  // namespace dfpt::oracle
