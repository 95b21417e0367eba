// adaptive.hpp - conditioning estimates, eigenvalue bounds, adaptive extra bands
#pragma once

#include <cstdint>
#include <vector>

#include "dfpt/groundstate.hpp"
#include "dfpt/model.hpp"

namespace dfpt {

/// xi = sqrt((eps_last_extra - eps_1)/(eps_last_extra - eps_N)): computable
/// bound on the iteration ratio between the first and last occupied bands.
double xi_ratio(double eps1, double epsN, double eps_last_extra);

/// Certified lower bound eps_ritz - res_norm on the matching exact eigenvalue
/// (Hermitian Bauer-Fike).
double bauer_fike_lower(double eps_ritz, double res_norm);

/// Eigenvalue perturbation bounds: |nu_i(H0+W) - nu_i(H0)| <=
/// (nu_i(H0)+alpha) * ||(H0+alpha)^{-1/2} W (H0+alpha)^{-1/2}||.
/// Requires alpha >= 0 and H0 + alpha positive definite.
RVec perturbation_bound(const Mat& h0, const Mat& w, double alpha);

struct ChannelConditioning {
    int channel_id = 0;
    double eps1 = 0.0;
    double epsN = 0.0;
    double eps_last_extra = 0.0;
    double last_residual = 0.0;
    double xi = 0.0;
    double xi_bauer_fike = 0.0;  // xi with the Bauer-Fike-corrected last Ritz value
    RVec kappa_up_to_c;          // 1/(eps_last_extra - eps_n) per occupied band
};

struct ConditioningReport {
    std::vector<ChannelConditioning> channels;
};

ConditioningReport build_conditioning_report(const GroundState& gs);

struct AdaptTraceRow {
    int step = 0;
    int n_ex = 0;
    double xi = 0.0;
    double tol = 0.0;
    long h_applies = 0;
};

struct AdaptResult {
    SpectrumSlice slice;
    std::vector<AdaptTraceRow> trace;
};

class AdaptBudgetError : public ConvergenceError {
public:
    AdaptBudgetError(const std::string& msg, std::vector<AdaptTraceRow> t)
        : ConvergenceError(msg), trace(std::move(t)) {}
    std::vector<AdaptTraceRow> trace;
};

/// Append seeded random bands one at a time, refining the extra block at the
/// tolerance (eps_{N+N_ex-1} - eps_N)/50 after each addition, until
/// xi <= xi_target. Occupied bands are held fixed.
AdaptResult adapt_bands(const GroundState& gs, int channel_id, double xi_target,
                        int max_added, std::uint64_t seed);

}  // namespace dfpt
