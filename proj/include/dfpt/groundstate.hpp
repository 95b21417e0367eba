// groundstate.hpp - smearing, Fermi level, block eigensolver, ground-state assembly
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dfpt/model.hpp"

namespace dfpt {

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SmearingKind { FermiDirac, Gaussian };

struct SmearingScheme {
    SmearingKind kind = SmearingKind::FermiDirac;
    double temperature = 1e-2;
};

/// Smeared occupation f((eps - fermi)/T); FermiDirac: f_max/(1+e^x),
/// Gaussian: (f_max/2)*erfc(x/sqrt(2)). Both satisfy f(x) + f(-x) = f_max.
double occupation(double eps, double fermi, const SmearingScheme& s, double f_max);

/// d/d eps of the occupation: (1/T) f'((eps - fermi)/T). Strictly negative.
double occupation_derivative(double eps, double fermi, const SmearingScheme& s, double f_max);

/// Occupation rule bound to a solved Fermi level; shared by the response path
/// and the oracles.
struct OccupationContext {
    SmearingScheme smearing;
    double fermi = 0.0;
    double f_max = 2.0;

    double occ(double eps) const { return occupation(eps, fermi, smearing, f_max); }
    double occ_deriv(double eps) const {
        return occupation_derivative(eps, fermi, smearing, f_max);
    }
};

/// (f_n - f_m)/(eps_n - eps_m), with pairs closer than degeneracy_tol taking
/// the derivative limit evaluated at the pair mean.
double occupation_quotient(const OccupationContext& ctx, double eps_n, double eps_m,
                           double degeneracy_tol);

/// 1e-8 * max(1, spectral range) -- the shared near-degeneracy cutoff.
double degeneracy_tolerance(const RVec& eps);

struct ChannelLevels {
    RVec eps;
    double weight = 1.0;
    double f_max = 2.0;
};

/// Fermi level from the charge constraint sum_c weight * sum_n f_n = n_el,
/// by bracketed bisection (Newton-polished inside the bracket).
double solve_fermi_level(const std::vector<ChannelLevels>& channels,
                         const SmearingScheme& s, double n_el);

/// Jointly orthonormal bands with diagonal Ritz block. The first n_occ columns
/// are the occupied bands Phi, the remainder the extra bands Phi~.
struct SpectrumSlice {
    Mat bands;
    RVec ritz;
    RVec res_norms;
    std::vector<char> converged;
    int n_occ = 0;

    int n_bands() const { return static_cast<int>(ritz.size()); }
    int n_extra() const { return n_bands() - n_occ; }
    auto phi() const { return bands.leftCols(n_occ); }
    auto phi_ex() const { return bands.rightCols(n_extra()); }
    RVec eps() const { return ritz.head(n_occ); }
    RVec eps_ex() const { return ritz.tail(n_extra()); }

    double orthonormality_defect() const;
    /// max off-diagonal magnitude of bands^H H bands, for tests.
    double ritz_offdiag(const HamiltonianChannel& ch) const;
};

class EigensolveError : public ConvergenceError {
public:
    EigensolveError(const std::string& msg, SpectrumSlice partial_state)
        : ConvergenceError(msg), partial(std::move(partial_state)) {}
    SpectrumSlice partial;
};

struct EigensolveOptions {
    int n_conv = 1;
    int n_ex = 0;
    double tol = 1e-10;
    int max_iter = 500;
    double precond_shift = 1.0;
    std::uint64_t seed = 0;
};

/// Block preconditioned Rayleigh-Ritz iteration (three-term LOBPCG-style
/// subspace, kinetic preconditioner). The slice invariants hold after every
/// iteration; the first n_conv bands reach `tol` or EigensolveError is thrown
/// with the partial state. Returned with n_occ = n_conv provisionally.
SpectrumSlice block_eigensolve(const HamiltonianChannel& ch, const EigensolveOptions& opts);

struct RefineResult {
    Mat x;
    RVec ritz;
    RVec res_norms;
    std::vector<char> converged;
    int iterations = 0;
    long h_applies = 0;
    bool ok = false;
};

/// Refine a band block in the orthogonal complement of `locked`, requiring all
/// columns to reach `tol`. Used by the adaptive extra-band loop.
RefineResult refine_block(const HamiltonianChannel& ch, const Mat& locked, Mat x0,
                          double tol, int max_iter, double precond_shift,
                          std::uint64_t seed);

struct BandPolicy {
    int n_conv = 0;  // 0: ceil(1.2 * n_el / f_max) per channel
    int n_ex = 3;
    double eig_tol = 1e-10;
    int max_iter = 500;
};

struct ChannelState {
    HamiltonianChannel channel;
    SpectrumSlice slice;
    RVec occupations;  // per computed band, evaluated at the global Fermi level
    int n_conv_used = 0;
};

struct GroundState {
    std::vector<ChannelState> channels;
    SmearingScheme smearing;
    double n_el = 0.0;
    double fermi_level = 0.0;
    double occ_threshold = 1e-8;
    std::uint64_t seed = 0;
    BandPolicy policy;

    OccupationContext context(int channel) const {
        return {smearing, fermi_level, channels[channel].channel.f_max()};
    }
    /// sum_c weight_c * sum_n f_n over all computed bands
    double total_charge() const;
};

/// Eigensolve every channel, solve the shared Fermi level over all computed
/// bands, occupy and split each slice at the occupation threshold.
GroundState prepare_groundstate(std::vector<HamiltonianChannel> channels,
                                const SmearingScheme& s, double n_el,
                                const BandPolicy& policy, double occ_threshold = 1e-8,
                                std::uint64_t seed = 0);

}  // namespace dfpt
