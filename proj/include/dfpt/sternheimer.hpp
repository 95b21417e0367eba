// sternheimer.hpp - projected preconditioned CG solvers for orbital responses
#pragma once

#include <string>
#include <vector>

#include "dfpt/groundstate.hpp"
#include "dfpt/model.hpp"

namespace dfpt {

/// Diagonal Fourier-space approximation 1/((1/2)|G|^2 + shift) to the inverse
/// Hamiltonian. Symmetric positive definite for shift > 0.
struct KineticPreconditioner {
    RVec inv_diag;

    Vec apply(const Vec& v) const { return inv_diag.asDiagonal() * v; }
    Mat apply_block(const Mat& m) const { return inv_diag.asDiagonal() * m; }
};

KineticPreconditioner kinetic_preconditioner(const PlaneWaveBasis& basis, double shift);

enum class SternheimerMethod { Direct, Schur, Shifted };

std::string to_string(SternheimerMethod m);
SternheimerMethod sternheimer_method_from_string(const std::string& s);

struct SternheimerOptions {
    SternheimerMethod method = SternheimerMethod::Schur;
    double tol = 1e-9;
    int max_iter = 5000;
    double precond_shift = 1.0;
};

struct SternheimerSolution {
    Vec dphi_q;             // delta phi_n^Q (Direct/Schur); w_n = f_n delta phi_n (Shifted)
    int iterations = 0;
    double final_residual = 0.0;
    long h_applies = 0;
    std::vector<double> residual_history;          // Euclidean norms
    std::vector<double> precond_residual_history;  // preconditioner-norm, monotone
    Vec alpha;   // Schur: extra-band coefficients
    Vec dphi_r;  // Schur: remainder-space part
};

class SternheimerError : public ConvergenceError {
public:
    SternheimerError(const std::string& msg, SternheimerSolution best)
        : ConvergenceError(msg), partial(std::move(best)) {}
    SternheimerSolution partial;
};

/// Q(H - eps_n)Q x = b restricted to Ran(Q), Q = 1 - Phi Phi^*. Iterate,
/// residual and search direction are re-projected onto Ran(Q) every iteration;
/// one H application per CG step.
SternheimerSolution solve_direct(const HamiltonianChannel& ch, double eps_n,
                                 const Mat& phi, const Vec& b,
                                 const SternheimerOptions& opts);

/// Schur-complement variant: the extra-band block (Ritz values eps_ex, diagonal
/// by assumption) is eliminated exactly, CG runs in Ran(R) = Ran(Q - T).
/// h_phi_ex = H * phi_ex must be precomputed once per channel; the residual of
/// the original projected system meets `tol` at exit. With no extra bands this
/// is exactly solve_direct.
SternheimerSolution solve_schur(const HamiltonianChannel& ch, double eps_n,
                                const Mat& phi, const Mat& phi_ex, const RVec& eps_ex,
                                const Mat& h_phi_ex, const Vec& b,
                                const SternheimerOptions& opts);

/// Shift rule s_m = (eps_N + gap) - eps_m + 0.1 with gap = max(eps_next - eps_N, 0.1):
/// all shifted occupied levels land above every occupied eps_n.
RVec default_shifts(const RVec& eps_occ, double eps_next);

/// Full-space shifted system (H + S - eps_n) x = rhs with S = Phi diag(shifts) Phi^*.
/// With the gauge-consistent right-hand side the solution is w_n + f_n dphi_n^Q
/// directly. Throws std::invalid_argument when a shift leaves the operator
/// indefinite.
SternheimerSolution solve_shifted(const HamiltonianChannel& ch, double eps_n,
                                  const Mat& phi, const RVec& eps_occ, const RVec& shifts,
                                  const Vec& rhs, const SternheimerOptions& opts);

/// -(f_n Q dV phi_n - sum_m Gamma_mn (eps_m + s_m - eps_n) phi_m), the
/// right-hand side paired with solve_shifted. q_dv_phi = Q(dV phi_n).
Vec shifted_rhs(const Mat& phi, const RVec& eps_occ, const RVec& shifts, double eps_n,
                double f_n, const Vec& q_dv_phi, const Vec& gamma_col);

}  // namespace dfpt
