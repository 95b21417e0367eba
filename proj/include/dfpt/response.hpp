// response.hpp - chi0 application (delta rho assembly) and the Dyson fixed point
#pragma once

#include <vector>

#include "dfpt/density.hpp"
#include "dfpt/gauges.hpp"
#include "dfpt/groundstate.hpp"
#include "dfpt/sternheimer.hpp"

namespace dfpt {

struct SolverReport {
    int channel_id = 0;
    int band = 0;  // -1 marks a per-method totals row
    SternheimerMethod method = SternheimerMethod::Schur;
    GaugeKind gauge = GaugeKind::Minimal;
    double gap = 0.0;  // eps_{N+1} - eps_N of the channel (0 when unknown)
    long iterations = 0;
    double final_residual = 0.0;
    long h_applies = 0;
};

struct ChannelVariation {
    Mat w;       // occupied-space parts, basis x N
    RVec df;     // occupation variations
    Mat dphi_q;  // per-band solver outputs (f_n dphi_n for Shifted)
};

struct ResponseResult {
    DensityCoeffs drho;
    double deF = 0.0;
    std::vector<ChannelVariation> per_channel;
    std::vector<SolverReport> reports;
    long total_h_applies = 0;
    long total_dv_applies = 0;
    SternheimerMethod method = SternheimerMethod::Schur;
    GaugeKind gauge = GaugeKind::Minimal;
    int dyson_iterations = 0;
    double dyson_residual = 0.0;
    double dyson_reference = 0.0;  // ||chi0 dV0|| that scales the stopping rule
};

/// Carries the reports of the solves that completed before a failure.
class ResponseError : public ConvergenceError {
public:
    ResponseError(const std::string& msg, std::vector<SolverReport> reports)
        : ConvergenceError(msg), partial_reports(std::move(reports)) {}
    std::vector<SolverReport> partial_reports;
};

/// delta rho = sum_c w_c sum_n [2 Re(phi_n^* (w_n + f_n dphi_n^Q)) + df_n |phi_n|^2]
/// assembled in Fourier space; solver reports and Hamiltonian-application
/// totals aggregated per band. Solver failures surface as ResponseError with
/// the partial report table.
ResponseResult apply_chi0(const GroundState& gs, const LocalPotential& dv,
                          GaugeKind gauge, const SternheimerOptions& opts);

/// Hartree kernel: Fourier multipliers scale * 4*pi/|G|^2, zero at G = 0.
struct HartreeKernel {
    double scale = 1.0;
    LocalPotential apply(const DensityCoeffs& drho, double cell_length) const;
};

class DysonError : public ConvergenceError {
public:
    DysonError(const std::string& msg, std::vector<double> history)
        : ConvergenceError(msg), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

/// Damped fixed-point iteration for drho = chi0(dV0 + K drho); stops when the
/// fixed-point residual falls below tol * ||chi0 dV0||.
ResponseResult solve_dyson(const GroundState& gs, const LocalPotential& dv0,
                           const HartreeKernel& kernel, double mixing, double tol,
                           int max_iter, GaugeKind gauge, const SternheimerOptions& opts);

}  // namespace dfpt
