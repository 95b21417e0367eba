// gauges.hpp - occupied-occupied gauge choices: Gamma from Delta, df_n, d eps_F
#pragma once

#include <string>
#include <vector>

#include "dfpt/groundstate.hpp"
#include "dfpt/model.hpp"

namespace dfpt {

enum class GaugeKind { Orthogonal, Simple, QuantumEspresso, Abinit, Minimal };

std::string to_string(GaugeKind k);
GaugeKind gauge_from_string(const std::string& s);

/// Coefficient matrices for the occupied block. Gamma_mn = <phi_m, f_n dphi_n>
/// (occupations absorbed); constraint Gamma + Gamma^H = Delta, zero diagonal.
struct GaugeMatrix {
    Mat delta;
    Mat gamma;
    GaugeKind kind = GaugeKind::Minimal;
    /// set when the orthogonal gauge hit a degenerate occupied pair and fell
    /// back to the simple rule for it
    bool degenerate_fallback = false;
};

struct ChannelDEps {
    RVec d_eps;      // dV_nn over retained bands
    RVec occ_deriv;  // f'_n
    double weight = 1.0;
};

/// d eps_F = (sum_c w sum_n f'_n dV_nn) / (sum_c w sum_n f'_n); zero in the
/// insulating limit |denominator| < 1e-12 * band count.
double delta_fermi_level(const std::vector<ChannelDEps>& channels);

GaugeMatrix build_gamma(const Mat& delta, const RVec& eps, const RVec& occ,
                        const Mat& dv_occ, const OccupationContext& ctx, GaugeKind kind);

/// w_n = sum_{m != n} Gamma_mn phi_m and df_n = f'_n (d eps_n - d eps_F).
struct OccupiedVariation {
    Mat w;    // basis size x N
    RVec df;  // N
    double deF = 0.0;
};

OccupiedVariation occupied_variation(const GaugeMatrix& gauge, const Mat& phi,
                                     const RVec& d_eps, const RVec& occ_deriv,
                                     double deF);

}  // namespace dfpt
