// oracle.hpp - brute-force reference implementations (trust anchor for the solvers)
#pragma once

#include <vector>

#include "dfpt/density.hpp"
#include "dfpt/groundstate.hpp"
#include "dfpt/model.hpp"

namespace dfpt::oracle {

/// All basis-size eigenpairs of the dense channel Hamiltonian, ascending.
struct FullSpectrum {
    RVec eps;
    Mat vectors;
};

FullSpectrum full_diagonalize(const HamiltonianChannel& ch);

struct Chi0Result {
    DensityCoeffs drho;
    double fermi = 0.0;
    double d_fermi = 0.0;
};

/// Exact discrete chi0 applied to dV: the full double sum over all bands of
/// every channel, with the diagonal derivative convention and the induced
/// Fermi-level variation. Truncates nothing.
Chi0Result chi0_sum_over_states(const std::vector<FullSpectrum>& spectra,
                                const std::vector<HamiltonianChannel>& channels,
                                const SmearingScheme& smearing, double n_el,
                                const LocalPotential& dv);

/// Central difference (rho(V + h dV) - rho(V - h dV)) / (2h) with full
/// rediagonalization and a Fermi re-solve at each displaced potential.
DensityCoeffs finite_difference_chi0(const std::vector<HamiltonianChannel>& channels,
                                     const SmearingScheme& smearing, double n_el,
                                     const LocalPotential& dv, double h);

/// Delta_mn = (f_n - f_m)/(eps_n - eps_m) dV_mn off-diagonal over the occupied
/// bands, near-degenerate pairs taking the derivative limit at the pair mean;
/// diagonal entries are zero (held by delta f_n instead).
Mat delta_matrix(const RVec& eps, const RVec& occ, const Mat& dv_occ,
                 const OccupationContext& ctx);

/// The n,m <= N block of the sum-over-states response at a given d_fermi;
/// reference for the occupied-occupied gauge machinery.
DensityCoeffs chi0_occupied_block(const PlaneWaveBasis& basis, const Mat& phi,
                                  const RVec& eps, const Mat& dv_occ,
                                  const OccupationContext& ctx, double d_fermi);

}  // namespace dfpt::oracle
