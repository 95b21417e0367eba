// density.hpp - Fourier coefficients of periodic densities on the doubled mode grid
#pragma once

#include "dfpt/model.hpp"

namespace dfpt {

/// Plain-exponential Fourier coefficients of a real periodic function:
/// rho(x) = sum_{|m| <= max_mode} coeff[m + max_mode] exp(2i*pi*m*x/L).
/// Band products live on modes up to twice the basis range.
struct DensityCoeffs {
    int max_mode = 0;
    Vec coeff;

    static DensityCoeffs zero(int max_mode) {
        DensityCoeffs d;
        d.max_mode = max_mode;
        d.coeff = Vec::Zero(2 * max_mode + 1);
        return d;
    }

    Complex at(int m) const {
        return (std::abs(m) > max_mode) ? Complex(0.0) : coeff[m + max_mode];
    }
    void add(int m, Complex v) { coeff[m + max_mode] += v; }

    double norm() const { return coeff.norm(); }
    /// max_m |coeff(-m) - conj(coeff(m))|
    double conj_symmetry_defect() const;

    DensityCoeffs& operator+=(const DensityCoeffs& o);
    DensityCoeffs& operator*=(double s) {
        coeff *= s;
        return *this;
    }
    DensityCoeffs operator-(const DensityCoeffs& o) const;
};

/// out += scale * conj(bra(x)) * ket(x), both vectors over `basis`.
/// Requires out.max_mode >= 2 * basis.max_mode().
void accumulate_pair_density(const PlaneWaveBasis& basis, const Vec& bra, const Vec& ket,
                             double scale, DensityCoeffs& out);

/// Density of an operator kernel D (plane-wave matrix): rho_m = (1/L) tr_m(D),
/// the sum of the m-th subdiagonal of D.
DensityCoeffs density_from_kernel(const PlaneWaveBasis& basis, const Mat& kernel);

/// Reinterpret density coefficients as a local potential (e.g. after a kernel
/// application). Coefficients below `drop_tol` are dropped to keep the support
/// finite and symmetrization exact.
LocalPotential to_potential(const DensityCoeffs& d, double drop_tol = 0.0);

}  // namespace dfpt
