#include "dfpt/density.hpp"

namespace dfpt {

double DensityCoeffs::conj_symmetry_defect() const {
    double worst = 0.0;
    for (int m = 0; m <= max_mode; ++m)
        worst = std::max(worst, std::abs(at(-m) - std::conj(at(m))));
    return worst;
}

DensityCoeffs& DensityCoeffs::operator+=(const DensityCoeffs& o) {
    if (o.max_mode > max_mode)
        throw std::invalid_argument("DensityCoeffs: incompatible mode ranges");
    for (int m = -o.max_mode; m <= o.max_mode; ++m) add(m, o.at(m));
    return *this;
}

DensityCoeffs DensityCoeffs::operator-(const DensityCoeffs& o) const {
    DensityCoeffs out = zero(std::max(max_mode, o.max_mode));
    for (int m = -out.max_mode; m <= out.max_mode; ++m) out.add(m, at(m) - o.at(m));
    return out;
}

void accumulate_pair_density(const PlaneWaveBasis& basis, const Vec& bra, const Vec& ket,
                             double scale, DensityCoeffs& out) {
    const int n = basis.size();
    if (bra.size() != n || ket.size() != n)
        throw std::invalid_argument("accumulate_pair_density: dimension mismatch");
    if (out.max_mode < 2 * basis.max_mode())
        throw std::invalid_argument("accumulate_pair_density: output grid too small");
    const double inv_l = scale / basis.cell_length();
    for (int m = -(n - 1); m <= n - 1; ++m) {
        Complex s(0.0);
        const int lo = std::max(0, -m);
        const int hi = std::min(n, n - m);
        for (int j = lo; j < hi; ++j) s += std::conj(bra[j]) * ket[j + m];
        out.add(m, inv_l * s);
    }
}

DensityCoeffs density_from_kernel(const PlaneWaveBasis& basis, const Mat& kernel) {
    const int n = basis.size();
    if (kernel.rows() != n || kernel.cols() != n)
        throw std::invalid_argument("density_from_kernel: dimension mismatch");
    DensityCoeffs out = DensityCoeffs::zero(2 * basis.max_mode());
    const double inv_l = 1.0 / basis.cell_length();
    for (int m = -(n - 1); m <= n - 1; ++m) {
        Complex s(0.0);
        const int lo = std::max(0, m);
        const int hi = std::min(n, n + m);
        for (int i = lo; i < hi; ++i) s += kernel(i, i - m);
        out.add(m, inv_l * s);
    }
    return out;
}

LocalPotential to_potential(const DensityCoeffs& d, double drop_tol) {
    std::map<int, Complex> c;
    for (int m = -d.max_mode; m <= d.max_mode; ++m) {
        // drop +-m pairs together so conjugate symmetry survives
        if (std::max(std::abs(d.at(m)), std::abs(d.at(-m))) <= drop_tol) continue;
        c[m] = d.at(m);
    }
    return LocalPotential(std::move(c));
}

}  // namespace dfpt
