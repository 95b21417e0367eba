// model.hpp - periodic plane-wave basis, local potentials, counted Hamiltonian
#pragma once

#include <atomic>
#include <complex>
#include <map>
#include <stdexcept>

#include <Eigen/Core>

namespace dfpt {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

/// Symmetric 1D Fourier basis: modes n in [-n_max, n_max] with wave-vectors
/// G = 2*pi*n/L and (1/2)|G|^2 <= ecut, sorted ascending by n.
class PlaneWaveBasis {
public:
    PlaneWaveBasis(double cell_length, double ecut);

    double cell_length() const { return cell_length_; }
    double ecut() const { return ecut_; }
    int size() const { return 2 * n_max_ + 1; }
    int max_mode() const { return n_max_; }

    int mode(int i) const { return i - n_max_; }
    int index_of_mode(int n) const {
        return (n < -n_max_ || n > n_max_) ? -1 : n + n_max_;
    }
    double gvector(int i) const;
    /// (1/2)|G|^2 for basis entry i.
    double kinetic(int i) const {
        double g = gvector(i);
        return 0.5 * g * g;
    }

    bool operator==(const PlaneWaveBasis& o) const {
        return cell_length_ == o.cell_length_ && n_max_ == o.n_max_;
    }

private:
    double cell_length_;
    double ecut_;
    int n_max_;
};

/// Real-valued periodic potential given by its plain-exponential Fourier
/// coefficients: V(x) = sum_m c_m exp(2i*pi*m*x/L), with c_{-m} = conj(c_m).
class LocalPotential {
public:
    LocalPotential() = default;
    explicit LocalPotential(std::map<int, Complex> coeffs);

    /// a*(e^{i t} + e^{-i t}) = 2a*cos(2*pi*mode*x/L)
    static LocalPotential cosine(int mode, double amplitude);
    /// 2a*sin(2*pi*mode*x/L); breaks x -> -x parity
    static LocalPotential sine(int mode, double amplitude);

    Complex coeff(int m) const;
    int max_mode() const;
    bool empty() const { return coeffs_.empty(); }
    const std::map<int, Complex>& coeffs() const { return coeffs_; }

    /// this + scale * other
    LocalPotential plus(const LocalPotential& other, double scale = 1.0) const;
    LocalPotential scaled(double s) const;

private:
    std::map<int, Complex> coeffs_;
};

/// V(x) * v as a Fourier-space convolution over the basis modes.
Vec apply_potential(const PlaneWaveBasis& basis, const LocalPotential& pot, const Vec& v);

/// One independent spectral problem (models a k-point or spin component):
/// H = -(1/2)Laplacian + V on the plane-wave basis, with an application
/// counter used as the cost metric. Immutable after construction except the
/// counter; applications are safe from concurrent workers.
class HamiltonianChannel {
public:
    HamiltonianChannel(PlaneWaveBasis basis, LocalPotential potential,
                       double weight = 1.0, double f_max = 2.0);

    HamiltonianChannel(const HamiltonianChannel& o)
        : basis_(o.basis_), potential_(o.potential_), weight_(o.weight_),
          f_max_(o.f_max_), apply_count_(o.apply_count_.load()) {}
    HamiltonianChannel& operator=(const HamiltonianChannel& o);

    const PlaneWaveBasis& basis() const { return basis_; }
    const LocalPotential& potential() const { return potential_; }
    double weight() const { return weight_; }
    double f_max() const { return f_max_; }

    /// H*v; increments the application counter by exactly 1.
    Vec apply(const Vec& v) const;
    /// Columnwise H application; counter += number of columns.
    Mat apply_block(const Mat& block) const;
    /// Dense materialization (oracle use); does not touch the counter.
    Mat dense() const;

    long apply_count() const { return apply_count_.load(std::memory_order_relaxed); }
    void reset_apply_count() { apply_count_.store(0); }
    void set_apply_count(long n) { apply_count_.store(n); }

private:
    Vec apply_nocount(const Vec& v) const;

    PlaneWaveBasis basis_;
    LocalPotential potential_;
    double weight_;
    double f_max_;
    mutable std::atomic<long> apply_count_{0};
};

}  // namespace dfpt
