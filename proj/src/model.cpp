#include "dfpt/model.hpp"

#include <cmath>
#include <numbers>

namespace dfpt {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
}

PlaneWaveBasis::PlaneWaveBasis(double cell_length, double ecut)
    : cell_length_(cell_length), ecut_(ecut) {
    if (!(cell_length > 0.0))
        throw std::invalid_argument("PlaneWaveBasis: cell_length must be positive");
    if (!(ecut > 0.0))
        throw std::invalid_argument("PlaneWaveBasis: ecut must be positive");
    // |n| <= L*sqrt(2*ecut)/(2*pi); nudge so exact boundary modes are kept
    double bound = cell_length * std::sqrt(2.0 * ecut) / two_pi;
    n_max_ = static_cast<int>(std::floor(bound * (1.0 + 1e-14) + 1e-14));
    while (n_max_ > 0) {
        double g = two_pi * n_max_ / cell_length_;
        if (0.5 * g * g <= ecut * (1.0 + 1e-12)) break;
        --n_max_;
    }
}

double PlaneWaveBasis::gvector(int i) const {
    return two_pi * mode(i) / cell_length_;
}

LocalPotential::LocalPotential(std::map<int, Complex> coeffs) {
    for (const auto& [m, c] : coeffs) {
        auto it = coeffs.find(-m);
        Complex mirror = (it == coeffs.end()) ? Complex(0.0) : it->second;
        double scale = std::max(1.0, std::abs(c));
        if (std::abs(mirror - std::conj(c)) > 1e-10 * scale)
            throw std::invalid_argument(
                "LocalPotential: coefficients are not conjugate-symmetric");
    }
    // store the exactly symmetrized coefficients
    for (const auto& [m, c] : coeffs) {
        auto it = coeffs.find(-m);
        Complex mirror = (it == coeffs.end()) ? Complex(0.0) : it->second;
        coeffs_[m] = 0.5 * (c + std::conj(mirror));
    }
}

LocalPotential LocalPotential::cosine(int mode, double amplitude) {
    std::map<int, Complex> c;
    c[mode] += Complex(amplitude, 0.0);
    c[-mode] += Complex(amplitude, 0.0);
    return LocalPotential(c);
}

LocalPotential LocalPotential::sine(int mode, double amplitude) {
    std::map<int, Complex> c;
    c[mode] += Complex(0.0, -amplitude);
    c[-mode] += Complex(0.0, amplitude);
    return LocalPotential(c);
}

Complex LocalPotential::coeff(int m) const {
    auto it = coeffs_.find(m);
    return it == coeffs_.end() ? Complex(0.0) : it->second;
}

int LocalPotential::max_mode() const {
    int m = 0;
    for (const auto& [k, c] : coeffs_) m = std::max(m, std::abs(k));
    return m;
}

LocalPotential LocalPotential::plus(const LocalPotential& other, double scale) const {
    std::map<int, Complex> c = coeffs_;
    for (const auto& [m, v] : other.coeffs_) c[m] += scale * v;
    return LocalPotential(std::move(c));
}

LocalPotential LocalPotential::scaled(double s) const {
    std::map<int, Complex> c = coeffs_;
    for (auto& [m, v] : c) v *= s;
    return LocalPotential(std::move(c));
}

Vec apply_potential(const PlaneWaveBasis& basis, const LocalPotential& pot, const Vec& v) {
    const int n = basis.size();
    if (v.size() != n)
        throw std::invalid_argument("apply_potential: dimension mismatch");
    Vec out = Vec::Zero(n);
    for (const auto& [m, c] : pot.coeffs()) {
        // out_i += c * v_{i-m}: mode(i) - mode(i-m) = m
        const int lo = std::max(0, m);
        const int hi = std::min(n, n + m);
        for (int i = lo; i < hi; ++i) out[i] += c * v[i - m];
    }
    return out;
}

HamiltonianChannel::HamiltonianChannel(PlaneWaveBasis basis, LocalPotential potential,
                                       double weight, double f_max)
    : basis_(std::move(basis)), potential_(std::move(potential)),
      weight_(weight), f_max_(f_max) {
    if (!(weight > 0.0) || weight > 1.0)
        throw std::invalid_argument("HamiltonianChannel: weight must lie in (0, 1]");
    if (f_max != 1.0 && f_max != 2.0)
        throw std::invalid_argument("HamiltonianChannel: f_max must be 1 or 2");
    if (potential_.max_mode() > 2 * basis_.max_mode())
        throw std::invalid_argument(
            "HamiltonianChannel: potential modes exceed twice the basis range");
}

HamiltonianChannel& HamiltonianChannel::operator=(const HamiltonianChannel& o) {
    basis_ = o.basis_;
    potential_ = o.potential_;
    weight_ = o.weight_;
    f_max_ = o.f_max_;
    apply_count_.store(o.apply_count_.load());
    return *this;
}

Vec HamiltonianChannel::apply_nocount(const Vec& v) const {
    const int n = basis_.size();
    if (v.size() != n)
        throw std::invalid_argument("HamiltonianChannel::apply: dimension mismatch");
    Vec out = apply_potential(basis_, potential_, v);
    for (int i = 0; i < n; ++i) out[i] += basis_.kinetic(i) * v[i];
    return out;
}

Vec HamiltonianChannel::apply(const Vec& v) const {
    Vec out = apply_nocount(v);
    apply_count_.fetch_add(1, std::memory_order_relaxed);
    return out;
}

Mat HamiltonianChannel::apply_block(const Mat& block) const {
    Mat out(block.rows(), block.cols());
    for (Eigen::Index j = 0; j < block.cols(); ++j)
        out.col(j) = apply_nocount(block.col(j));
    apply_count_.fetch_add(block.cols(), std::memory_order_relaxed);
    return out;
}

Mat HamiltonianChannel::dense() const {
    const int n = basis_.size();
    Mat h = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) h(i, i) = basis_.kinetic(i);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            int m = basis_.mode(i) - basis_.mode(j);
            Complex c = potential_.coeff(m);
            if (c != Complex(0.0)) h(i, j) += c;
        }
    return h;
}

}  // namespace dfpt
