#include "dfpt/sternheimer.hpp"

#include <cmath>
#include <functional>

namespace dfpt {

KineticPreconditioner kinetic_preconditioner(const PlaneWaveBasis& basis, double shift) {
    if (!(shift > 0.0))
        throw std::invalid_argument("kinetic_preconditioner: shift must be positive");
    KineticPreconditioner p;
    p.inv_diag.resize(basis.size());
    for (int i = 0; i < basis.size(); ++i)
        p.inv_diag[i] = 1.0 / (basis.kinetic(i) + shift);
    return p;
}

std::string to_string(SternheimerMethod m) {
    switch (m) {
        case SternheimerMethod::Direct: return "direct";
        case SternheimerMethod::Schur: return "schur";
        case SternheimerMethod::Shifted: return "shifted";
    }
    return "?";
}

SternheimerMethod sternheimer_method_from_string(const std::string& s) {
    if (s == "direct") return SternheimerMethod::Direct;
    if (s == "schur") return SternheimerMethod::Schur;
    if (s == "shifted") return SternheimerMethod::Shifted;
    throw std::invalid_argument("unknown Sternheimer method: " + s);
}

namespace {

struct CgResult {
    Vec x;
    int iterations = 0;
    double final_residual = 0.0;
    long h_applies = 0;
    std::vector<double> history;
    std::vector<double> precond_history;
    bool converged = false;
};

// Preconditioned CG for a Hermitian positive definite operator. `op` must
// perform exactly one Hamiltonian application per call; `project` restricts
// every iterate, residual and search direction to the solution subspace.
// `on_update` receives each accepted step coefficient (Schur bookkeeping).
CgResult pcg(const std::function<Vec(const Vec&)>& op,
             const std::function<Vec(const Vec&)>& precond,
             const std::function<void(Vec&)>& project, const Vec& b, double tol,
             int max_iter, const std::function<void(Complex)>& on_update = nullptr) {
    CgResult out;
    Vec r = b;
    project(r);
    out.x = Vec::Zero(b.size());
    double rnorm = r.norm();
    out.final_residual = rnorm;
    if (rnorm <= tol) {
        out.converged = true;
        return out;
    }
    Vec z = precond(r);
    project(z);
    Vec p = z;
    Complex rz = r.dot(z);
    for (int k = 1; k <= max_iter; ++k) {
        Vec q = op(p);
        ++out.h_applies;
        Complex pq = p.dot(q);
        Complex alpha = rz / pq;
        out.x += alpha * p;
        r -= alpha * q;
        project(out.x);
        project(r);
        if (on_update) on_update(alpha);
        rnorm = r.norm();
        out.iterations = k;
        out.final_residual = rnorm;
        out.history.push_back(rnorm);
        z = precond(r);
        project(z);
        Complex rz_new = r.dot(z);
        out.precond_history.push_back(std::sqrt(std::abs(rz_new)));
        if (rnorm <= tol) {
            out.converged = true;
            return out;
        }
        // stagnation guard: require at least 1% decrease over any 50 iterations
        const std::size_t window = 50;
        if (out.history.size() > window) {
            double past = out.history[out.history.size() - 1 - window];
            if (rnorm > (1.0 - 1e-2) * past) return out;
        }
        Complex beta = rz_new / rz;
        p = z + beta * p;
        rz = rz_new;
    }
    return out;
}

SternheimerSolution pack(CgResult&& cg) {
    SternheimerSolution s;
    s.dphi_q = std::move(cg.x);
    s.iterations = cg.iterations;
    s.final_residual = cg.final_residual;
    s.h_applies = cg.h_applies;
    s.residual_history = std::move(cg.history);
    s.precond_residual_history = std::move(cg.precond_history);
    return s;
}

}  // namespace

SternheimerSolution solve_direct(const HamiltonianChannel& ch, double eps_n,
                                 const Mat& phi, const Vec& b,
                                 const SternheimerOptions& opts) {
    const Eigen::Index n = ch.basis().size();
    if (b.size() != n || phi.rows() != n)
        throw std::invalid_argument("solve_direct: dimension mismatch");
    KineticPreconditioner prec = kinetic_preconditioner(ch.basis(), opts.precond_shift);

    auto project = [&](Vec& v) {
        if (phi.cols() > 0) v -= phi * (phi.adjoint() * v);
    };
    auto op = [&](const Vec& v) {
        Vec hv = ch.apply(v);
        hv -= eps_n * v;
        project(hv);
        return hv;
    };
    auto pc = [&](const Vec& r) { return prec.apply(r); };

    CgResult cg = pcg(op, pc, project, b, opts.tol, opts.max_iter);
    SternheimerSolution sol = pack(std::move(cg));
    if (sol.final_residual > opts.tol)
        throw SternheimerError(sol.iterations < opts.max_iter
                                   ? "solve_direct: CG stagnated at iteration " +
                                         std::to_string(sol.iterations)
                                   : "solve_direct: no convergence in " +
                                         std::to_string(opts.max_iter) + " iterations",
                               std::move(sol));
    return sol;
}

SternheimerSolution solve_schur(const HamiltonianChannel& ch, double eps_n,
                                const Mat& phi, const Mat& phi_ex, const RVec& eps_ex,
                                const Mat& h_phi_ex, const Vec& b,
                                const SternheimerOptions& opts) {
    if (phi_ex.cols() == 0) return solve_direct(ch, eps_n, phi, b, opts);
    const Eigen::Index n = ch.basis().size();
    if (b.size() != n || phi.rows() != n || phi_ex.rows() != n ||
        h_phi_ex.rows() != n || h_phi_ex.cols() != phi_ex.cols() ||
        eps_ex.size() != phi_ex.cols())
        throw std::invalid_argument("solve_schur: dimension mismatch");
    for (Eigen::Index m = 0; m < eps_ex.size(); ++m)
        if (std::abs(eps_ex[m] - eps_n) < 1e-8)
            throw std::invalid_argument(
                "solve_schur: degenerate shift, extra-band Ritz value too close to eps_n");

    KineticPreconditioner prec = kinetic_preconditioner(ch.basis(), opts.precond_shift);
    RVec dinv = (eps_ex.array() - eps_n).inverse().matrix();

    auto project_r = [&](Vec& v) {
        if (phi.cols() > 0) v -= phi * (phi.adjoint() * v);
        v -= phi_ex * (phi_ex.adjoint() * v);
    };
    // (H - eps_n) Phi~ y, using the cached H*Phi~
    auto from_tilde = [&](const Vec& y) -> Vec {
        return h_phi_ex * y - eps_n * (phi_ex * y);
    };

    Vec u_last;  // (H - eps_n) p of the current CG step
    auto op = [&](const Vec& v) {
        Vec hv = ch.apply(v);
        hv -= eps_n * v;
        u_last = hv;
        Vec y = (phi_ex.adjoint() * hv).cwiseProduct(dinv.cast<Complex>());
        hv -= from_tilde(y);
        project_r(hv);
        return hv;
    };
    auto pc = [&](const Vec& r) { return prec.apply(r); };

    // right-hand side of the remainder-space equation
    Vec tb = phi_ex.adjoint() * b;
    Vec rhs = b - from_tilde(tb.cwiseProduct(dinv.cast<Complex>()));
    project_r(rhs);

    Vec hx_acc = Vec::Zero(n);  // (H - eps_n) * dphi_r, accumulated step by step
    auto on_update = [&](Complex alpha) { hx_acc += alpha * u_last; };

    CgResult cg = pcg(op, pc, project_r, rhs, opts.tol, opts.max_iter, on_update);

    SternheimerSolution sol = pack(std::move(cg));
    sol.dphi_r = sol.dphi_q;
    sol.alpha = (tb - phi_ex.adjoint() * hx_acc).cwiseProduct(dinv.cast<Complex>());
    sol.dphi_q = phi_ex * sol.alpha + sol.dphi_r;
    if (sol.final_residual > opts.tol)
        throw SternheimerError(sol.iterations < opts.max_iter
                                   ? "solve_schur: CG stagnated at iteration " +
                                         std::to_string(sol.iterations)
                                   : "solve_schur: no convergence in " +
                                         std::to_string(opts.max_iter) + " iterations",
                               std::move(sol));
    return sol;
}

RVec default_shifts(const RVec& eps_occ, double eps_next) {
    const Eigen::Index n = eps_occ.size();
    if (n == 0) return RVec();
    const double eps_n_top = eps_occ[n - 1];
    const double gap = std::max(eps_next - eps_n_top, 0.1);
    RVec s(n);
    for (Eigen::Index m = 0; m < n; ++m) s[m] = eps_n_top + gap - eps_occ[m] + 0.1;
    return s;
}

Vec shifted_rhs(const Mat& phi, const RVec& eps_occ, const RVec& shifts, double eps_n,
                double f_n, const Vec& q_dv_phi, const Vec& gamma_col) {
    Vec coeffs(eps_occ.size());
    for (Eigen::Index m = 0; m < eps_occ.size(); ++m)
        coeffs[m] = gamma_col[m] * (eps_occ[m] + shifts[m] - eps_n);
    return phi * coeffs - f_n * q_dv_phi;
}

SternheimerSolution solve_shifted(const HamiltonianChannel& ch, double eps_n,
                                  const Mat& phi, const RVec& eps_occ, const RVec& shifts,
                                  const Vec& rhs, const SternheimerOptions& opts) {
    const Eigen::Index n = ch.basis().size();
    if (rhs.size() != n || phi.rows() != n || shifts.size() != phi.cols() ||
        eps_occ.size() != phi.cols())
        throw std::invalid_argument("solve_shifted: dimension mismatch");
    for (Eigen::Index m = 0; m < shifts.size(); ++m)
        if (eps_occ[m] + shifts[m] - eps_n < 1e-10)
            throw std::invalid_argument(
                "solve_shifted: invalid shift, operator indefinite on the occupied block");

    KineticPreconditioner prec = kinetic_preconditioner(ch.basis(), opts.precond_shift);
    auto op = [&](const Vec& v) {
        Vec hv = ch.apply(v);
        hv += phi * (shifts.cast<Complex>().cwiseProduct(phi.adjoint() * v));
        hv -= eps_n * v;
        return hv;
    };
    auto pc = [&](const Vec& r) { return prec.apply(r); };
    auto no_project = [](Vec&) {};

    CgResult cg = pcg(op, pc, no_project, rhs, opts.tol, opts.max_iter);
    SternheimerSolution sol = pack(std::move(cg));
    if (sol.final_residual > opts.tol)
        throw SternheimerError(sol.iterations < opts.max_iter
                                   ? "solve_shifted: CG stagnated at iteration " +
                                         std::to_string(sol.iterations)
                                   : "solve_shifted: no convergence in " +
                                         std::to_string(opts.max_iter) + " iterations",
                               std::move(sol));
    return sol;
}

}  // namespace dfpt
