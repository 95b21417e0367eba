#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "dfpt/groundstate.hpp"
#include "test_helpers.hpp"

using namespace dfpt;

namespace {
constexpr double two_pi = 2.0 * 3.14159265358979323846;
const SmearingScheme fd{SmearingKind::FermiDirac, 1e-2};
const SmearingScheme gauss{SmearingKind::Gaussian, 1e-2};

double oracle_range(const HamiltonianChannel& h) {
    Eigen::SelfAdjointEigenSolver<Mat> es(h.dense());
    return std::max(1.0, es.eigenvalues().maxCoeff() - es.eigenvalues().minCoeff());
}
}  // namespace

TEST_CASE("occupation values at reference points") {
    CHECK(occupation(0.3, 0.3, fd, 2.0) == doctest::Approx(1.0));
    double t = fd.temperature;
    CHECK(occupation(0.3 + t * std::log(3.0), 0.3, fd, 2.0) == doctest::Approx(0.5));
    CHECK(occupation(0.3, 0.3, gauss, 2.0) == doctest::Approx(1.0));
    CHECK(occupation(0.1, 0.7, fd, 1.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(occupation(0.0, 0.0, SmearingScheme{SmearingKind::FermiDirac, 0.0}, 2.0),
                    std::invalid_argument);
}

TEST_CASE("occupation complementarity f(x) + f(-x) = f_max") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> xd(-60.0, 60.0);
    for (const auto& s : {fd, gauss}) {
        for (int i = 0; i < 1000; ++i) {
            double x = xd(rng);
            double f1 = occupation(x * s.temperature, 0.0, s, 2.0);
            double f2 = occupation(-x * s.temperature, 0.0, s, 2.0);
            CHECK(std::abs(f1 / 2.0 + f2 / 2.0 - 1.0) < 1e-14);
        }
    }
}

TEST_CASE("occupation derivative reference values and tails") {
    double t = fd.temperature;
    CHECK(occupation_derivative(0.5, 0.5, fd, 2.0) == doctest::Approx(-0.5 / t));
    CHECK(std::abs(occupation_derivative(0.5 + 40.0 * t, 0.5, fd, 2.0)) < 1e-15 / t);
    CHECK(occupation_derivative(1.0, 0.2, fd, 2.0) < 0.0);
}

TEST_CASE("occupation derivative matches central differences") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> xd(-5.0, 5.0);
    const double h = 1e-5;  // step in the dimensionless argument x = (eps - mu)/T
    for (const auto& s : {fd, gauss}) {
        for (int i = 0; i < 50; ++i) {
            double x = xd(rng);
            double f_hi = occupation((x + h) * s.temperature, 0.0, s, 2.0);
            double f_lo = occupation((x - h) * s.temperature, 0.0, s, 2.0);
            double numeric = (f_hi - f_lo) / (2.0 * h * s.temperature);
            double exact = occupation_derivative(x * s.temperature, 0.0, s, 2.0);
            CHECK(exact == doctest::Approx(numeric).epsilon(1e-8));
        }
    }
}

TEST_CASE("fermi level of a symmetric two-level system") {
    RVec eps(2);
    eps << 0.0, 1.0;
    double ef = solve_fermi_level({{eps, 1.0, 2.0}}, fd, 2.0);
    CHECK(ef == doctest::Approx(0.5).epsilon(1e-12));

    // two channels, weight one half each, same spectrum
    double ef2 = solve_fermi_level({{eps, 0.5, 2.0}, {eps, 0.5, 2.0}}, fd, 2.0);
    CHECK(ef2 == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("fermi level meets the charge constraint to 1e-12 relative") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ed(-2.0, 6.0);
    for (int trial = 0; trial < 20; ++trial) {
        RVec eps(30);
        for (int i = 0; i < 30; ++i) eps[i] = ed(rng);
        std::sort(eps.data(), eps.data() + 30);
        SmearingScheme s{trial % 2 ? SmearingKind::Gaussian : SmearingKind::FermiDirac,
                         trial % 3 ? 1e-2 : 1e-3};
        double n_el = 10.0;
        double ef = solve_fermi_level({{eps, 1.0, 2.0}}, s, n_el);
        double q = 0.0;
        for (int i = 0; i < 30; ++i) q += occupation(eps[i], ef, s, 2.0);
        CHECK(std::abs(q - n_el) <= 1e-12 * n_el);
    }
}

TEST_CASE("fermi level agrees with an independent grid scan") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ed(-1.0, 3.0);
    RVec eps(30);
    for (int i = 0; i < 30; ++i) eps[i] = ed(rng);
    std::sort(eps.data(), eps.data() + 30);
    const double n_el = 10.0;
    double ef = solve_fermi_level({{eps, 1.0, 2.0}}, fd, n_el);

    // brute-force scan of the monotone charge function, step 1e-6
    auto charge = [&](double mu) {
        double q = 0.0;
        for (int i = 0; i < 30; ++i) q += occupation(eps[i], mu, fd, 2.0);
        return q;
    };
    double best = eps[0] - 1.0;
    for (double mu = eps[0] - 1.0; mu < eps[29] + 1.0; mu += 1e-6)
        if (charge(mu) <= n_el) best = mu;
    CHECK(std::abs(best - ef) < 1e-5);
}

TEST_CASE("monotone charge function") {
    RVec eps(5);
    eps << -0.5, 0.0, 0.3, 1.2, 2.0;
    double prev = -1.0;
    for (double mu = -2.0; mu < 4.0; mu += 0.05) {
        double q = 0.0;
        for (int i = 0; i < 5; ++i) q += occupation(eps[i], mu, fd, 2.0);
        CHECK(q >= prev);
        prev = q;
    }
}

TEST_CASE("infeasible electron counts are rejected") {
    RVec eps(2);
    eps << 0.0, 1.0;
    CHECK_THROWS_AS(solve_fermi_level({{eps, 1.0, 2.0}}, fd, 4.5), InfeasibleError);
    CHECK_THROWS_AS(solve_fermi_level({{eps, 1.0, 2.0}}, fd, -1.0), std::invalid_argument);
}

TEST_CASE("eigensolver on a diagonal Hamiltonian converges in one pass") {
    PlaneWaveBasis b(two_pi, 8.0);
    HamiltonianChannel h(b, LocalPotential{});
    EigensolveOptions opts;
    opts.n_conv = 4;
    opts.n_ex = 2;
    opts.tol = 1e-12;
    SpectrumSlice s = block_eigensolve(h, opts);
    CHECK(s.res_norms.maxCoeff() < 1e-12);
    CHECK(s.ritz[0] == doctest::Approx(0.0));
    CHECK(s.ritz[1] == doctest::Approx(0.5));
    CHECK(s.ritz[2] == doctest::Approx(0.5));
    CHECK(s.ritz[3] == doctest::Approx(2.0));
}

TEST_CASE("eigensolver matches dense diagonalization on random channels") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 4; ++trial) {
        PlaneWaveBasis b(two_pi, 0.5 * 24 * 24 + 0.1);  // 49 modes
        LocalPotential pot = testing::random_potential(rng, 4, 1.0);
        HamiltonianChannel h(b, pot);
        EigensolveOptions opts;
        opts.n_conv = 5;
        opts.n_ex = 3;
        opts.tol = 1e-10;
        opts.max_iter = 600;
        opts.seed = trial;
        SpectrumSlice s = block_eigensolve(h, opts);

        Eigen::SelfAdjointEigenSolver<Mat> es(h.dense());
        for (int i = 0; i < 5; ++i)
            CHECK(s.ritz[i] == doctest::Approx(es.eigenvalues()[i]).epsilon(1e-9));
        CHECK(s.orthonormality_defect() < 1e-12);
        CHECK(s.ritz_offdiag(h) < 1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()));
        for (int i = 0; i < 5; ++i) CHECK(s.res_norms[i] <= 1e-10);
    }
}

TEST_CASE("slice invariants hold after every eigensolver iteration") {
    std::mt19937_64 rng(19);
    PlaneWaveBasis b(two_pi, 0.5 * 10 * 10 + 0.1);
    HamiltonianChannel h(b, testing::random_potential(rng, 4, 1.0));
    double range = oracle_range(h);
    for (int cutoff = 1; cutoff <= 12; ++cutoff) {
        EigensolveOptions opts;
        opts.n_conv = 4;
        opts.n_ex = 2;
        opts.tol = 1e-14;  // unreachable: every run stops at its iteration cutoff
        opts.max_iter = cutoff;
        try {
            block_eigensolve(h, opts);
        } catch (const EigensolveError& e) {
            CHECK(e.partial.orthonormality_defect() <= 1e-12);
            CHECK(e.partial.ritz_offdiag(h) <= 1e-10 * range);
            for (int i = 1; i < e.partial.n_bands(); ++i)
                CHECK(e.partial.ritz[i] >= e.partial.ritz[i - 1]);
        }
    }
}

TEST_CASE("eigensolver failure carries partial state") {
    std::mt19937_64 rng(10);
    PlaneWaveBasis b(two_pi, 0.5 * 14 * 14 + 0.1);
    HamiltonianChannel h(b, testing::random_potential(rng, 4, 1.0));
    EigensolveOptions opts;
    opts.n_conv = 5;
    opts.n_ex = 2;
    opts.tol = 1e-12;
    opts.max_iter = 2;  // cannot converge
    try {
        block_eigensolve(h, opts);
        FAIL("expected EigensolveError");
    } catch (const EigensolveError& e) {
        CHECK(e.partial.n_bands() == 7);
        CHECK(e.partial.orthonormality_defect() < 1e-12);
    }
}

TEST_CASE("prepared free-particle ground state respects degeneracy symmetry") {
    PlaneWaveBasis b(two_pi, 8.1);
    HamiltonianChannel h(b, LocalPotential{});
    BandPolicy policy;
    policy.n_conv = 4;
    policy.n_ex = 2;
    GroundState gs = prepare_groundstate({h}, fd, 2.0, policy);
    const auto& c = gs.channels[0];
    CHECK(std::abs(gs.total_charge() - 2.0) < 1e-10);
    // +-G pairs share an occupation
    CHECK(c.occupations[1] == doctest::Approx(c.occupations[2]).epsilon(1e-12));
    for (int i = 0; i < c.slice.n_occ; ++i) CHECK(c.occupations[i] >= gs.occ_threshold);
    for (int i = c.slice.n_occ; i < c.slice.n_bands(); ++i)
        CHECK(c.occupations[i] < gs.occ_threshold);
}

TEST_CASE("prepared charge matches n_el on random models") {
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        auto m = testing::random_model(seed, 6, 10);
        BandPolicy policy;
        policy.n_conv = 8;
        policy.n_ex = 3;
        GroundState gs = prepare_groundstate({m.channel}, m.smearing, m.n_el, policy);
        // recompute the charge with the occupation op
        double q = 0.0;
        for (const auto& c : gs.channels)
            for (int i = 0; i < c.slice.n_bands(); ++i)
                q += c.channel.weight() *
                     occupation(c.slice.ritz[i], gs.fermi_level, gs.smearing,
                                c.channel.f_max());
        CHECK(std::abs(q - m.n_el) < 1e-10);
        CHECK(gs.channels[0].slice.orthonormality_defect() < 1e-12);
    }
}

TEST_CASE("degenerate clusters at the block boundary are kept whole") {
    // free particle: +-G pairs are exactly degenerate; a policy that would cut
    // the pair at 2.0 must retain both members
    PlaneWaveBasis b(two_pi, 12.6);
    HamiltonianChannel h(b, LocalPotential{});
    BandPolicy policy;
    policy.n_conv = 2;
    policy.n_ex = 2;  // bands {0, .5, .5, 2 | 2, ...}: boundary splits the pair
    GroundState gs = prepare_groundstate({h}, fd, 2.0, policy);
    const auto& s = gs.channels[0].slice;
    CHECK(s.n_bands() == 5);
    CHECK(s.ritz[3] == doctest::Approx(2.0));
    CHECK(s.ritz[4] == doctest::Approx(2.0));

    // a boundary falling on a gap keeps the requested count
    policy.n_ex = 1;  // bands {0, .5, .5}: next level 2.0 is far
    GroundState gs2 = prepare_groundstate({h}, fd, 2.0, policy);
    CHECK(gs2.channels[0].slice.n_bands() == 3);
}

TEST_CASE("multi-channel ground state shares one Fermi level") {
    std::mt19937_64 rng(31);
    PlaneWaveBasis b(two_pi, 32.1);
    HamiltonianChannel h1(b, testing::random_potential(rng, 3, 0.6), 0.5, 2.0);
    HamiltonianChannel h2(b, testing::random_potential(rng, 3, 0.6), 0.5, 2.0);
    BandPolicy policy;
    policy.n_conv = 6;
    policy.n_ex = 2;
    GroundState gs = prepare_groundstate({h1, h2}, fd, 4.0, policy);
    CHECK(gs.channels.size() == 2);
    CHECK(std::abs(gs.total_charge() - 4.0) < 1e-10);
}
