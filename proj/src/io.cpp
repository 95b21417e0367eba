#include "dfpt/io.hpp"

#include <map>

#include "dfpt/arrayfile.hpp"

namespace dfpt {

namespace {

std::string ch_key(std::size_t c, const std::string& field) {
    return "channel" + std::to_string(c) + "/" + field;
}

RMat potential_triples(const LocalPotential& pot) {
    RMat m(static_cast<Eigen::Index>(pot.coeffs().size()), 3);
    Eigen::Index i = 0;
    for (const auto& [mode, coeff] : pot.coeffs()) {
        m(i, 0) = mode;
        m(i, 1) = coeff.real();
        m(i, 2) = coeff.imag();
        ++i;
    }
    return m;
}

LocalPotential potential_from_triples(const RMat& m) {
    std::map<int, Complex> c;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        c[static_cast<int>(m(i, 0))] += Complex(m(i, 1), m(i, 2));
    return LocalPotential(std::move(c));
}

}  // namespace

void save_groundstate(const std::string& path, const GroundState& gs) {
    ArrayFile f;
    f.set_scalar("format_version", ArrayFile::format_version);
    f.set_scalar("n_channels", static_cast<double>(gs.channels.size()));
    f.set_scalar("n_el", gs.n_el);
    f.set_scalar("fermi_level", gs.fermi_level);
    f.set_scalar("occ_threshold", gs.occ_threshold);
    f.set_scalar("seed", static_cast<double>(gs.seed));
    f.set_scalar("smearing_kind", gs.smearing.kind == SmearingKind::FermiDirac ? 0.0 : 1.0);
    f.set_scalar("temperature", gs.smearing.temperature);
    f.set_scalar("policy_n_conv", gs.policy.n_conv);
    f.set_scalar("policy_n_ex", gs.policy.n_ex);
    f.set_scalar("policy_eig_tol", gs.policy.eig_tol);
    f.set_scalar("policy_max_iter", gs.policy.max_iter);

    for (std::size_t c = 0; c < gs.channels.size(); ++c) {
        const auto& cs = gs.channels[c];
        f.set_scalar(ch_key(c, "cell_length"), cs.channel.basis().cell_length());
        f.set_scalar(ch_key(c, "ecut"), cs.channel.basis().ecut());
        f.set_scalar(ch_key(c, "weight"), cs.channel.weight());
        f.set_scalar(ch_key(c, "f_max"), cs.channel.f_max());
        f.set_scalar(ch_key(c, "apply_count"), static_cast<double>(cs.channel.apply_count()));
        f.set_scalar(ch_key(c, "n_occ"), cs.slice.n_occ);
        f.set_scalar(ch_key(c, "n_conv_used"), cs.n_conv_used);
        f.set(ch_key(c, "potential"), potential_triples(cs.channel.potential()));
        f.set(ch_key(c, "bands"), Mat(cs.slice.bands));
        f.set(ch_key(c, "ritz"), RMat(cs.slice.ritz));
        f.set(ch_key(c, "res_norms"), RMat(cs.slice.res_norms));
        RMat conv(cs.slice.converged.size(), 1);
        for (std::size_t i = 0; i < cs.slice.converged.size(); ++i)
            conv(static_cast<Eigen::Index>(i), 0) = cs.slice.converged[i] ? 1.0 : 0.0;
        f.set(ch_key(c, "converged"), conv);
        f.set(ch_key(c, "occupations"), RMat(cs.occupations));
    }
    f.save(path);
}

GroundState load_groundstate(const std::string& path) {
    ArrayFile f = ArrayFile::load(path);
    GroundState gs;
    const std::size_t nch = static_cast<std::size_t>(f.get_scalar("n_channels"));
    gs.n_el = f.get_scalar("n_el");
    gs.fermi_level = f.get_scalar("fermi_level");
    gs.occ_threshold = f.get_scalar("occ_threshold");
    gs.seed = static_cast<std::uint64_t>(f.get_scalar("seed"));
    gs.smearing.kind = f.get_scalar("smearing_kind") == 0.0 ? SmearingKind::FermiDirac
                                                            : SmearingKind::Gaussian;
    gs.smearing.temperature = f.get_scalar("temperature");
    gs.policy.n_conv = static_cast<int>(f.get_scalar("policy_n_conv"));
    gs.policy.n_ex = static_cast<int>(f.get_scalar("policy_n_ex"));
    gs.policy.eig_tol = f.get_scalar("policy_eig_tol");
    gs.policy.max_iter = static_cast<int>(f.get_scalar("policy_max_iter"));

    for (std::size_t c = 0; c < nch; ++c) {
        PlaneWaveBasis basis(f.get_scalar(ch_key(c, "cell_length")),
                             f.get_scalar(ch_key(c, "ecut")));
        HamiltonianChannel channel(basis,
                                   potential_from_triples(f.get_real(ch_key(c, "potential"))),
                                   f.get_scalar(ch_key(c, "weight")),
                                   f.get_scalar(ch_key(c, "f_max")));
        channel.set_apply_count(static_cast<long>(f.get_scalar(ch_key(c, "apply_count"))));
        SpectrumSlice slice;
        slice.bands = f.get_complex(ch_key(c, "bands"));
        slice.ritz = f.get_real(ch_key(c, "ritz"));
        slice.res_norms = f.get_real(ch_key(c, "res_norms"));
        RMat conv = f.get_real(ch_key(c, "converged"));
        slice.converged.resize(conv.rows());
        for (Eigen::Index i = 0; i < conv.rows(); ++i) slice.converged[i] = conv(i, 0) != 0.0;
        slice.n_occ = static_cast<int>(f.get_scalar(ch_key(c, "n_occ")));
        ChannelState cs{std::move(channel), std::move(slice),
                        f.get_real(ch_key(c, "occupations")),
                        static_cast<int>(f.get_scalar(ch_key(c, "n_conv_used")))};
        gs.channels.push_back(std::move(cs));
    }
    return gs;
}

CsvTable reports_to_csv(const std::vector<SolverReport>& reports) {
    CsvTable t;
    t.header = {"channel_id", "band", "method", "gauge", "gap",
                "iterations", "final_residual", "h_applies"};
    std::map<std::string, std::pair<long, long>> totals;  // method -> (iters, h)
    for (const auto& r : reports) {
        t.rows.push_back({static_cast<long>(r.channel_id), static_cast<long>(r.band),
                          to_string(r.method), to_string(r.gauge), r.gap,
                          r.iterations, r.final_residual, r.h_applies});
        auto& tot = totals[to_string(r.method)];
        tot.first += r.iterations;
        tot.second += r.h_applies;
    }
    for (const auto& [method, tot] : totals)
        t.rows.push_back({static_cast<long>(-1), static_cast<long>(-1), method,
                          std::string("total"), 0.0, tot.first, 0.0, tot.second});
    return t;
}

void save_response(const std::string& path, const ResponseResult& r, std::uint64_t seed) {
    ArrayFile f;
    f.set_scalar("format_version", ArrayFile::format_version);
    f.set_scalar("max_mode", r.drho.max_mode);
    f.set("drho", Mat(r.drho.coeff));
    f.set_scalar("deF", r.deF);
    f.set_scalar("total_h_applies", static_cast<double>(r.total_h_applies));
    f.set_scalar("total_dv_applies", static_cast<double>(r.total_dv_applies));
    f.set_scalar("dyson_iterations", r.dyson_iterations);
    f.set_scalar("dyson_residual", r.dyson_residual);
    f.set_scalar("dyson_reference", r.dyson_reference);
    f.set_scalar("seed", static_cast<double>(seed));
    f.set_string("method", to_string(r.method));
    f.set_string("gauge", to_string(r.gauge));
    RMat rep(static_cast<Eigen::Index>(r.reports.size()), 6);
    for (std::size_t i = 0; i < r.reports.size(); ++i) {
        const auto& row = r.reports[i];
        Eigen::Index j = static_cast<Eigen::Index>(i);
        rep(j, 0) = row.channel_id;
        rep(j, 1) = row.band;
        rep(j, 2) = row.gap;
        rep(j, 3) = static_cast<double>(row.iterations);
        rep(j, 4) = row.final_residual;
        rep(j, 5) = static_cast<double>(row.h_applies);
    }
    f.set("reports", rep);
    f.save(path);
}

}  // namespace dfpt
