// dfpt - batch front-end: prepare ground states, run response solves,
// benchmark Sternheimer methods, adapt extra bands.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dfpt/adaptive.hpp"
#include "dfpt/config.hpp"
#include "dfpt/io.hpp"
#include "dfpt/oracle.hpp"
#include "dfpt/response.hpp"

namespace fs = std::filesystem;
using namespace dfpt;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_solver = 2;
constexpr int exit_convergence = 3;
constexpr int exit_budget = 4;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
};

RunConfig load_config(const CommonArgs& common) {
    RunConfig cfg = load_run_config(common.config_path);
    if (common.seed_set) cfg.seed = common.seed;
    return cfg;
}

void apply_solver_flags(RunConfig& cfg, const std::string& method, const std::string& gauge,
                        double tol, int max_iter, double shift) {
    if (!method.empty()) cfg.stern.method = sternheimer_method_from_string(method);
    if (!gauge.empty()) cfg.gauge = gauge_from_string(gauge);
    if (tol > 0) cfg.stern.tol = tol;
    if (max_iter > 0) cfg.stern.max_iter = max_iter;
    if (shift > 0) cfg.stern.precond_shift = shift;
}

int cmd_prepare(const CommonArgs& common, const std::string& out_name) {
    RunConfig cfg;
    try {
        cfg = load_config(common);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    }
    try {
        GroundState gs = prepare_groundstate(cfg.make_channels(), cfg.smearing, cfg.n_el,
                                             cfg.policy, cfg.occ_threshold, cfg.seed);
        fs::create_directories(common.out_dir);
        fs::path out = fs::path(common.out_dir) / out_name;
        save_groundstate(out.string(), gs);
        std::printf("fermi_level = %.17g\n", gs.fermi_level);
        for (std::size_t c = 0; c < gs.channels.size(); ++c) {
            const auto& s = gs.channels[c].slice;
            std::printf("channel %zu: N = %d, N_ex = %d, max_res = %.3e\n", c, s.n_occ,
                        s.n_extra(), s.res_norms.maxCoeff());
        }
        std::printf("wrote %s\n", out.string().c_str());
        return exit_ok;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return exit_solver;
    }
}

int cmd_respond(const CommonArgs& common, const std::string& gs_path,
                const std::string& perturbation_path, const std::string& method,
                const std::string& gauge, double tol, int max_iter, double shift,
                bool dyson) {
    RunConfig cfg;
    GroundState gs;
    LocalPotential dv;
    try {
        cfg = load_config(common);
        apply_solver_flags(cfg, method, gauge, tol, max_iter, shift);
        gs = load_groundstate(gs_path);
        KeyValueFile pf = KeyValueFile::parse_file(perturbation_path);
        dv = parse_potential_triples(pf.get_string("potential"));
        for (const auto& c : gs.channels)
            if (dv.max_mode() > 2 * c.channel.basis().max_mode())
                throw ConfigError("perturbation modes exceed the ground-state basis range");
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    }

    fs::create_directories(common.out_dir);
    fs::path resp_path = fs::path(common.out_dir) / "response.bin";
    fs::path csv_path = fs::path(common.out_dir) / "reports.csv";
    try {
        ResponseResult r =
            dyson ? solve_dyson(gs, dv, HartreeKernel{}, cfg.mixing, cfg.dyson_tol,
                                cfg.dyson_max_iter, cfg.gauge, cfg.stern)
                  : apply_chi0(gs, dv, cfg.gauge, cfg.stern);
        save_response(resp_path.string(), r, cfg.seed);
        reports_to_csv(r.reports).save(csv_path.string());
        std::printf("|drho| = %.17g, deF = %.17g, h_applies = %ld\n", r.drho.norm(), r.deF,
                    r.total_h_applies);
        std::printf("wrote %s and %s\n", resp_path.string().c_str(), csv_path.string().c_str());
        return exit_ok;
    } catch (const ResponseError& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        reports_to_csv(e.partial_reports).save(csv_path.string());
        return exit_convergence;
    } catch (const DysonError& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        reports_to_csv({}).save(csv_path.string());
        return exit_convergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_convergence;
    }
}

int cmd_bench(const CommonArgs& common, int sweep_mode, const std::vector<double>& sweep,
              const std::string& perturbation_path, double tol, int max_iter,
              bool with_shifted) {
    RunConfig cfg;
    LocalPotential dv;
    try {
        cfg = load_config(common);
        if (sweep.empty()) throw ConfigError("bench: sweep list must be nonempty");
        if (tol > 0) cfg.stern.tol = tol;
        if (max_iter > 0) cfg.stern.max_iter = max_iter;
        if (!perturbation_path.empty()) {
            KeyValueFile pf = KeyValueFile::parse_file(perturbation_path);
            dv = parse_potential_triples(pf.get_string("potential"));
        } else {
            dv = LocalPotential::sine(1, 0.5).plus(LocalPotential::sine(2, 0.5));
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    }

    CsvTable t;
    t.header = {"sweep_value", "gap",      "method",    "channel_id", "band",
                "iterations",  "residual", "h_applies", "seed"};
    std::vector<SternheimerMethod> methods{SternheimerMethod::Direct,
                                           SternheimerMethod::Schur};
    if (with_shifted) methods.push_back(SternheimerMethod::Shifted);

    for (double v : sweep) {
        RunConfig point = cfg;
        for (auto& pot : point.potentials) {
            LocalPotential adj = LocalPotential::cosine(sweep_mode, v)
                                     .plus(LocalPotential::cosine(sweep_mode,
                                                                  pot.coeff(sweep_mode).real()),
                                           -1.0);
            pot = pot.plus(adj);
        }
        try {
            GroundState gs = prepare_groundstate(point.make_channels(), point.smearing,
                                                 point.n_el, point.policy,
                                                 point.occ_threshold, point.seed);
            for (auto method : methods) {
                SternheimerOptions opts = point.stern;
                opts.method = method;
                ResponseResult r = apply_chi0(gs, dv, point.gauge, opts);
                long iters = 0;
                for (const auto& rep : r.reports) {
                    iters += rep.iterations;
                    t.rows.push_back({format_double(v), rep.gap, to_string(method),
                                      static_cast<long>(rep.channel_id),
                                      static_cast<long>(rep.band), rep.iterations,
                                      rep.final_residual, rep.h_applies,
                                      static_cast<long>(point.seed)});
                }
                t.rows.push_back({format_double(v), 0.0, to_string(method),
                                  static_cast<long>(-1), static_cast<long>(-1), iters, 0.0,
                                  r.total_h_applies, static_cast<long>(point.seed)});
            }
        } catch (const std::exception& e) {
            std::cerr << "bench point " << v << " failed: " << e.what() << "\n";
            t.rows.push_back({format_double(v), 0.0, std::string("failed"),
                              static_cast<long>(-1), static_cast<long>(-1),
                              static_cast<long>(0), 0.0, static_cast<long>(0),
                              static_cast<long>(cfg.seed)});
        }
    }
    fs::create_directories(common.out_dir);
    fs::path out = fs::path(common.out_dir) / "bench.csv";
    t.save(out.string());
    std::printf("wrote %s\n", out.string().c_str());
    return exit_ok;
}

int cmd_adapt(const CommonArgs& common, const std::string& gs_path, double xi_target,
              int max_added) {
    RunConfig cfg;
    GroundState gs;
    try {
        cfg = load_config(common);
        gs = load_groundstate(gs_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    }
    fs::create_directories(common.out_dir);
    fs::path gs_out = fs::path(common.out_dir) / "groundstate_adapted.bin";
    fs::path trace_out = fs::path(common.out_dir) / "adapt_trace.csv";

    CsvTable t;
    t.header = {"step", "n_ex", "xi", "tol", "h_applies"};
    try {
        for (std::size_t c = 0; c < gs.channels.size(); ++c) {
            AdaptResult ar = adapt_bands(gs, static_cast<int>(c), xi_target, max_added,
                                         cfg.seed + c);
            for (const auto& row : ar.trace)
                t.rows.push_back({static_cast<long>(row.step), static_cast<long>(row.n_ex),
                                  row.xi, row.tol, row.h_applies});
            auto& cs = gs.channels[c];
            cs.slice = std::move(ar.slice);
            cs.occupations.resize(cs.slice.n_bands());
            for (int i = 0; i < cs.slice.n_bands(); ++i)
                cs.occupations[i] = occupation(cs.slice.ritz[i], gs.fermi_level,
                                               gs.smearing, cs.channel.f_max());
        }
        save_groundstate(gs_out.string(), gs);
        t.save(trace_out.string());
        std::printf("wrote %s and %s\n", gs_out.string().c_str(), trace_out.string().c_str());
        return exit_ok;
    } catch (const AdaptBudgetError& e) {
        for (const auto& row : e.trace)
            t.rows.push_back({static_cast<long>(row.step), static_cast<long>(row.n_ex),
                              row.xi, row.tol, row.h_applies});
        t.save(trace_out.string());
        std::cerr << "budget exhausted: " << e.what() << "\n";
        return exit_budget;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_solver;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"plane-wave DFPT response toolkit"};
    app.require_subcommand(1);

    CommonArgs common;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "run configuration file")->required();
        sub->add_option("--out", common.out_dir, "output directory");
        sub->add_option("--seed", common.seed, "random seed override")
            ->each([&](const std::string&) { common.seed_set = true; });
    };

    auto* prepare = app.add_subcommand("prepare", "solve and persist a ground state");
    std::string gs_name = "groundstate.bin";
    add_common(prepare);
    prepare->add_option("--gs-name", gs_name, "output file name");

    auto* respond = app.add_subcommand("respond", "apply chi0 (or solve Dyson) for a perturbation");
    std::string gs_path, pert_path, method, gauge;
    double tol = -1, shift = -1;
    int max_iter = -1;
    bool dyson = false;
    add_common(respond);
    respond->add_option("--groundstate", gs_path, "ground-state file")->required();
    respond->add_option("--perturbation", pert_path, "perturbation file")->required();
    respond->add_option("--method", method, "direct|schur|shifted");
    respond->add_option("--gauge", gauge, "orth|simple|qe|abinit|min");
    respond->add_option("--tol", tol, "Sternheimer residual tolerance");
    respond->add_option("--max-iter", max_iter, "CG iteration cap");
    respond->add_option("--precond-shift", shift, "kinetic preconditioner shift");
    respond->add_flag("--dyson", dyson, "solve the interacting Dyson equation");

    auto* bench = app.add_subcommand("bench", "gap sweep comparing Sternheimer methods");
    int sweep_mode = 2;
    std::vector<double> sweep;
    std::string bench_pert;
    double bench_tol = -1;
    int bench_max_iter = -1;
    bool with_shifted = false;
    add_common(bench);
    bench->add_option("--sweep-mode", sweep_mode, "potential mode to sweep");
    bench->add_option("--sweep", sweep, "coefficient values")->required()->delimiter(',');
    bench->add_option("--perturbation", bench_pert, "perturbation file");
    bench->add_option("--tol", bench_tol, "Sternheimer residual tolerance");
    bench->add_option("--max-iter", bench_max_iter, "CG iteration cap");
    bench->add_flag("--with-shifted", with_shifted, "include the shifted method");

    auto* adapt = app.add_subcommand("adapt", "adaptive extra-band selection");
    std::string adapt_gs;
    double xi_target = 2.2;
    int max_added = 30;
    add_common(adapt);
    adapt->add_option("--groundstate", adapt_gs, "ground-state file")->required();
    adapt->add_option("--xi-target", xi_target, "target conditioning ratio")->required();
    adapt->add_option("--max-added", max_added, "band budget");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    if (prepare->parsed()) return cmd_prepare(common, gs_name);
    if (respond->parsed())
        return cmd_respond(common, gs_path, pert_path, method, gauge, tol, max_iter,
                           shift, dyson);
    if (bench->parsed())
        return cmd_bench(common, sweep_mode, sweep, bench_pert, bench_tol, bench_max_iter,
                         with_shifted);
    if (adapt->parsed()) return cmd_adapt(common, adapt_gs, xi_target, max_added);
    return exit_config;
}
