#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "dfpt/arrayfile.hpp"
#include "dfpt/config.hpp"
#include "dfpt/csv.hpp"
#include "dfpt/io.hpp"
#include "dfpt/response.hpp"
#include "test_helpers.hpp"

using namespace dfpt;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("dfpt_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string read_bytes(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
}

std::string cli_path() {
    const char* p = std::getenv("DFPT_CLI");
    REQUIRE(p != nullptr);
    return p;
}

int run_cli(const std::string& args) {
    std::string cmd = cli_path() + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    f << text;
}

const char* base_config =
    "cell_length = 6.283185307179586\n"
    "ecut = 32.5\n"
    "potential = (1, -0.4, 0.0) (2, 0.25, 0.1) (-2, 0.25, -0.1) (-1, -0.4, 0.0)\n"
    "weight = 1.0\n"
    "f_max = 2\n"
    "n_el = 4\n"
    "temperature = 0.01\n"
    "smearing = fermi-dirac\n"
    "n_conv = 8\n"
    "n_ex = 3\n"
    "seed = 7\n"
    "tol = 1e-10\n";

}  // namespace

TEST_CASE("key = value parser: comments, repeats, strict numbers") {
    KeyValueFile f = KeyValueFile::parse_text(
        "a = 1.5 # trailing comment\n# full comment\nb = x\n a = 2.5 \n");
    CHECK(f.get_double("a") == 1.5);
    CHECK(f.get_all("a").size() == 2);
    CHECK(f.get_string("b") == "x");
    CHECK_THROWS_AS(f.get_double("b"), ConfigError);
    CHECK_THROWS_AS(f.get_string("missing"), ConfigError);
    CHECK_THROWS_AS(KeyValueFile::parse_text("noequals\n"), ConfigError);
}

TEST_CASE("doubles round-trip bit-exactly through their decimal form") {
    std::mt19937_64 rng(601);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        double x = ud(rng) * std::pow(10.0, int(ud(rng) * 30));
        std::string text = "x = " + format_double(x) + "\n";
        CHECK(KeyValueFile::parse_text(text).get_double("x") == x);
    }
}

TEST_CASE("potential triples parse and format losslessly") {
    std::mt19937_64 rng(602);
    LocalPotential pot = testing::random_potential(rng, 4, 0.7);
    LocalPotential back = parse_potential_triples(format_potential_triples(pot));
    for (int m = -4; m <= 4; ++m) CHECK(back.coeff(m) == pot.coeff(m));
    CHECK_THROWS_AS(parse_potential_triples("(1, 0.5)"), ConfigError);
    CHECK_THROWS_AS(parse_potential_triples("(1, 0.5, 0.0)"), ConfigError);  // asymmetric
}

TEST_CASE("csv tables round-trip") {
    CsvTable t;
    t.header = {"name", "value", "count"};
    std::mt19937_64 rng(603);
    std::uniform_real_distribution<double> ud(-1e6, 1e6);
    for (int i = 0; i < 50; ++i)
        t.rows.push_back({std::string("row") + std::to_string(i), ud(rng),
                          static_cast<long>(i * 7 - 3)});
    CsvTable back = CsvTable::parse(t.write());
    REQUIRE(back.header == t.header);
    REQUIRE(back.rows.size() == t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (std::size_t j = 0; j < t.rows[i].size(); ++j)
            CHECK(back.rows[i][j] == t.rows[i][j]);
}

TEST_CASE("array container round-trips bit-exactly") {
    TempDir tmp;
    std::mt19937_64 rng(604);
    ArrayFile f;
    f.set_scalar("alpha", 0.1 + 1e-17);
    f.set("real", RMat(RMat::Random(5, 3)));
    Mat c(4, 4);
    for (int i = 0; i < 16; ++i) c(i / 4, i % 4) = testing::random_state(rng, 1)[0];
    f.set("complex", c);
    f.set_string("tag", "hello world");
    f.save(tmp.file("a.bin"));
    ArrayFile g = ArrayFile::load(tmp.file("a.bin"));
    CHECK(g.get_scalar("alpha") == f.get_scalar("alpha"));
    CHECK((g.get_real("real") - f.get_real("real")).norm() == 0.0);
    CHECK((g.get_complex("complex") - c).norm() == 0.0);
    CHECK(g.get_string("tag") == "hello world");
    g.save(tmp.file("b.bin"));
    CHECK(read_bytes(tmp.file("a.bin")) == read_bytes(tmp.file("b.bin")));
}

TEST_CASE("ground state persists and round-trips bit-exactly") {
    TempDir tmp;
    auto m = testing::random_model(605);
    BandPolicy policy;
    policy.n_conv = 6;
    policy.n_ex = 2;
    GroundState gs = prepare_groundstate({m.channel}, m.smearing, m.n_el, policy);
    save_groundstate(tmp.file("gs.bin"), gs);
    GroundState back = load_groundstate(tmp.file("gs.bin"));
    CHECK(back.fermi_level == gs.fermi_level);
    CHECK(back.channels[0].slice.n_occ == gs.channels[0].slice.n_occ);
    CHECK((back.channels[0].slice.bands - gs.channels[0].slice.bands).norm() == 0.0);
    CHECK((back.channels[0].occupations - gs.channels[0].occupations).norm() == 0.0);
    CHECK(back.channels[0].channel.apply_count() ==
          gs.channels[0].channel.apply_count());
    save_groundstate(tmp.file("gs2.bin"), back);
    CHECK(read_bytes(tmp.file("gs.bin")) == read_bytes(tmp.file("gs2.bin")));
}

TEST_CASE("solver reports serialize with one totals row per method") {
    std::vector<SolverReport> reports;
    reports.push_back({0, 0, SternheimerMethod::Direct, GaugeKind::Minimal, 0.1, 12,
                       1e-10, 12});
    reports.push_back({0, 1, SternheimerMethod::Direct, GaugeKind::Minimal, 0.1, 30,
                       1e-10, 30});
    CsvTable t = reports_to_csv(reports);
    REQUIRE(t.rows.size() == 3);
    CHECK(std::get<long>(t.rows[2][1]) == -1);
    CHECK(std::get<long>(t.rows[2][5]) == 42);
    CsvTable back = CsvTable::parse(t.write());
    CHECK(back.rows.size() == 3);
}

TEST_CASE("cli: prepare writes a ground state and determinism holds") {
    TempDir tmp;
    write_file(tmp.file("model.cfg"), base_config);
    int rc = run_cli("prepare --config " + tmp.file("model.cfg") + " --out " +
                     tmp.file("run1"));
    CHECK(rc == 0);
    CHECK(fs::exists(tmp.file("run1") + "/groundstate.bin"));
    run_cli("prepare --config " + tmp.file("model.cfg") + " --out " + tmp.file("run2"));
    CHECK(read_bytes(tmp.file("run1") + "/groundstate.bin") ==
          read_bytes(tmp.file("run2") + "/groundstate.bin"));
}

TEST_CASE("cli: prepare rejects bad configs and infeasible electron counts") {
    TempDir tmp;
    write_file(tmp.file("broken.cfg"), "cell_length = oops\n");
    CHECK(run_cli("prepare --config " + tmp.file("broken.cfg") + " --out " +
                  tmp.file("o")) == 1);
    std::string too_many(base_config);
    too_many += "n_el = 200\n";  // beyond band capacity: n_el keys repeat, last wins
    write_file(tmp.file("infeasible.cfg"), too_many);
    // n_el appears twice; parser takes the first, so craft a clean file instead
    std::string cfg(base_config);
    cfg.replace(cfg.find("n_el = 4"), 8, "n_el = 60");
    write_file(tmp.file("infeasible2.cfg"), cfg);
    CHECK(run_cli("prepare --config " + tmp.file("infeasible2.cfg") + " --out " +
                  tmp.file("o2")) == 2);
    CHECK(run_cli("prepare --config " + tmp.file("missing.cfg") + " --out " +
                  tmp.file("o3")) == 1);
}

TEST_CASE("cli: respond produces matching densities for direct and schur") {
    TempDir tmp;
    write_file(tmp.file("model.cfg"), base_config);
    write_file(tmp.file("dv.cfg"),
               "potential = (1, 0.0, -0.3) (-1, 0.0, 0.3) (2, 0.2, 0.0) (-2, 0.2, 0.0)\n");
    REQUIRE(run_cli("prepare --config " + tmp.file("model.cfg") + " --out " +
                    tmp.file("gs")) == 0);
    std::string gs = tmp.file("gs") + "/groundstate.bin";
    REQUIRE(run_cli("respond --config " + tmp.file("model.cfg") + " --groundstate " + gs +
                    " --perturbation " + tmp.file("dv.cfg") +
                    " --method direct --tol 1e-11 --out " + tmp.file("rd")) == 0);
    REQUIRE(run_cli("respond --config " + tmp.file("model.cfg") + " --groundstate " + gs +
                    " --perturbation " + tmp.file("dv.cfg") +
                    " --method schur --tol 1e-11 --out " + tmp.file("rs")) == 0);

    ArrayFile rd = ArrayFile::load(tmp.file("rd") + "/response.bin");
    ArrayFile rs = ArrayFile::load(tmp.file("rs") + "/response.bin");
    Mat d1 = rd.get_complex("drho");
    Mat d2 = rs.get_complex("drho");
    CHECK((d1 - d2).norm() < 1e-7 * d1.norm());
    CHECK(rd.get_string("method") == "direct");
    CHECK(rs.get_string("method") == "schur");

    // CSV row counts: one per occupied band plus a totals row
    GroundState g = load_groundstate(gs);
    std::size_t n_occ = g.channels[0].slice.n_occ;
    CsvTable t1 = CsvTable::load(tmp.file("rd") + "/reports.csv");
    CsvTable t2 = CsvTable::load(tmp.file("rs") + "/reports.csv");
    CHECK(t1.rows.size() == n_occ + 1);
    CHECK(t2.rows.size() == n_occ + 1);
    // totals differ between methods
    long h1 = std::get<long>(t1.rows.back()[7]);
    long h2 = std::get<long>(t2.rows.back()[7]);
    CHECK(h1 != h2);

    // determinism of respond
    REQUIRE(run_cli("respond --config " + tmp.file("model.cfg") + " --groundstate " + gs +
                    " --perturbation " + tmp.file("dv.cfg") +
                    " --method direct --tol 1e-11 --out " + tmp.file("rd2")) == 0);
    CHECK(read_bytes(tmp.file("rd") + "/response.bin") ==
          read_bytes(tmp.file("rd2") + "/response.bin"));
    CHECK(read_bytes(tmp.file("rd") + "/reports.csv") ==
          read_bytes(tmp.file("rd2") + "/reports.csv"));
}

TEST_CASE("cli: respond flags constant perturbations as chargeless") {
    TempDir tmp;
    write_file(tmp.file("model.cfg"), base_config);
    write_file(tmp.file("dv.cfg"), "potential = (0, 0.5, 0.0)\n");
    REQUIRE(run_cli("prepare --config " + tmp.file("model.cfg") + " --out " +
                    tmp.file("gs")) == 0);
    REQUIRE(run_cli("respond --config " + tmp.file("model.cfg") + " --groundstate " +
                    tmp.file("gs") + "/groundstate.bin --perturbation " +
                    tmp.file("dv.cfg") + " --out " + tmp.file("r")) == 0);
    ArrayFile r = ArrayFile::load(tmp.file("r") + "/response.bin");
    CHECK(r.get_complex("drho").norm() <= 1e-10);
}

TEST_CASE("cli: respond rejects incompatible perturbations with exit 1") {
    TempDir tmp;
    write_file(tmp.file("model.cfg"), base_config);
    write_file(tmp.file("too_wide.cfg"), "potential = (40, 0.1, 0.0) (-40, 0.1, 0.0)\n");
    REQUIRE(run_cli("prepare --config " + tmp.file("model.cfg") + " --out " +
                    tmp.file("gs")) == 0);
    CHECK(run_cli("respond --config " + tmp.file("model.cfg") + " --groundstate " +
                  tmp.file("gs") + "/groundstate.bin --perturbation " +
                  tmp.file("too_wide.cfg") + " --out " + tmp.file("r")) == 1);
}

TEST_CASE("cli: bench emits per-band rows and totals per method") {
    TempDir tmp;
    std::string cfg =
        "cell_length = 6.283185307179586\n"
        "ecut = 420\n"
        "potential = (6, -49, 0) (-6, -49, 0)\n"
        "weight = 1\n"
        "f_max = 2\n"
        "n_el = 4.0000003\n"
        "temperature = 2.5e-5\n"
        "n_conv = 6\n"
        "n_ex = 0\n"
        "eig_max_iter = 4000\n"
        "seed = 3\n";
    write_file(tmp.file("bench.cfg"), cfg);
    int rc = run_cli("bench --config " + tmp.file("bench.cfg") +
                     " --sweep-mode 1 --sweep 0.5,0.005 --out " + tmp.file("b"));
    CHECK(rc == 0);
    CsvTable t = CsvTable::load(tmp.file("b") + "/bench.csv");
    // 2 sweep points x 2 methods x (3 occupied bands + totals row)
    CHECK(t.rows.size() == 2 * 2 * 4);
    // deterministic rerun
    run_cli("bench --config " + tmp.file("bench.cfg") +
            " --sweep-mode 1 --sweep 0.5,0.005 --out " + tmp.file("b2"));
    CHECK(read_bytes(tmp.file("b") + "/bench.csv") ==
          read_bytes(tmp.file("b2") + "/bench.csv"));
}

TEST_CASE("cli: respond --dyson converges and persists the interacting response") {
    TempDir tmp;
    std::string cfg(base_config);
    cfg += "mixing = 0.15\ndyson_tol = 1e-8\ndyson_max_iter = 600\n";
    write_file(tmp.file("model.cfg"), cfg);
    write_file(tmp.file("dv.cfg"),
               "potential = (1, 0.3, 0.1) (-1, 0.3, -0.1) (2, 0.2, 0.0) (-2, 0.2, 0.0)\n");
    REQUIRE(run_cli("prepare --config " + tmp.file("model.cfg") + " --out " +
                    tmp.file("gs")) == 0);
    int rc = run_cli("respond --config " + tmp.file("model.cfg") + " --groundstate " +
                     tmp.file("gs") + "/groundstate.bin --perturbation " +
                     tmp.file("dv.cfg") + " --dyson --out " + tmp.file("r"));
    CHECK(rc == 0);
    ArrayFile r = ArrayFile::load(tmp.file("r") + "/response.bin");
    CHECK(r.get_scalar("dyson_iterations") >= 1.0);
    CHECK(r.get_scalar("dyson_residual") <= 1e-8 * r.get_scalar("dyson_reference"));
}

TEST_CASE("cli: respond convergence failure exits 3 with a partial csv") {
    TempDir tmp;
    write_file(tmp.file("model.cfg"), base_config);
    write_file(tmp.file("dv.cfg"),
               "potential = (1, 0.0, -0.3) (-1, 0.0, 0.3) (2, 0.2, 0.0) (-2, 0.2, 0.0)\n");
    REQUIRE(run_cli("prepare --config " + tmp.file("model.cfg") + " --out " +
                    tmp.file("gs")) == 0);
    int rc = run_cli("respond --config " + tmp.file("model.cfg") + " --groundstate " +
                     tmp.file("gs") + "/groundstate.bin --perturbation " +
                     tmp.file("dv.cfg") + " --tol 1e-13 --max-iter 2 --out " +
                     tmp.file("r"));
    CHECK(rc == 3);
    CsvTable t = CsvTable::load(tmp.file("r") + "/reports.csv");
    REQUIRE(!t.rows.empty());  // the failed band's partial row survives
    CHECK(std::get<long>(t.rows[0][5]) == 2);  // capped at max_iter
}

TEST_CASE("cli: bench records per-point failures and keeps running") {
    TempDir tmp;
    write_file(tmp.file("model.cfg"), base_config);
    // sweep mode far outside the basis range: every point fails, run completes
    int rc = run_cli("bench --config " + tmp.file("model.cfg") +
                     " --sweep-mode 100 --sweep 0.1,0.2 --out " + tmp.file("b"));
    CHECK(rc == 0);
    CsvTable t = CsvTable::load(tmp.file("b") + "/bench.csv");
    REQUIRE(t.rows.size() == 2);
    for (const auto& row : t.rows) CHECK(std::get<std::string>(row[2]) == "failed");
}

TEST_CASE("cli: adapt writes a trace and an updated ground state") {
    TempDir tmp;
    std::string cfg =
        "cell_length = 12.566370614359172\n"
        "ecut = 40\n"
        "potential = (1, -3, 0) (-1, -3, 0)\n"
        "weight = 1\n"
        "f_max = 2\n"
        "n_el = 10\n"
        "temperature = 0.05\n"
        "n_conv = 7\n"
        "n_ex = 0\n"
        "seed = 5\n";
    write_file(tmp.file("adapt.cfg"), cfg);
    REQUIRE(run_cli("prepare --config " + tmp.file("adapt.cfg") + " --out " +
                    tmp.file("gs")) == 0);
    std::string gs = tmp.file("gs") + "/groundstate.bin";
    int rc = run_cli("adapt --config " + tmp.file("adapt.cfg") + " --groundstate " + gs +
                     " --xi-target 2.2 --max-added 30 --out " + tmp.file("a"));
    CHECK(rc == 0);
    CsvTable t = CsvTable::load(tmp.file("a") + "/adapt_trace.csv");
    REQUIRE(!t.rows.empty());
    long prev = 0;
    for (const auto& row : t.rows) {
        long n_ex = std::get<long>(row[1]);
        CHECK(n_ex > prev);
        prev = n_ex;
    }
    GroundState updated = load_groundstate(tmp.file("a") + "/groundstate_adapted.bin");
    GroundState original = load_groundstate(gs);
    CHECK(updated.channels[0].slice.n_bands() > original.channels[0].slice.n_bands());

    // already-satisfied target: unchanged band count, empty trace body
    int rc2 = run_cli("adapt --config " + tmp.file("adapt.cfg") + " --groundstate " + gs +
                      " --xi-target 50 --max-added 30 --out " + tmp.file("a2"));
    CHECK(rc2 == 0);
    CsvTable t2 = CsvTable::load(tmp.file("a2") + "/adapt_trace.csv");
    CHECK(t2.rows.empty());

    // unreachable target: exit 4
    CHECK(run_cli("adapt --config " + tmp.file("adapt.cfg") + " --groundstate " + gs +
                  " --xi-target 1.0000001 --max-added 2 --out " + tmp.file("a3")) == 4);
}
