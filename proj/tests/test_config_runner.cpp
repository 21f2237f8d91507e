#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "apmcf/csv.hpp"
#include "apmcf/config.hpp"
#include "apmcf/runner.hpp"

using namespace apmcf;
namespace fs = std::filesystem;

namespace {
std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(APMCF_CLI) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

fs::path unique_dir(const std::string& tag) {
    auto d = fs::temp_directory_path() / ("apmcf_test_" + tag);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}
}  // namespace

TEST_CASE("configuration parsing") {
    SECTION("minimal scenario fills the documented defaults") {
        auto cfg = parse_config("surface.radius = 1.0\n");
        CHECK(cfg.kind == AmbientKind::Euclidean);
        CHECK(cfg.n_theta == 48);
        CHECK(cfg.resolved_n_phi() == 96);
        CHECK(cfg.global_term == GlobalTerm::H0);
        CHECK(cfg.cfl == 0.2);
        CHECK(cfg.stop_umbilic_tol == 1e-9);
        CHECK(cfg.B1 == 2.0);
        CHECK(cfg.B2 == 100.0);
        CHECK(cfg.fit_window == 0.6);
        CHECK(cfg.cadence == 10);
    }
    SECTION("comments, spacing, repeated modes") {
        auto cfg = parse_config(
            "# a scenario\n"
            "surface.radius = 2.0   # inline comment\n"
            "surface.mode = 2 0 0.05\n"
            "surface.mode = 3 -1 0.01\n"
            "\n");
        CHECK(cfg.radius == 2.0);
        REQUIRE(cfg.modes.size() == 2);
        CHECK(cfg.modes[1].l == 3);
        CHECK(cfg.modes[1].m == -1);
    }
    SECTION("negative mass is rejected with the offending constraint") {
        try {
            parse_config("ambient.kind = schwarzschild\nambient.m = -1\n");
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            bool found = false;
            for (const auto& i : e.issues) found |= i.find("ambient.m") != std::string::npos;
            CHECK(found);
        }
    }
    SECTION("unknown keys are named with their line") {
        try {
            parse_config("surface.radius = 1\nflow.scheme = rk4\n");
            FAIL("expected UnknownKeyError");
        } catch (const UnknownKeyError& e) {
            REQUIRE(e.issues.size() == 1);
            CHECK(e.issues[0].find("line 2") != std::string::npos);
            CHECK(e.issues[0].find("flow.scheme") != std::string::npos);
        }
    }
    SECTION("malformed lines are parse errors with line numbers") {
        try {
            parse_config("surface.radius\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            REQUIRE(e.issues.size() == 1);
            CHECK(e.issues[0].find("line 1") != std::string::npos);
        }
    }
    SECTION("round trip: serialize then reparse gives an identical config") {
        auto cfg = parse_config(
            "ambient.kind = schwarzschild\n"
            "ambient.m = 1.5\n"
            "ambient.perturbation = axial_deviatoric\n"
            "ambient.beta = 0.07\n"
            "ambient.r_cut = 2\n"
            "ambient.r_inner = 2.5\n"
            "surface.center = 0.1 -0.2 0.3\n"
            "surface.radius = 10\n"
            "surface.mode = 1 0 0.3\n"
            "grid.n_theta = 32\n"
            "flow.cfl = 0.25\n"
            "flow.t_end = 123.5\n"
            "analysis.B1 = 3\n"
            "output.directory = some/dir\n");
        auto again = parse_config(serialize_config(cfg));
        CHECK(again == cfg);
    }
    SECTION("perturbed metric requires r_inner above the cutoff") {
        CHECK_THROWS_AS(parse_config("ambient.kind = schwarzschild\n"
                                     "ambient.perturbation = axial_deviatoric\n"
                                     "ambient.beta = 0.1\n"
                                     "ambient.r_cut = 2\n"
                                     "surface.radius = 10\n"),
                        ValidationError);  // default r_inner = 1 < r_cut
    }
}

TEST_CASE("initial surface builder") {
    SECTION("plain sphere has vanishing traceless form") {
        auto cfg = parse_config("surface.radius = 1\ngrid.n_theta = 16\n");
        auto s = build_initial_surface(cfg);
        CHECK(std::abs(s.diagnostics.int_aring2) < 1e-10);
        CHECK(s.diagnostics.min_H == Catch::Approx(2.0).margin(1e-10));
    }
    SECTION("quadrupole smallness scales quadratically with the amplitude") {
        auto c1 = parse_config("surface.radius = 1\ngrid.n_theta = 16\nsurface.mode = 2 0 0.05\n");
        auto c2 = parse_config("surface.radius = 1\ngrid.n_theta = 16\nsurface.mode = 2 0 0.025\n");
        auto s1 = build_initial_surface(c1);
        auto s2 = build_initial_surface(c2);
        CHECK(s1.diagnostics.int_aring2 > 0.0);
        CHECK(std::abs(s1.diagnostics.int_aring2 / s2.diagnostics.int_aring2 - 4.0) <
              0.02 * 4.0);
    }
    SECTION("Schwarzschild coordinate sphere starts inside the expansion band") {
        auto cfg = parse_config(
            "ambient.kind = schwarzschild\nambient.m = 1\nsurface.radius = 10\n"
            "grid.n_theta = 16\n");
        auto s = build_initial_surface(cfg);
        CHECK(std::abs(s.diagnostics.min_H - (0.2 - 0.04)) < 10.0 * 1e-3);
    }
}

TEST_CASE("CSV round trips") {
    auto dir = unique_dir("csv");
    auto grid = GridSpec::create(16, 32);
    auto amb = AmbientMetric::euclidean();
    auto s = RadialGraph::sphere(grid, Eigen::Vector3d::Zero(), 1.0);
    auto first = first_fundamental(s, amb);
    auto second = second_fundamental(s, amb, first);
    const auto path = (dir / "surface.csv").string();
    write_surface_csv(path, s, first, second);
    auto table = read_csv(path);
    REQUIRE(table.rows() == grid->size());
    CHECK(table.col("rho")[17] == 1.0);  // 17 significant digits survive
    CHECK(table.col("H")[3] == Catch::Approx(2.0).margin(1e-11));
    const std::string text = slurp(path);
    CHECK(text.find("\r") == std::string::npos);  // LF endings
    CHECK(text.rfind(surface_csv_header(), 0) == 0);
}

TEST_CASE("execute writes the documented artifacts") {
    auto dir = unique_dir("exec");
    auto cfg = parse_config(
        "surface.radius = 1\nsurface.mode = 2 0 0.02\ngrid.n_theta = 16\n"
        "flow.t_end = 20\n");
    ExecOptions opt;
    opt.out_dir = (dir / "run").string();
    opt.quiet = true;
    std::ostringstream log;
    auto rc = execute(cfg, opt, log);
    CHECK(rc == ExitCode::Converged);
    for (const char* f :
         {"run.csv", "surface_final.csv", "analysis.csv", "analysis.txt", "config.cfg"})
        CHECK(fs::exists(dir / "run" / f));
    const std::string summary = slurp((dir / "run" / "analysis.txt").string());
    CHECK(summary.find("rate") != std::string::npos);

    SECTION("identical configs give byte-identical artifacts") {
        ExecOptions opt2 = opt;
        opt2.out_dir = (dir / "run2").string();
        std::ostringstream log2;
        CHECK(execute(cfg, opt2, log2) == ExitCode::Converged);
        for (const char* f : {"run.csv", "surface_final.csv", "analysis.csv"})
            CHECK(slurp((dir / "run" / f).string()) == slurp((dir / "run2" / f).string()));
    }
    SECTION("analyze recomputes from the stored artifacts") {
        std::ostringstream log3;
        CHECK(analyze_directory((dir / "run").string(), log3) == ExitCode::Converged);
        CHECK(log3.str().find("best-fit sphere") != std::string::npos);
    }
}

TEST_CASE("command line interface") {
    const std::string scen = std::string(APMCF_SCENARIOS);
    SECTION("check accepts every shipped scenario") {
        for (const char* f :
             {"euclidean_quadrupole.cfg", "euclidean_quadrupole_vpmcf.cfg",
              "schwarzschild_cmc.cfg", "schwarzschild_perturbed.cfg", "unit_sphere.cfg",
              "geodesic_sphere_s3.cfg", "geodesic_sphere_h3.cfg", "schwarzschild_sphere.cfg",
              "nonpositive_h.cfg", "zero_budget.cfg"})
            CHECK(run_cli("check " + scen + "/" + std::string(f)) == 0);
    }
    SECTION("invalid configs exit with the documented codes") {
        auto dir = unique_dir("cli_bad");
        {
            std::ofstream os(dir / "bad_value.cfg");
            os << "ambient.kind = schwarzschild\nambient.m = -1\nsurface.radius = 10\n";
        }
        CHECK(run_cli("check " + (dir / "bad_value.cfg").string()) == 11);
        {
            std::ofstream os(dir / "unknown.cfg");
            os << "flow.scheme = rk4\n";
        }
        CHECK(run_cli("check " + (dir / "unknown.cfg").string()) == 12);
        {
            std::ofstream os(dir / "broken.cfg");
            os << "surface.radius\n";
        }
        CHECK(run_cli("check " + (dir / "broken.cfg").string()) == 10);
        CHECK(run_cli("check " + (dir / "missing.cfg").string()) == 13);
    }
    SECTION("zero time budget: exit 2 and header-only time series") {
        auto dir = unique_dir("cli_zero");
        CHECK(run_cli("run " + scen + "/zero_budget.cfg --out " + (dir / "z").string() +
                      " --quiet") == 2);
        const std::string csv = slurp((dir / "z" / "run.csv").string());
        CHECK(csv == std::string(timeseries_csv_header()) + "\n");
        CHECK(fs::exists(dir / "z" / "surface_final.csv"));
    }
    SECTION("nonpositive integral of H: exit 5") {
        auto dir = unique_dir("cli_nonpos");
        CHECK(run_cli("run " + scen + "/nonpositive_h.cfg --out " + (dir / "n").string() +
                      " --quiet") == 5);
    }
    SECTION("a stationary scenario runs to convergence and analyzes back") {
        auto dir = unique_dir("cli_run");
        // small stationary case keeps the CLI test fast
        {
            std::ofstream os(dir / "sphere.cfg");
            os << "surface.radius = 1\ngrid.n_theta = 16\nflow.t_end = 1\n";
        }
        CHECK(run_cli("run " + (dir / "sphere.cfg").string() + " --out " +
                      (dir / "out").string() + " --quiet") == 0);
        CHECK(run_cli("analyze " + (dir / "out").string()) == 0);
    }
}
