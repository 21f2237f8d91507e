// Command-line front end: run a scenario, validate a configuration, or
// re-analyze a stored run directory.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "apmcf/runner.hpp"

namespace {

int read_file(const std::string& path, std::string& out) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        std::cerr << "error: cannot open " << path << "\n";
        return static_cast<int>(apmcf::ExitCode::Io);
    }
    std::stringstream buf;
    buf << is.rdbuf();
    out = buf.str();
    return 0;
}

int parse_or_report(const std::string& text, apmcf::ScenarioConfig& cfg) {
    using namespace apmcf;
    try {
        cfg = parse_config(text);
        return 0;
    } catch (const ParseError& e) {
        std::cerr << "parse error:\n";
        for (const auto& i : e.issues) std::cerr << "  " << i << "\n";
        return static_cast<int>(ExitCode::ParseFailure);
    } catch (const UnknownKeyError& e) {
        std::cerr << "unknown keys:\n";
        for (const auto& i : e.issues) std::cerr << "  " << i << "\n";
        return static_cast<int>(ExitCode::UnknownKey);
    } catch (const ValidationError& e) {
        std::cerr << "invalid configuration:\n";
        for (const auto& i : e.issues) std::cerr << "  " << i << "\n";
        return static_cast<int>(ExitCode::ValidationFailure);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"constrained mean curvature flow laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir, run_dir;
    int cadence = -1;
    bool quiet = false;

    auto* run_cmd = app.add_subcommand("run", "run a scenario and write its artifacts");
    run_cmd->add_option("config", config_path, "scenario configuration file")->required();
    run_cmd->add_option("--out", out_dir, "output directory (overrides output.directory)");
    run_cmd->add_option("--cadence", cadence, "monitor cadence in steps (overrides output.cadence)");
    run_cmd->add_flag("--quiet", quiet, "suppress progress output");

    auto* check_cmd = app.add_subcommand("check", "validate a configuration and exit");
    check_cmd->add_option("config", config_path, "scenario configuration file")->required();

    auto* analyze_cmd =
        app.add_subcommand("analyze", "re-run the analysis on a stored run directory");
    analyze_cmd->add_option("run_dir", run_dir, "directory with run.csv / surface_final.csv")
        ->required();

    CLI11_PARSE(app, argc, argv);

    using namespace apmcf;
    if (run_cmd->parsed() || check_cmd->parsed()) {
        std::string text;
        if (int rc = read_file(config_path, text); rc != 0) return rc;
        ScenarioConfig cfg;
        if (int rc = parse_or_report(text, cfg); rc != 0) return rc;
        if (check_cmd->parsed()) {
            std::cout << "OK\n";
            return 0;
        }
        ExecOptions opt;
        if (!out_dir.empty()) opt.out_dir = out_dir;
        if (cadence > 0) opt.cadence = cadence;
        opt.quiet = quiet;
        return static_cast<int>(execute(cfg, opt, std::cout));
    }
    return static_cast<int>(analyze_directory(run_dir, std::cout));
}
