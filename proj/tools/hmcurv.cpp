#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hmcurv/app.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Prescribed m-th mean curvature radial graphs in space forms"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int resolution = 0;
    int m = 0;
    int K = 0;
    std::string psi;
    std::uint64_t seed = 0;
    std::string strict_psi;
    auto* o_config = app.add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
    auto* o_out = app.add_option("--out", out_dir, "output directory");
    auto* o_res = app.add_option("--resolution", resolution, "grid resolution (nodes on S^1, latitude rings on S^2)");
    auto* o_m = app.add_option("--m", m, "curvature order");
    auto* o_K = app.add_option("--K", K, "sectional curvature, -1 or 1");
    auto* o_psi = app.add_option("--psi", psi, "prescription psi(rho, theta, phi)");
    auto* o_seed = app.add_option("--seed", seed, "seed for random test graphs");
    auto* o_strict = app.add_option("--strict-psi", strict_psi, "refuse psi failing the barrier/monotonicity checks")
                         ->check(CLI::IsMember({"true", "false"}));
    (void)o_config;

    std::vector<std::string> files;
    auto* solve = app.add_subcommand("solve", "solve for the radial graph and write solution.csv, report.json");
    auto* check = app.add_subcommand("check-psi", "check the conditions on psi and write conditions.json");
    auto* verify = app.add_subcommand("verify-identities", "run the identity suites and write identities.json");
    auto* compare = app.add_subcommand("compare", "fit the tanh scaling between two solutions, write scaling.json");
    compare->add_option("solutions", files, "two solution.csv files")->expected(0, 2);
    for (auto* sub : {solve, check, verify, compare})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : hmcurv::exit_code::config;
    }

    hmcurv::RunConfig cfg;
    try {
        if (!config_path.empty())
            hmcurv::apply_ini(cfg, config_path);
    } catch (const hmcurv::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hmcurv::exit_code::config;
    }
    if (solve->parsed())
        cfg.mode = hmcurv::Mode::Solve;
    else if (check->parsed())
        cfg.mode = hmcurv::Mode::CheckPsi;
    else if (verify->parsed())
        cfg.mode = hmcurv::Mode::VerifyIdentities;
    else
        cfg.mode = hmcurv::Mode::Compare;

    if (o_out->count())
        cfg.out_dir = out_dir;
    if (o_res->count())
        cfg.resolution = resolution;
    if (o_m->count())
        cfg.m = m;
    if (o_K->count())
        cfg.K = K;
    if (o_psi->count()) {
        cfg.psi = psi;
        cfg.manufactured_z.clear();
    }
    if (o_seed->count())
        cfg.seed = seed;
    if (o_strict->count())
        cfg.strict_psi = strict_psi == "true";
    if (files.size() == 2) {
        cfg.solution_a = files[0];
        cfg.solution_b = files[1];
    } else if (!files.empty()) {
        std::cerr << "error: compare needs two solution files\n";
        return hmcurv::exit_code::config;
    }
    return hmcurv::run(cfg);
}
