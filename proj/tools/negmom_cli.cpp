// Command-line front end: experiment sweeps, verification suites, exact
// oracles for a state file, and the asymptotic budget planner.
//
//   negmom run    --family noisy_bell --scheme neg --dims 5x5 --p 0.3
//                 --n-u 32,64,128 --n-m inf,50 --n-av 100 --seed 1 --out out.csv
//   negmom verify twirl|tables|nogo|variance
//   negmom oracle state.json
//   negmom plan   --dim 100 --eps 0.1
//
// Flags can also come from an INI-style config file via --config; command-line
// values override file values. NEG_SEED serves as the seed fallback.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "negmom/negmom.hpp"

namespace {

std::vector<std::pair<int, int>> parse_dims(const std::vector<std::string>& specs) {
    std::vector<std::pair<int, int>> dims;
    for (const auto& s : specs) {
        const auto x = s.find('x');
        if (x == std::string::npos) {
            dims.emplace_back(std::stoi(s), 0);
        } else {
            dims.emplace_back(std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1)));
        }
    }
    return dims;
}

std::vector<int> parse_shots(const std::vector<std::string>& specs) {
    std::vector<int> out;
    for (const auto& s : specs) out.push_back(s == "inf" ? 0 : std::stoi(s));
    return out;
}

void write_output(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    f << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-copy randomized-measurement estimation of negativity moments"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI config file; command-line flags override its values");

    // options shared by all subcommands
    std::string out_path, format = "csv";
    int threads = 0;
    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "master seed")->envname("NEG_SEED");
    app.add_option("--threads", threads, "round-level parallelism (0 = all cores)");
    app.add_option("--out", out_path, "output path (default stdout)");
    app.add_option("--format", format, "csv | jsonl");

    // ---- run ----
    auto* run = app.add_subcommand("run", "run an estimation sweep");
    run->fallthrough();
    std::string family = "noisy_bell", scheme = "neg", state_file;
    std::vector<std::string> dim_specs = {"3x3"}, nm_specs = {"inf"};
    std::vector<double> ps = {0.3};
    std::vector<int> nus = {100};
    int n_av = 100;
    bool timings = false;
    run->add_option("--family", family, "bell | noisy_bell | product | haar_pure | file");
    run->add_option("--state", state_file, "state JSON for --family file");
    run->add_option("--scheme", scheme,
                    "single | global | bilocal | bell | correlation | neg | neg_bell");
    run->add_option("--dims", dim_specs, "subsystem dimensions, e.g. 5x5 (comma separated)")
        ->delimiter(',');
    run->add_option("--p", ps, "white-noise levels for noisy_bell")->delimiter(',');
    run->add_option("--n-u", nus, "unitary rounds grid")->delimiter(',');
    run->add_option("--n-m", nm_specs, "shots per round grid; 'inf' = exact mode")
        ->delimiter(',');
    run->add_option("--n-av", n_av, "repetitions per grid point");
    run->add_flag("--timings", timings, "append wall-time column (breaks byte determinism)");

    // ---- verify ----
    auto* ver = app.add_subcommand("verify", "run a named golden suite");
    ver->fallthrough();
    std::string kind;
    ver->add_option("kind", kind, "twirl | tables | nogo | variance")->required();

    // ---- oracle ----
    auto* orc = app.add_subcommand("oracle", "print exact moments/negativity of a state file");
    std::string oracle_file;
    orc->add_option("state", oracle_file, "state JSON file")->required();

    // ---- plan ----
    auto* plan = app.add_subcommand("plan", "asymptotic budget for a target precision");
    long plan_dim = 100;
    double plan_eps = 0.1;
    plan->add_option("--dim", plan_dim, "total Hilbert-space dimension D")->required();
    plan->add_option("--eps", plan_eps, "target error")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            negmom::SweepSpec spec;
            spec.family = family;
            spec.state_file = state_file;
            spec.scheme = negmom::scheme_from_name(scheme);
            spec.dims = parse_dims(dim_specs);
            spec.noise = ps;
            spec.n_us = nus;
            spec.n_ms = parse_shots(nm_specs);
            spec.n_av = n_av;
            spec.seed = seed;
            spec.threads = threads;
            spec.timings = timings;
            const auto rows = negmom::run_sweep(spec);
            if (format == "csv")
                write_output(negmom::sweep_csv(rows, timings), out_path);
            else if (format == "jsonl")
                write_output(negmom::sweep_jsonl(rows, timings), out_path);
            else
                throw std::invalid_argument("unknown format: " + format);
        } else if (*ver) {
            const negmom::VerifyReport rep = negmom::verify(kind);
            rep.print(std::cout);
            return rep.pass() ? 0 : 1;
        } else if (*orc) {
            const negmom::DensityMatrix rho = negmom::load_state(oracle_file);
            nlohmann::json j;
            j["dim"] = rho.dim();
            j["purity"] = negmom::moment(rho, 2);
            j["moment3"] = negmom::moment(rho, 3);
            if (rho.bipartition()) {
                j["bipartition"] = {rho.bipartition()->first, rho.bipartition()->second};
                j["negativity_moment"] = negmom::negativity_moment(rho);
                j["log_negativity"] = negmom::log_negativity(rho);
                j["correlation_numerator"] = negmom::correlation_numerator(rho);
                j["fidelity_f2"] = negmom::fidelity_f2(rho);
            }
            std::cout << j.dump(2) << "\n";
        } else if (*plan) {
            const negmom::BudgetPlan p = negmom::asymptotic_requirements(plan_dim, plan_eps);
            std::cout << "n_m " << p.n_m << "\nn_u " << p.n_u << "\nn_total " << p.n_total
                      << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
