// passage command-line tool: generate river models, solve for success
// probability and duration statistics, query the exact completion-time
// distribution, simulate episodes and export heatmaps.
//
// Exit codes: 0 ok, 1 usage/parse error, 2 validation failure,
// 3 non-convergence.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "passage/chain.hpp"
#include "passage/model_io.hpp"
#include "passage/monte_carlo.hpp"
#include "passage/qdist.hpp"
#include "passage/river.hpp"
#include "passage/solver.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNoConvergence = 3;

// Writes to `path` or stdout when the path is empty.
class OutputTarget {
public:
    explicit OutputTarget(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw std::runtime_error("cannot open output file: " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

bool parse_cell(const std::string& text, int& row, int& col) {
    std::stringstream ss(text);
    char comma = 0;
    return (ss >> row >> comma >> col) && comma == ',' && ss.eof();
}

passage::ModelFile load_and_validate(const std::string& path) {
    passage::ModelFile mf = passage::load_model(path);
    auto diags = passage::validate_chain(mf.chain);
    bool fatal = passage::has_errors(diags);
    for (const auto& d : diags)
        std::cerr << (d.severity == passage::Diagnostic::Severity::error ? "error: " : "warning: ")
                  << d.message << '\n';
    if (fatal) throw std::invalid_argument("model failed validation");
    return mf;
}

struct SolveFlags {
    double tolerance = 1e-12;
    int max_iterations = 10000;
    std::optional<int> iterations;  // forces the exact-count protocol

    passage::SolveConfig config() const {
        passage::SolveConfig cfg;
        cfg.tolerance = tolerance;
        cfg.max_iterations = max_iterations;
        if (iterations) {
            cfg.max_iterations = *iterations;
            cfg.fixed_iterations = true;
        }
        return cfg;
    }
};

int run_river(const passage::RiverConfig& cfg, const std::string& out_path,
              const std::string& layout_csv_path) {
    auto [chain, layout] = passage::build_river(cfg);
    OutputTarget out(out_path);
    passage::write_model(out.stream(), chain, &layout);
    if (!layout_csv_path.empty()) {
        std::ofstream f(layout_csv_path);
        if (!f) throw std::runtime_error("cannot open output file: " + layout_csv_path);
        passage::write_layout_csv(f, layout);
    }
    return kExitOk;
}

int run_solve(const std::string& model_path, const SolveFlags& flags, const std::string& out_path) {
    passage::ModelFile mf = load_and_validate(model_path);
    passage::SolveResult result = passage::solve_all(mf.chain, flags.config());
    OutputTarget out(out_path);
    passage::write_solve_csv(out.stream(), result, mf.layout ? &*mf.layout : nullptr);
    if (!result.converged()) {
        std::cerr << "warning: solver did not converge within the iteration cap\n";
        return kExitNoConvergence;
    }
    return kExitOk;
}

int run_qdist(const std::string& model_path, int state, int t_max, const std::string& out_path) {
    passage::ModelFile mf = load_and_validate(model_path);
    if (state < 0 || state >= mf.chain.num_states)
        throw std::invalid_argument("state out of range");
    passage::QTable table = passage::q_distribution(mf.chain, t_max);
    passage::QMoments m = passage::truncated_moments(table, state);
    auto [s, stats] = passage::solve_success(mf.chain);

    OutputTarget out(out_path);
    out.stream() << "T,q\n";
    for (int T = 0; T <= t_max; ++T)
        out.stream() << T << ',' << passage::format_real(table.values[T][state]) << '\n';
    out.stream() << "# mass " << passage::format_real(m.mass) << " s "
                 << passage::format_real(s[state]) << " defect "
                 << passage::format_real(s[state] - m.mass) << '\n';
    return stats.converged ? kExitOk : kExitNoConvergence;
}

int run_simulate(const std::string& model_path, int state, long episodes, std::uint64_t seed,
                 long step_cap, const std::string& csv_path) {
    passage::ModelFile mf = load_and_validate(model_path);
    if (state < 0 || state >= mf.chain.num_states)
        throw std::invalid_argument("state out of range");

    passage::McEstimate est = passage::estimate(mf.chain, state, episodes, seed, step_cap);
    auto opt = [](const std::optional<double>& v) {
        return v ? passage::format_real(*v) : std::string("NA");
    };
    std::cout << "n_total " << est.n_total << '\n'
              << "n_success " << est.n_success << '\n'
              << "n_truncated " << est.n_truncated << '\n'
              << "s_hat " << passage::format_real(est.s_hat) << '\n'
              << "a_hat " << opt(est.a_hat) << '\n'
              << "d_hat " << opt(est.d_hat) << '\n'
              << "se_s " << passage::format_real(est.se_s) << '\n'
              << "se_a " << opt(est.se_a) << '\n'
              << "seed " << est.seed << '\n';

    if (!csv_path.empty()) {
        std::ofstream f(csv_path);
        if (!f) throw std::runtime_error("cannot open output file: " + csv_path);
        f << "episode,successful,truncated,total_time\n";
        for (long i = 0; i < episodes; ++i) {
            passage::EpisodeRng rng(seed, static_cast<std::uint64_t>(i));
            passage::Episode ep = passage::simulate_episode(mf.chain, state, rng, step_cap);
            f << i << ',' << (ep.successful ? 1 : 0) << ',' << (ep.truncated ? 1 : 0) << ','
              << ep.total_time << '\n';
        }
    }
    return kExitOk;
}

int run_heatmap(const std::string& csv_path, const std::string& field, const std::string& out_path) {
    std::ifstream f(csv_path);
    if (!f) throw std::runtime_error("cannot open CSV file: " + csv_path);
    auto rows = passage::read_solve_csv(f);
    OutputTarget out(out_path);
    passage::write_heatmap_pgm(out.stream(), rows, field);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Episodic Markov chain success probability and duration statistics"};
    app.require_subcommand(1);

    // river
    auto* river = app.add_subcommand("river", "Generate a river gridworld model");
    passage::RiverConfig river_cfg;
    std::string river_port = "0,35";
    std::vector<std::string> river_obstacles;
    std::string river_out, river_layout_csv;
    river->add_option("--width", river_cfg.width, "Grid columns");
    river->add_option("--height", river_cfg.height, "Grid rows");
    river->add_option("--port", river_port, "Port cell as row,col");
    river->add_option("--obstacle", river_obstacles, "Island cell as row,col (repeatable)");
    river->add_option("--p-forward", river_cfg.p_forward_each, "Probability of each forward move");
    river->add_option("--p-back", river_cfg.p_back, "Probability of the backward move");
    river->add_option("--t-diag", river_cfg.t_diag, "Time units for a diagonal step");
    river->add_option("--t-forward", river_cfg.t_forward, "Time units for the straight step");
    river->add_option("--t-back", river_cfg.t_back, "Time units for the backward step");
    river->add_option("--out", river_out, "Model output path (default stdout)");
    river->add_option("--layout-csv", river_layout_csv, "Also write the state layout as CSV");

    // solve
    auto* solve = app.add_subcommand("solve", "Solve s/A/B/D for a model");
    std::string solve_model, solve_out;
    SolveFlags solve_flags;
    int solve_iterations = 0;
    solve->add_option("model", solve_model, "Model file path")->required();
    solve->add_option("--tolerance", solve_flags.tolerance, "Sup-norm residual threshold");
    solve->add_option("--max-iterations", solve_flags.max_iterations,
                      "Iteration cap for the residual rule");
    solve->add_option("--iterations", solve_iterations,
                      "Run exactly this many sweeps per phase instead of the residual rule");
    solve->add_option("--out", solve_out, "CSV output path (default stdout)");

    // qdist
    auto* qdist = app.add_subcommand("qdist", "Exact completion-time distribution for one state");
    std::string qdist_model, qdist_out;
    int qdist_state = 0, qdist_tmax = 100;
    qdist->add_option("model", qdist_model, "Model file path")->required();
    qdist->add_option("--state", qdist_state, "Start state")->required();
    qdist->add_option("--tmax", qdist_tmax, "Horizon (inclusive)");
    qdist->add_option("--out", qdist_out, "CSV output path (default stdout)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo episode estimates");
    std::string sim_model, sim_csv;
    int sim_state = 0;
    long sim_episodes = 10000, sim_step_cap = 1000000;
    std::uint64_t sim_seed = 0;
    simulate->add_option("model", sim_model, "Model file path")->required();
    simulate->add_option("--state", sim_state, "Start state")->required();
    simulate->add_option("--episodes", sim_episodes, "Number of episodes");
    simulate->add_option("--seed", sim_seed, "RNG seed");
    simulate->add_option("--step-cap", sim_step_cap, "Per-episode step cap");
    simulate->add_option("--csv", sim_csv, "Also write per-episode CSV to this path");

    // heatmap
    auto* heatmap = app.add_subcommand("heatmap", "Render a solve CSV field as a PGM image");
    std::string hm_csv, hm_field = "s", hm_out;
    heatmap->add_option("csv", hm_csv, "Solve CSV path")->required();
    heatmap->add_option("--field", hm_field, "Field to render: s, A, B or D");
    heatmap->add_option("--out", hm_out, "PGM output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (river->parsed()) {
            if (!parse_cell(river_port, river_cfg.port_row, river_cfg.port_col)) {
                std::cerr << "error: --port expects row,col\n";
                return kExitUsage;
            }
            for (const auto& o : river_obstacles) {
                int r = 0, c = 0;
                if (!parse_cell(o, r, c)) {
                    std::cerr << "error: --obstacle expects row,col\n";
                    return kExitUsage;
                }
                river_cfg.obstacles.insert({r, c});
            }
            return run_river(river_cfg, river_out, river_layout_csv);
        }
        if (solve->parsed()) {
            if (solve->count("--iterations")) solve_flags.iterations = solve_iterations;
            return run_solve(solve_model, solve_flags, solve_out);
        }
        if (qdist->parsed()) return run_qdist(qdist_model, qdist_state, qdist_tmax, qdist_out);
        if (simulate->parsed())
            return run_simulate(sim_model, sim_state, sim_episodes, sim_seed, sim_step_cap,
                                sim_csv);
        if (heatmap->parsed()) return run_heatmap(hm_csv, hm_field, hm_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
