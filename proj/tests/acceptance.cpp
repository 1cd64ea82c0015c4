// Acceptance suite: one pass/fail line per criterion, nonzero exit if
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "passage/chain.hpp"
#include "passage/model_io.hpp"
#include "passage/monte_carlo.hpp"
#include "passage/qdist.hpp"
#include "passage/river.hpp"
#include "passage/solver.hpp"

namespace {

using Clock = std::chrono::steady_clock;

int g_failures = 0;

void report(int criterion, const std::string& name, bool ok, const std::string& detail = "") {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << "criterion " << criterion << ": " << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << '\n';
    if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

passage::Chain geometric_loop(double p) {
    return passage::make_chain(2, {1}, {}, {{0, 1, p, 1}, {0, 0, 1.0 - p, 1}});
}

std::string run_cli(const std::string& args) {
    const std::string cmd = std::string(PASSAGE_CLI_PATH) + " " + args + " 2>/dev/null";
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return out;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
    pclose(pipe);
    return out;
}

// 1. Closed-form geometric loops, within 1e-9, under a second.
void criterion_1() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::ostringstream detail;
    for (double p : {0.5, 0.1}) {
        passage::SolveResult r = passage::solve_all(geometric_loop(p));
        const double a_exact = 1.0 / p;
        const double b_exact = (2.0 - p) / (p * p);
        const double d_exact = std::sqrt(b_exact - a_exact * a_exact);
        ok = ok && std::abs(r.s[0] - 1.0) < 1e-9 && std::abs(*r.a[0] - a_exact) < 1e-9 &&
             std::abs(*r.b[0] - b_exact) < 1e-9 && std::abs(*r.d[0] - d_exact) < 1e-9;
        detail << "p=" << p << " A=" << *r.a[0] << " B=" << *r.b[0] << " D=" << *r.d[0] << "; ";
    }
    const double elapsed = seconds_since(t0);
    ok = ok && elapsed < 1.0;
    detail << elapsed << " s";
    report(1, "geometric loop closed forms within 1e-9", ok, detail.str());
}

// 2. Conditioning on success in the filtered model, within 1e-12.
void criterion_2() {
    passage::Chain c =
        passage::make_chain(3, {1}, {2}, {{0, 1, 0.5, 1}, {0, 2, 0.5, 3}});
    passage::SolveResult r = passage::solve_all(c);
    const bool ok = std::abs(r.s[0] - 0.5) < 1e-12 && r.a[0] && std::abs(*r.a[0] - 1.0) < 1e-12 &&
                    r.d[0] && std::abs(*r.d[0]) < 1e-12;
    std::ostringstream detail;
    detail << "s=" << r.s[0] << " A=" << *r.a[0] << " D=" << *r.d[0];
    report(2, "filtered model conditions on successful episodes", ok, detail.str());
}

// 3. 100 random acyclic chains vs exhaustive trajectory enumeration.
void criterion_3() {
    const auto t0 = Clock::now();
    std::mt19937 rng(20250823);
    bool ok = true;
    double worst = 0.0;

    struct Exact {
        long double s = 0, m1 = 0, m2 = 0;
    };
    // Recursive path enumeration, long double accumulators.
    auto enumerate = [](const passage::Chain& c, int start) {
        Exact acc;
        auto dfs = [&](auto&& self, int x, long double prob, long long time) -> void {
            if (c.is_goal(x)) {
                const long double t = static_cast<long double>(time);
                acc.s += prob;
                acc.m1 += prob * t;
                acc.m2 += prob * t * t;
                return;
            }
            if (c.is_fail(x)) return;
            for (const auto& e : c.out[x]) self(self, e.to, prob * e.prob, time + e.time);
        };
        dfs(dfs, start, 1.0L, 0);
        return acc;
    };

    std::uniform_int_distribution<int> tau_dist(1, 5);
    std::uniform_real_distribution<double> w_dist(0.1, 1.0);
    for (int trial = 0; trial < 100 && ok; ++trial) {
        // Random DAG over up to 12 states; the last few states are terminal.
        const int n = std::uniform_int_distribution<int>(3, 12)(rng);
        const int n_terminal = std::uniform_int_distribution<int>(2, std::min(3, n - 1))(rng);
        std::vector<int> goals{n - 1}, fails;
        for (int x = n - n_terminal; x < n - 1; ++x)
            (std::uniform_int_distribution<int>(0, 1)(rng) ? goals : fails).push_back(x);
        std::vector<std::tuple<int, int, double, int>> edges;
        for (int x = 0; x < n - n_terminal; ++x) {
            std::vector<int> targets;
            for (int y = x + 1; y < n; ++y) targets.push_back(y);
            std::shuffle(targets.begin(), targets.end(), rng);
            targets.resize(
                std::uniform_int_distribution<int>(1, std::min<int>(3, targets.size()))(rng));
            std::vector<double> w(targets.size());
            double sum = 0.0;
            for (double& v : w) sum += (v = w_dist(rng));
            for (std::size_t k = 0; k < targets.size(); ++k)
                edges.emplace_back(x, targets[k], w[k] / sum, tau_dist(rng));
        }
        passage::Chain c = passage::make_chain(n, goals, fails, edges);

        passage::SolveConfig cfg;
        cfg.tolerance = 0.0;  // exact fixed point on a DAG
        passage::SolveResult r = passage::solve_all(c, cfg);
        for (int x = 0; x < n; ++x) {
            Exact e = enumerate(c, x);
            auto rel_err = [](double got, long double want) {
                return std::abs(got - static_cast<double>(want)) /
                       std::max(1.0, std::abs(static_cast<double>(want)));
            };
            worst = std::max(worst, rel_err(r.s[x], e.s));
            if (e.s > passage::kSuccessFloor) {
                worst = std::max(worst, rel_err(*r.a[x], e.m1 / e.s));
                worst = std::max(worst, rel_err(*r.b[x], e.m2 / e.s));
            }
            if (worst > 1e-12) {
                ok = false;
                break;
            }
        }
    }
    const double elapsed = seconds_since(t0);
    ok = ok && elapsed < 10.0;
    std::ostringstream detail;
    detail << "worst relative error " << worst << ", " << elapsed << " s";
    report(3, "100 acyclic chains match trajectory enumeration within 1e-12", ok, detail.str());
}

// 4. Truncated q-moments reproduce s, A, B on the river model.
void criterion_4(const passage::Chain& river, const passage::SolveResult& dp) {
    const long t_max = passage::choose_horizon(river, dp.s, 1e-8);
    auto moments = passage::q_moments(river, t_max);

    // 10 states with meaningful success mass, spread over the index range.
    std::vector<int> samples;
    for (int x = 0; x < river.num_states && static_cast<int>(samples.size()) < 10; ++x)
        if (!river.is_terminal(x) && dp.s[x] > 1e-6 && x % 47 == 0) samples.push_back(x);
    for (int x = 0; x < river.num_states && static_cast<int>(samples.size()) < 10; ++x)
        if (!river.is_terminal(x) && dp.s[x] > 1e-6 &&
            std::find(samples.begin(), samples.end(), x) == samples.end())
            samples.push_back(x);

    bool ok = samples.size() == 10;
    double worst = 0.0;
    for (int x : samples) {
        const double s_q = moments[x].mass;
        const double a_q = moments[x].mean_numerator / dp.s[x];
        const double b_q = moments[x].second_numerator / dp.s[x];
        worst = std::max(worst, std::abs(s_q - dp.s[x]));
        worst = std::max(worst, std::abs(a_q - *dp.a[x]) / std::max(1.0, *dp.a[x]));
        worst = std::max(worst, std::abs(b_q - *dp.b[x]) / std::max(1.0, *dp.b[x]));
    }
    ok = ok && worst < 1e-6;
    std::ostringstream detail;
    detail << "t_max=" << t_max << ", worst error " << worst;
    report(4, "distribution oracle reproduces s, A, B within 1e-6", ok, detail.str());
}

// 5. Monte Carlo agrees with the DP solution within 4 standard errors.
void criterion_5(const passage::Chain& river, const passage::SolveResult& dp,
                 const passage::Layout& layout) {
    const auto t0 = Clock::now();
    // Five starts on the west side, spread across rows and columns.
    std::vector<int> starts = {layout.state_at(0, 5), layout.state_at(3, 15),
                               layout.state_at(5, 25), layout.state_at(8, 30),
                               layout.state_at(2, 34)};
    bool ok = true;
    double worst_z = 0.0;
    for (int x : starts) {
        passage::McEstimate est = passage::estimate(river, x, 200000, 20250823);
        const double z_s = est.se_s > 0 ? std::abs(est.s_hat - dp.s[x]) / est.se_s : 0.0;
        ok = ok && z_s <= 4.0 && est.a_hat.has_value();
        if (est.a_hat && est.se_a && *est.se_a > 0) {
            const double z_a = std::abs(*est.a_hat - *dp.a[x]) / *est.se_a;
            ok = ok && z_a <= 4.0;
            worst_z = std::max(worst_z, z_a);
        }
        worst_z = std::max(worst_z, z_s);
    }
    const double elapsed = seconds_since(t0);
    ok = ok && elapsed < 30.0;
    std::ostringstream detail;
    detail << "worst |z| " << worst_z << ", " << elapsed << " s";
    report(5, "Monte Carlo oracle within 4 standard errors", ok, detail.str());
}

// 6. Mean success east of the port is far below the western mean.
void criterion_6(const passage::Chain& river, const passage::SolveResult& dp,
                 const passage::Layout& layout, int port_col) {
    double east = 0.0, west = 0.0;
    int n_east = 0, n_west = 0;
    for (int x = 0; x < river.num_states; ++x) {
        if (river.is_terminal(x)) continue;
        const int col = layout.cell_of_state[x].second;
        if (col > port_col) {
            east += dp.s[x];
            ++n_east;
        } else if (col < port_col) {
            west += dp.s[x];
            ++n_west;
        }
    }
    const double mean_east = east / n_east, mean_west = west / n_west;
    const bool ok = mean_east < 0.2 * mean_west;
    std::ostringstream detail;
    detail << "mean s east " << mean_east << " vs west " << mean_west;
    report(6, "success depressed east of the port (< 0.2x west)", ok, detail.str());
}

// 7. 100 fixed sweeps agree with the residual-converged solution.
void criterion_7(const passage::Chain& river, const passage::SolveResult& dp) {
    passage::SolveConfig cfg;
    cfg.max_iterations = 100;
    cfg.fixed_iterations = true;
    auto [s100, stats] = passage::solve_success(river, cfg);
    double diff = 0.0;
    for (int x = 0; x < river.num_states; ++x) diff = std::max(diff, std::abs(s100[x] - dp.s[x]));
    const bool ok = diff < 1e-3;
    std::ostringstream detail;
    detail << "sup-norm diff " << diff << ", residual after 100 sweeps " << stats.residual;
    report(7, "100-iteration protocol within 1e-3 of converged s", ok, detail.str());
}

// 8. Byte-determinism of solve, heatmap and seeded simulate.
void criterion_8() {
    char tmpl[] = "/tmp/passage_acceptance_XXXXXX";
    if (!mkdtemp(tmpl)) {
        report(8, "deterministic CLI output", false, "cannot create temp dir");
        return;
    }
    const std::string dir = tmpl;
    const std::string model = dir + "/river.json";
    const std::string csv = dir + "/solve.csv";
    run_cli("river --out " + model);

    const std::string solve1 = run_cli("solve " + model);
    const std::string solve2 = run_cli("solve " + model);
    {
        std::ofstream f(csv);
        f << solve1;
    }
    const std::string hm1 = run_cli("heatmap " + csv + " --field D");
    const std::string hm2 = run_cli("heatmap " + csv + " --field D");
    const std::string sim1 = run_cli("simulate " + model + " --state 0 --episodes 5000 --seed 7");
    const std::string sim2 = run_cli("simulate " + model + " --state 0 --episodes 5000 --seed 7");

    const bool ok = !solve1.empty() && solve1 == solve2 && !hm1.empty() && hm1 == hm2 &&
                    !sim1.empty() && sim1 == sim2;
    report(8, "solve, heatmap and seeded simulate are byte-identical", ok);
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();

    passage::RiverConfig river_cfg;
    auto [river, layout] = passage::build_river(river_cfg);
    passage::SolveResult dp = passage::solve_all(river);

    criterion_4(river, dp);
    criterion_5(river, dp, layout);
    criterion_6(river, dp, layout, river_cfg.port_col);
    criterion_7(river, dp);
    criterion_8();

    if (g_failures > 0) {
        std::cout << g_failures << " criteria FAILED\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
