#pragma once

// Model file (JSON), per-state result CSV and PGM heatmap I/O.
//
// Model schema:
//   num_states, goal_states, fail_states, edges: [{from,to,prob,time}]
//   optional mdp: {num_actions, mdp_transitions: [{from,action,to,prob}],
//                  policy: [{state,action,weight}], times: [{from,to,time}]}
//   optional layout: [{state,row,col}]
// When the mdp section is present the chain is produced by induce_chain
// and the top-level edges list may be empty.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "passage/chain.hpp"
#include "passage/river.hpp"
#include "passage/solver.hpp"

namespace passage {

struct ModelFile {
    Chain chain;
    std::optional<Layout> layout;
};

/// Shortest decimal representation that round-trips, capped at 10
/// significant digits for CSV output.
inline std::string format_real(double v, int sig_digits = 10) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", sig_digits, v);
    return buf;
}

inline nlohmann::json model_to_json(const Chain& chain, const Layout* layout = nullptr) {
    nlohmann::json j;
    j["num_states"] = chain.num_states;
    j["goal_states"] = nlohmann::json::array();
    j["fail_states"] = nlohmann::json::array();
    for (int x = 0; x < chain.num_states; ++x) {
        if (chain.is_goal(x)) j["goal_states"].push_back(x);
        if (chain.is_fail(x)) j["fail_states"].push_back(x);
    }
    j["edges"] = nlohmann::json::array();
    for (int x = 0; x < chain.num_states; ++x)
        for (const auto& e : chain.out[x])
            j["edges"].push_back({{"from", x}, {"to", e.to}, {"prob", e.prob}, {"time", e.time}});
    if (layout) {
        j["layout"] = nlohmann::json::array();
        for (std::size_t s = 0; s < layout->cell_of_state.size(); ++s)
            j["layout"].push_back({{"state", static_cast<int>(s)},
                                   {"row", layout->cell_of_state[s].first},
                                   {"col", layout->cell_of_state[s].second}});
    }
    return j;
}

inline void write_model(std::ostream& os, const Chain& chain, const Layout* layout = nullptr) {
    os << model_to_json(chain, layout).dump(2) << '\n';
}

inline ModelFile parse_model(const nlohmann::json& j) {
    ModelFile mf;
    const int n = j.at("num_states").get<int>();
    std::vector<int> goals = j.value("goal_states", std::vector<int>{});
    std::vector<int> fails = j.value("fail_states", std::vector<int>{});

    if (j.contains("mdp")) {
        const auto& jm = j.at("mdp");
        Mdp mdp;
        mdp.num_states = n;
        mdp.num_actions = jm.at("num_actions").get<int>();
        mdp.goal_states = goals;
        mdp.fail_states = fails;
        for (const auto& t : jm.at("mdp_transitions"))
            mdp.transitions.push_back({t.at("from").get<int>(), t.at("action").get<int>(),
                                       t.at("to").get<int>(), t.at("prob").get<double>()});
        Policy policy;
        for (const auto& p : jm.at("policy"))
            policy.entries.push_back({p.at("state").get<int>(), p.at("action").get<int>(),
                                      p.at("weight").get<double>()});
        std::map<std::pair<int, int>, int> times;
        for (const auto& t : jm.at("times"))
            times[{t.at("from").get<int>(), t.at("to").get<int>()}] = t.at("time").get<int>();
        mf.chain = induce_chain(mdp, policy, times);
    } else {
        std::vector<std::tuple<int, int, double, int>> edges;
        for (const auto& e : j.value("edges", nlohmann::json::array()))
            edges.emplace_back(e.at("from").get<int>(), e.at("to").get<int>(),
                               e.at("prob").get<double>(), e.at("time").get<int>());
        mf.chain = make_chain(n, goals, fails, edges);
    }

    if (j.contains("layout")) {
        Layout layout;
        layout.cell_of_state.resize(n, {-1, -1});
        for (const auto& cell : j.at("layout")) {
            const int s = cell.at("state").get<int>();
            const int r = cell.at("row").get<int>();
            const int c = cell.at("col").get<int>();
            if (s < 0 || s >= n) throw std::invalid_argument("layout state out of range");
            layout.cell_of_state[s] = {r, c};
            layout.state_of_cell[{r, c}] = s;
        }
        mf.layout = std::move(layout);
    }
    return mf;
}

inline ModelFile load_model(std::istream& is) {
    nlohmann::json j;
    is >> j;
    return parse_model(j);
}

inline ModelFile load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open model file: " + path);
    return load_model(f);
}

inline void write_layout_csv(std::ostream& os, const Layout& layout) {
    os << "state,row,col\n";
    for (std::size_t s = 0; s < layout.cell_of_state.size(); ++s)
        os << s << ',' << layout.cell_of_state[s].first << ','
           << layout.cell_of_state[s].second << '\n';
}

/// Per-state result CSV: state,row,col,s,A,B,D with NA for undefined
/// values and one diagnostics footer comment per phase.
inline void write_solve_csv(std::ostream& os, const SolveResult& r, const Layout* layout) {
    auto opt = [](const std::optional<double>& v) {
        return v ? format_real(*v) : std::string("NA");
    };
    os << "state,row,col,s,A,B,D\n";
    for (int x = 0; x < static_cast<int>(r.s.size()); ++x) {
        os << x << ',';
        if (layout && x < static_cast<int>(layout->cell_of_state.size()) &&
            layout->cell_of_state[x].first >= 0)
            os << layout->cell_of_state[x].first << ',' << layout->cell_of_state[x].second;
        else
            os << ',';
        os << ',' << format_real(r.s[x]) << ',' << opt(r.a[x]) << ',' << opt(r.b[x]) << ','
           << opt(r.d[x]) << '\n';
    }
    auto footer = [&](const char* name, const PhaseStats& st) {
        os << "# " << name << " residual " << format_real(st.residual) << " iterations "
           << st.iterations << (st.converged ? "" : " NOT-CONVERGED") << '\n';
    };
    footer("s", r.s_stats);
    footer("A", r.a_stats);
    footer("B", r.b_stats);
}

struct SolveCsvRow {
    int state = 0;
    std::optional<int> row, col;
    double s = 0.0;
    std::optional<double> a, b, d;
};

inline std::vector<SolveCsvRow> read_solve_csv(std::istream& is) {
    std::vector<SolveCsvRow> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // skip the column header
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        while (fields.size() < 7) fields.emplace_back();
        SolveCsvRow r;
        r.state = std::stoi(fields[0]);
        if (!fields[1].empty()) r.row = std::stoi(fields[1]);
        if (!fields[2].empty()) r.col = std::stoi(fields[2]);
        r.s = std::stod(fields[3]);
        auto opt = [](const std::string& f) -> std::optional<double> {
            if (f.empty() || f == "NA") return std::nullopt;
            return std::stod(f);
        };
        r.a = opt(fields[4]);
        r.b = opt(fields[5]);
        r.d = opt(fields[6]);
        rows.push_back(r);
    }
    return rows;
}

/// Plain-text PGM (P2) heatmap of one field over the layout grid.
/// field is "s", "A" (or "B") or "D"; s is scaled against a fixed
/// maximum of 1, other fields against their largest defined value.
/// Missing cells (obstacles) and NA values render as 0.
inline void write_heatmap_pgm(std::ostream& os, const std::vector<SolveCsvRow>& rows,
                              const std::string& field) {
    auto pick = [&](const SolveCsvRow& r) -> std::optional<double> {
        if (field == "s") return r.s;
        if (field == "A") return r.a;
        if (field == "B") return r.b;
        if (field == "D") return r.d;
        throw std::invalid_argument("unknown heatmap field: " + field);
    };
    pick(SolveCsvRow{});  // reject unknown fields before any work

    int width = 0, height = 0;
    for (const auto& r : rows) {
        if (!r.row || !r.col) throw std::invalid_argument("CSV has no layout columns");
        height = std::max(height, *r.row + 1);
        width = std::max(width, *r.col + 1);
    }
    if (width == 0 || height == 0) throw std::invalid_argument("empty CSV");

    double vmax = field == "s" ? 1.0 : 0.0;
    if (field != "s")
        for (const auto& r : rows)
            if (auto v = pick(r)) vmax = std::max(vmax, *v);

    std::vector<std::vector<int>> pixels(height, std::vector<int>(width, 0));
    for (const auto& r : rows) {
        auto v = pick(r);
        if (!v || vmax <= 0.0) continue;
        int p = static_cast<int>(std::lround(255.0 * *v / vmax));
        pixels[*r.row][*r.col] = std::clamp(p, 0, 255);
    }

    os << "P2\n" << width << ' ' << height << "\n255\n";
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) os << pixels[r][c] << (c + 1 < width ? ' ' : '\n');
    }
}

}  // namespace passage
