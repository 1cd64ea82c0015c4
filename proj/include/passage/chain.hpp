#pragma once

// Episodic MDP model types and the reduction to the policy-induced
// Markov chain with per-edge transition times.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace passage {

inline constexpr double kRowSumTol = 1e-9;
inline constexpr double kEdgeDropThreshold = 1e-15;

struct MdpTransition {
    int from = 0;
    int action = 0;
    int to = 0;
    double prob = 0.0;
};

/// Full episodic MDP: states 0..N-1, actions 0..A-1, transition kernel,
/// and the terminal partition (goal vs. fail).
struct Mdp {
    int num_states = 0;
    int num_actions = 0;
    std::vector<MdpTransition> transitions;
    std::vector<int> goal_states;
    std::vector<int> fail_states;
};

struct PolicyEntry {
    int state = 0;
    int action = 0;
    double weight = 0.0;
};

/// Stochastic policy pi(x,a); rows over non-terminal states must sum to 1.
struct Policy {
    std::vector<PolicyEntry> entries;
};

struct Edge {
    int to = 0;
    double prob = 0.0;
    int time = 1;  // integer time units, always >= 1
};

/// Policy-induced Markov chain. Terminal states (goal or fail) are
/// absorbing by omission: they carry no outgoing edges.
struct Chain {
    int num_states = 0;
    std::vector<std::vector<Edge>> out;  // out[x] sorted by target state
    std::vector<bool> goal;
    std::vector<bool> fail;

    bool is_terminal(int x) const { return goal[x] || fail[x]; }
    bool is_goal(int x) const { return goal[x]; }
    bool is_fail(int x) const { return fail[x]; }

    int max_edge_time() const {
        int m = 1;
        for (const auto& row : out)
            for (const auto& e : row) m = std::max(m, e.time);
        return m;
    }
};

struct Diagnostic {
    enum class Severity { error, warning };
    Severity severity = Severity::error;
    std::string message;
};

/// Assembles a Chain from explicit parts without repairing anything;
/// run validate_chain afterwards when the parts come from user input.
inline Chain make_chain(int num_states, const std::vector<int>& goal_states,
                        const std::vector<int>& fail_states,
                        const std::vector<std::tuple<int, int, double, int>>& edges) {
    if (num_states <= 0) throw std::invalid_argument("num_states must be positive");
    Chain c;
    c.num_states = num_states;
    c.out.resize(num_states);
    c.goal.assign(num_states, false);
    c.fail.assign(num_states, false);
    for (int g : goal_states) {
        if (g < 0 || g >= num_states) throw std::invalid_argument("goal state out of range");
        c.goal[g] = true;
    }
    for (int f : fail_states) {
        if (f < 0 || f >= num_states) throw std::invalid_argument("fail state out of range");
        if (c.goal[f]) throw std::invalid_argument("state is both goal and fail");
        c.fail[f] = true;
    }
    for (const auto& [from, to, prob, time] : edges) {
        if (from < 0 || from >= num_states || to < 0 || to >= num_states)
            throw std::invalid_argument("edge endpoint out of range");
        c.out[from].push_back(Edge{to, prob, time});
    }
    for (auto& row : c.out)
        std::sort(row.begin(), row.end(),
                  [](const Edge& a, const Edge& b) { return a.to < b.to; });
    return c;
}

/// Eq-style reduction p(x,y) = sum_a pi(x,a) P(x,a,y). Edges with induced
/// probability below kEdgeDropThreshold are dropped and the row is
/// renormalized. `times` must cover every surviving (x,y) pair.
inline Chain induce_chain(const Mdp& mdp, const Policy& policy,
                          const std::map<std::pair<int, int>, int>& times) {
    const int n = mdp.num_states;
    if (n <= 0) throw std::invalid_argument("num_states must be positive");

    Chain c;
    c.num_states = n;
    c.out.resize(n);
    c.goal.assign(n, false);
    c.fail.assign(n, false);
    for (int g : mdp.goal_states) {
        if (g < 0 || g >= n) throw std::invalid_argument("goal state out of range");
        c.goal[g] = true;
    }
    for (int f : mdp.fail_states) {
        if (f < 0 || f >= n) throw std::invalid_argument("fail state out of range");
        if (c.goal[f]) throw std::invalid_argument("state is both goal and fail");
        c.fail[f] = true;
    }

    // Policy rows, indexed by state then action.
    std::vector<std::map<int, double>> pi(n);
    for (const auto& e : policy.entries) {
        if (e.state < 0 || e.state >= n) throw std::invalid_argument("policy state out of range");
        if (e.action < 0 || e.action >= mdp.num_actions)
            throw std::invalid_argument("policy action out of range");
        if (e.weight < 0.0 || e.weight > 1.0)
            throw std::invalid_argument("policy weight outside [0,1]");
        pi[e.state][e.action] += e.weight;
    }

    // Transition kernel grouped by (state, action).
    std::vector<std::map<int, std::map<int, double>>> kernel(n);
    for (const auto& t : mdp.transitions) {
        if (t.from < 0 || t.from >= n || t.to < 0 || t.to >= n)
            throw std::invalid_argument("transition state out of range");
        if (t.action < 0 || t.action >= mdp.num_actions)
            throw std::invalid_argument("transition action out of range");
        if (t.prob < 0.0 || t.prob > 1.0)
            throw std::invalid_argument("transition probability outside [0,1]");
        kernel[t.from][t.action][t.to] += t.prob;
    }

    for (int x = 0; x < n; ++x) {
        if (c.is_terminal(x)) continue;  // policy rows at terminals are ignored

        double wsum = 0.0;
        for (const auto& [a, w] : pi[x]) wsum += w;
        if (std::abs(wsum - 1.0) > kRowSumTol) {
            std::ostringstream msg;
            msg << "policy weights at state " << x << " sum to " << wsum;
            throw std::invalid_argument(msg.str());
        }
        for (const auto& [a, w] : pi[x]) {
            if (w == 0.0) continue;
            auto it = kernel[x].find(a);
            if (it == kernel[x].end())
                throw std::invalid_argument("policy selects action with no transitions at state " +
                                            std::to_string(x));
            double psum = 0.0;
            for (const auto& [y, p] : it->second) psum += p;
            if (std::abs(psum - 1.0) > kRowSumTol) {
                std::ostringstream msg;
                msg << "transition row (" << x << "," << a << ") sums to " << psum;
                throw std::invalid_argument(msg.str());
            }
        }

        std::map<int, double> row;
        for (const auto& [a, w] : pi[x]) {
            auto it = kernel[x].find(a);
            if (it == kernel[x].end()) continue;
            for (const auto& [y, p] : it->second) row[y] += w * p;
        }

        double kept = 0.0;
        for (const auto& [y, p] : row)
            if (p >= kEdgeDropThreshold) kept += p;
        if (kept <= 0.0)
            throw std::invalid_argument("state " + std::to_string(x) + " has no outgoing mass");

        for (const auto& [y, p] : row) {
            if (p < kEdgeDropThreshold) continue;
            auto tit = times.find({x, y});
            if (tit == times.end()) {
                std::ostringstream msg;
                msg << "missing transition time for edge (" << x << "," << y << ")";
                throw std::invalid_argument(msg.str());
            }
            if (tit->second < 1) throw std::invalid_argument("transition time must be >= 1");
            c.out[x].push_back(Edge{y, p / kept, tit->second});
        }
    }
    return c;
}

/// Checks all Chain invariants plus the finite-absorption assumption
/// (every non-terminal state should reach some terminal state).
/// Returns an empty list for a valid chain.
inline std::vector<Diagnostic> validate_chain(const Chain& c) {
    std::vector<Diagnostic> out;
    auto error = [&](const std::string& m) {
        out.push_back({Diagnostic::Severity::error, m});
    };
    auto warn = [&](const std::string& m) {
        out.push_back({Diagnostic::Severity::warning, m});
    };

    const int n = c.num_states;
    if (n <= 0 || static_cast<int>(c.out.size()) != n ||
        static_cast<int>(c.goal.size()) != n || static_cast<int>(c.fail.size()) != n) {
        error("chain has inconsistent sizes");
        return out;
    }

    for (int x = 0; x < n; ++x) {
        if (c.goal[x] && c.fail[x]) error("state " + std::to_string(x) + " is both goal and fail");
        if (c.is_terminal(x)) {
            if (!c.out[x].empty())
                error("terminal state " + std::to_string(x) + " has outgoing edges");
            continue;
        }
        double sum = 0.0;
        std::vector<bool> seen(n, false);
        for (const auto& e : c.out[x]) {
            if (e.to < 0 || e.to >= n) {
                error("edge from state " + std::to_string(x) + " targets out-of-range state " +
                      std::to_string(e.to));
                continue;
            }
            if (seen[e.to])
                error("duplicate edge (" + std::to_string(x) + "," + std::to_string(e.to) + ")");
            seen[e.to] = true;
            if (e.prob <= 0.0 || e.prob > 1.0) {
                std::ostringstream msg;
                msg << "edge (" << x << "," << e.to << ") probability " << e.prob
                    << " outside (0,1]";
                error(msg.str());
            }
            if (e.time < 1) {
                std::ostringstream msg;
                msg << "edge (" << x << "," << e.to << ") time " << e.time << " is not >= 1";
                error(msg.str());
            }
            sum += e.prob;
        }
        if (std::abs(sum - 1.0) > kRowSumTol) {
            std::ostringstream msg;
            msg << "row-sum defect " << std::abs(sum - 1.0) << " at state " << x;
            error(msg.str());
        }
    }

    // Reverse reachability from the terminal set.
    std::vector<std::vector<int>> rev(n);
    for (int x = 0; x < n; ++x)
        for (const auto& e : c.out[x])
            if (e.to >= 0 && e.to < n) rev[e.to].push_back(x);
    std::vector<bool> reaches(n, false);
    std::queue<int> bfs;
    for (int x = 0; x < n; ++x)
        if (c.is_terminal(x)) {
            reaches[x] = true;
            bfs.push(x);
        }
    while (!bfs.empty()) {
        int y = bfs.front();
        bfs.pop();
        for (int x : rev[y])
            if (!reaches[x]) {
                reaches[x] = true;
                bfs.push(x);
            }
    }
    for (int x = 0; x < n; ++x)
        if (!reaches[x])
            warn("absorption not guaranteed: state " + std::to_string(x) +
                 " cannot reach any terminal state");

    return out;
}

inline bool has_errors(const std::vector<Diagnostic>& diags) {
    return std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) {
        return d.severity == Diagnostic::Severity::error;
    });
}

}  // namespace passage
