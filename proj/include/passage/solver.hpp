#pragma once

// Fixed-point solver for per-state success probability and the
// conditional mean / second moment / standard deviation of the
// duration of successful episodes. Three phases run in order:
// s, then A given s, then B given s and A.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "passage/chain.hpp"

namespace passage {

/// States with s(x) at or below this floor get no A/B/D values; the
/// conditional recursions divide by s(x) and are meaningless there.
inline constexpr double kSuccessFloor = 1e-12;

struct SolveConfig {
    double tolerance = 1e-12;   // sup-norm residual threshold
    int max_iterations = 10000;
    // When true, run exactly max_iterations Jacobi sweeps regardless of
    // residual (the fixed-count protocol).
    bool fixed_iterations = false;
};

struct PhaseStats {
    int iterations = 0;
    double residual = 0.0;
    bool converged = true;
};

struct SolveResult {
    std::vector<double> s;
    std::vector<std::optional<double>> a;  // conditional mean duration
    std::vector<std::optional<double>> b;  // conditional second moment
    std::vector<std::optional<double>> d;  // sqrt(b - a^2)
    PhaseStats s_stats, a_stats, b_stats;

    bool converged() const {
        return s_stats.converged && a_stats.converged && b_stats.converged;
    }
    /// b - a^2 where defined (the variance proper, D squared).
    std::optional<double> variance(int x) const {
        if (!a[x] || !b[x]) return std::nullopt;
        return std::max(0.0, *b[x] - *a[x] * *a[x]);
    }
};

namespace detail {

// One Jacobi phase: next[x] = update(x, cur) over `active` states,
// everything else held fixed. Returns stats; cur holds the result.
template <typename Update>
PhaseStats jacobi_iterate(std::vector<double>& cur, const std::vector<bool>& active,
                          const SolveConfig& cfg, Update&& update) {
    PhaseStats stats;
    const int n = static_cast<int>(cur.size());
    bool any_active = false;
    for (int x = 0; x < n; ++x) any_active |= active[x];
    if (!any_active) return stats;

    std::vector<double> next(cur);
    for (int it = 0; it < cfg.max_iterations; ++it) {
        double residual = 0.0;
        for (int x = 0; x < n; ++x) {
            if (!active[x]) continue;
            next[x] = update(x, cur);
            residual = std::max(residual, std::abs(next[x] - cur[x]));
        }
        for (int x = 0; x < n; ++x)
            if (active[x]) cur[x] = next[x];
        stats.iterations = it + 1;
        stats.residual = residual;
        if (!cfg.fixed_iterations && residual <= cfg.tolerance) return stats;
    }
    stats.converged = cfg.fixed_iterations || stats.residual <= cfg.tolerance;
    return stats;
}

}  // namespace detail

/// Success probability s(x): 1 on goals, 0 on fails, and the fixed point
/// of s(x) = sum_y p(x,y) s(y) elsewhere. Starting from s=0 on
/// non-terminals the sweeps are monotone non-decreasing.
inline std::pair<std::vector<double>, PhaseStats> solve_success(const Chain& chain,
                                                               const SolveConfig& cfg = {}) {
    const int n = chain.num_states;
    std::vector<double> s(n, 0.0);
    std::vector<bool> active(n, false);
    for (int x = 0; x < n; ++x) {
        if (chain.is_goal(x))
            s[x] = 1.0;
        else if (!chain.is_fail(x))
            active[x] = true;
    }
    PhaseStats stats = detail::jacobi_iterate(s, active, cfg, [&](int x, const std::vector<double>& cur) {
        double acc = 0.0;
        for (const auto& e : chain.out[x]) acc += e.prob * cur[e.to];
        return acc;
    });
    return {std::move(s), stats};
}

/// Conditional mean duration A(x) = (1/s(x)) sum_y p(x,y) s(y) [A(y) + tau].
/// Defined only where s(x) > kSuccessFloor; zero at goal states.
inline std::pair<std::vector<std::optional<double>>, PhaseStats> solve_mean(
    const Chain& chain, const std::vector<double>& s, const SolveConfig& cfg = {}) {
    const int n = chain.num_states;
    std::vector<double> a(n, 0.0);
    std::vector<bool> active(n, false);
    for (int x = 0; x < n; ++x)
        if (!chain.is_terminal(x) && s[x] > kSuccessFloor) active[x] = true;

    PhaseStats stats = detail::jacobi_iterate(a, active, cfg, [&](int x, const std::vector<double>& cur) {
        double acc = 0.0;
        for (const auto& e : chain.out[x]) {
            if (s[e.to] <= kSuccessFloor) continue;  // zero contribution, A(y) never read
            acc += e.prob * s[e.to] * (cur[e.to] + e.time);
        }
        return acc / s[x];
    });

    std::vector<std::optional<double>> out(n);
    for (int x = 0; x < n; ++x)
        if (chain.is_goal(x))
            out[x] = 0.0;
        else if (active[x])
            out[x] = a[x];
    return {std::move(out), stats};
}

/// Conditional second moment
/// B(x) = (1/s(x)) sum_y p(x,y) s(y) [B(y) + 2 tau A(y) + tau^2].
inline std::pair<std::vector<std::optional<double>>, PhaseStats> solve_second_moment(
    const Chain& chain, const std::vector<double>& s,
    const std::vector<std::optional<double>>& a, const SolveConfig& cfg = {}) {
    const int n = chain.num_states;
    std::vector<double> b(n, 0.0);
    std::vector<bool> active(n, false);
    for (int x = 0; x < n; ++x)
        if (!chain.is_terminal(x) && s[x] > kSuccessFloor) active[x] = true;

    PhaseStats stats = detail::jacobi_iterate(b, active, cfg, [&](int x, const std::vector<double>& cur) {
        double acc = 0.0;
        for (const auto& e : chain.out[x]) {
            if (s[e.to] <= kSuccessFloor) continue;
            const double ay = a[e.to] ? *a[e.to] : 0.0;
            const double tau = static_cast<double>(e.time);
            acc += e.prob * s[e.to] * (cur[e.to] + 2.0 * tau * ay + tau * tau);
        }
        return acc / s[x];
    });

    std::vector<std::optional<double>> out(n);
    for (int x = 0; x < n; ++x)
        if (chain.is_goal(x))
            out[x] = 0.0;
        else if (active[x])
            out[x] = b[x];
    return {std::move(out), stats};
}

/// d(x) = sqrt(max(0, b - a^2)). Radicands in [-1e-9, 0] are treated as
/// roundoff and clamped; anything more negative indicates a solver defect.
inline std::vector<std::optional<double>> std_dev(const std::vector<std::optional<double>>& a,
                                                  const std::vector<std::optional<double>>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("a and b are not aligned");
    std::vector<std::optional<double>> d(a.size());
    for (std::size_t x = 0; x < a.size(); ++x) {
        if (!a[x] || !b[x]) continue;
        const double radicand = *b[x] - *a[x] * *a[x];
        if (radicand < -1e-9)
            throw std::runtime_error("negative variance radicand " + std::to_string(radicand) +
                                     " at state " + std::to_string(x));
        d[x] = std::sqrt(std::max(0.0, radicand));
    }
    return d;
}

/// The full pipeline: s, then A, then B, each phase iterated to its own
/// convergence, then D. Partial results are kept on non-convergence with
/// per-phase flags set.
inline SolveResult solve_all(const Chain& chain, const SolveConfig& cfg = {}) {
    SolveResult r;
    std::tie(r.s, r.s_stats) = solve_success(chain, cfg);
    std::tie(r.a, r.a_stats) = solve_mean(chain, r.s, cfg);
    std::tie(r.b, r.b_stats) = solve_second_moment(chain, r.s, r.a, cfg);
    r.d = std_dev(r.a, r.b);
    return r;
}

}  // namespace passage
