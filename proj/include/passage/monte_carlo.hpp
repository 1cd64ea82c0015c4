#pragma once

// Episode simulation under the induced chain, with empirical estimates
// of success probability and conditional duration moments. Each episode
// draws its random stream from (seed, episode index), so estimates do
// not depend on execution order.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "passage/chain.hpp"

namespace passage {

/// Counter-based stream: splitmix64 advanced from a state mixed out of
/// (seed, stream index). Platform-independent by construction.
class EpisodeRng {
public:
    EpisodeRng(std::uint64_t seed, std::uint64_t stream)
        : state_(mix(seed ^ mix(stream * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL))) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    std::uint64_t state_;
};

struct Episode {
    std::vector<int> states;  // b_0 .. b_K
    long total_time = 0;      // sum of edge times along the trajectory
    bool successful = false;  // b_K in the goal set
    bool truncated = false;   // step cap hit before absorption
};

struct McEstimate {
    long n_total = 0;
    long n_success = 0;
    long n_truncated = 0;
    double s_hat = 0.0;
    std::optional<double> a_hat;  // mean duration over successes
    std::optional<double> d_hat;  // population std dev over successes
    double se_s = 0.0;
    std::optional<double> se_a;
    std::uint64_t seed = 0;
};

inline Episode simulate_episode(const Chain& chain, int start, EpisodeRng& rng, long step_cap) {
    if (start < 0 || start >= chain.num_states)
        throw std::invalid_argument("start state out of range");
    if (step_cap < 1) throw std::invalid_argument("step_cap must be >= 1");

    Episode ep;
    ep.states.push_back(start);
    int x = start;
    for (long step = 0; !chain.is_terminal(x); ++step) {
        if (step >= step_cap) {
            ep.truncated = true;
            return ep;
        }
        const double u = rng.next_unit();
        const auto& row = chain.out[x];
        const Edge* chosen = &row.back();  // roundoff residual lands on the last edge
        double cum = 0.0;
        for (const auto& e : row) {
            cum += e.prob;
            if (u < cum) {
                chosen = &e;
                break;
            }
        }
        ep.total_time += chosen->time;
        x = chosen->to;
        ep.states.push_back(x);
    }
    ep.successful = chain.is_goal(x);
    return ep;
}

/// Runs n independent episodes from `start`. Truncated episodes count as
/// failures for s_hat and are tallied separately. The conditional std
/// dev uses the population formula (divide by n_success), matching the
/// definition of D.
inline McEstimate estimate(const Chain& chain, int start, long n_episodes, std::uint64_t seed,
                           long step_cap = 1000000) {
    if (n_episodes < 1) throw std::invalid_argument("n_episodes must be >= 1");

    McEstimate est;
    est.seed = seed;
    est.n_total = n_episodes;

    // Kahan-compensated sums of T and T^2 over successful episodes.
    double sum_t = 0.0, c_t = 0.0;
    double sum_t2 = 0.0, c_t2 = 0.0;
    auto add = [](double& sum, double& comp, double v) {
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    };

    for (long i = 0; i < n_episodes; ++i) {
        EpisodeRng rng(seed, static_cast<std::uint64_t>(i));
        Episode ep = simulate_episode(chain, start, rng, step_cap);
        if (ep.truncated) {
            ++est.n_truncated;
            continue;
        }
        if (ep.successful) {
            ++est.n_success;
            const double t = static_cast<double>(ep.total_time);
            add(sum_t, c_t, t);
            add(sum_t2, c_t2, t * t);
        }
    }

    est.s_hat = static_cast<double>(est.n_success) / static_cast<double>(est.n_total);
    est.se_s = std::sqrt(est.s_hat * (1.0 - est.s_hat) / static_cast<double>(est.n_total));
    if (est.n_success >= 2) {
        const double n = static_cast<double>(est.n_success);
        const double mean = sum_t / n;
        est.a_hat = mean;
        est.d_hat = std::sqrt(std::max(0.0, sum_t2 / n - mean * mean));
        est.se_a = *est.d_hat / std::sqrt(n);
    }
    return est;
}

}  // namespace passage
