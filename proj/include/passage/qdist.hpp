#pragma once

// Exact distribution q(T|x) of reaching the goal set at exactly time T.
// Because every edge time is >= 1, layer T depends only on strictly
// earlier layers and a single forward pass over T is exact. Serves as an
// independent oracle for the fixed-point solver: sum_T q(T|x) -> s(x).

#include <cstdint>
#include <deque>
#include <stdexcept>
#include <vector>

#include "passage/chain.hpp"

namespace passage {

struct QTable {
    int t_max = 0;
    int num_states = 0;
    std::vector<std::vector<double>> values;  // values[T][x], T = 0..t_max

    double q(int T, int x) const {
        if (T < 0) return 0.0;
        return values[T][x];
    }
};

struct QMoments {
    double mass = 0.0;              // sum_T q(T|x)
    double mean_numerator = 0.0;    // sum_T T q(T|x)
    double second_numerator = 0.0;  // sum_T T^2 q(T|x)
};

namespace detail {

// Rolling-window recursion: keeps only the last max(tau) layers and hands
// each finished layer to `sink(T, layer)`.
template <typename Sink>
void q_forward(const Chain& chain, long t_max, Sink&& sink) {
    const int n = chain.num_states;
    const int window = chain.max_edge_time();
    std::deque<std::vector<double>> past;  // past.front() is layer T-1

    std::vector<double> layer(n, 0.0);
    for (int x = 0; x < n; ++x) layer[x] = chain.is_goal(x) ? 1.0 : 0.0;
    sink(0L, layer);
    past.push_front(layer);

    for (long T = 1; T <= t_max; ++T) {
        for (int x = 0; x < n; ++x) {
            if (chain.is_terminal(x)) {
                layer[x] = 0.0;
                continue;
            }
            double acc = 0.0;
            for (const auto& e : chain.out[x]) {
                const long Tprev = T - e.time;
                if (Tprev < 0) continue;  // q(T|x) = 0 for T < 0
                const long back = T - 1 - Tprev;  // 0-based index into past
                acc += e.prob * past[back][e.to];
            }
            layer[x] = acc;
        }
        sink(T, layer);
        past.push_front(layer);
        if (static_cast<int>(past.size()) > window) past.pop_back();
    }
}

}  // namespace detail

/// Dense table of q(T|x) for T = 0..t_max.
inline QTable q_distribution(const Chain& chain, int t_max) {
    if (t_max < 0) throw std::invalid_argument("t_max must be non-negative");
    QTable table;
    table.t_max = t_max;
    table.num_states = chain.num_states;
    table.values.reserve(t_max + 1);
    detail::q_forward(chain, t_max, [&](long, const std::vector<double>& layer) {
        table.values.push_back(layer);
    });
    return table;
}

/// Partial sums sum q, sum T q, sum T^2 q over T <= t_max for one state.
/// Dividing the numerators by s(x) gives truncated A(x) and B(x).
inline QMoments truncated_moments(const QTable& table, int x) {
    if (x < 0 || x >= table.num_states) throw std::invalid_argument("state out of range");
    QMoments m;
    for (int T = 0; T <= table.t_max; ++T) {
        const double q = table.values[T][x];
        const double t = static_cast<double>(T);
        m.mass += q;
        m.mean_numerator += t * q;
        m.second_numerator += t * t * q;
    }
    return m;
}

/// Same moments for every state without materializing the table; memory
/// stays bounded by max(tau) layers.
inline std::vector<QMoments> q_moments(const Chain& chain, long t_max) {
    if (t_max < 0) throw std::invalid_argument("t_max must be non-negative");
    std::vector<QMoments> out(chain.num_states);
    detail::q_forward(chain, t_max, [&](long T, const std::vector<double>& layer) {
        const double t = static_cast<double>(T);
        for (int x = 0; x < chain.num_states; ++x) {
            const double q = layer[x];
            if (q == 0.0) continue;
            out[x].mass += q;
            out[x].mean_numerator += t * q;
            out[x].second_numerator += t * t * q;
        }
    });
    return out;
}

/// Smallest horizon (checked at powers of two) at which every state's
/// mass defect s(x) - sum_{T<=t} q(T|x) drops below eps, capped at `cap`.
/// The paper's sums are infinite; this picks the truncation point.
inline long choose_horizon(const Chain& chain, const std::vector<double>& s, double eps,
                           long cap = 1000000) {
    if (static_cast<int>(s.size()) != chain.num_states)
        throw std::invalid_argument("s is not aligned with the chain");
    long t = 1;
    while (true) {
        auto moments = q_moments(chain, t);
        double defect = 0.0;
        for (int x = 0; x < chain.num_states; ++x)
            defect = std::max(defect, s[x] - moments[x].mass);
        if (defect < eps || t >= cap) return t;
        t = std::min(cap, t * 2);
    }
}

}  // namespace passage
