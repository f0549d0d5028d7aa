#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ddc/errors.hpp"

namespace ddc {

enum class ScheduleKind { Linear, ScaledLinear };

// Variance schedule over T timesteps: per-step alpha_t = 1 - beta_t and the
// running product alpha_bar_t. Index t runs 1..T; alpha_bar(0) == 1 denotes
// the clean signal.
class NoiseSchedule {
   public:
    NoiseSchedule(std::vector<double> alpha, std::vector<double> alpha_bar)
        : alpha_(std::move(alpha)), alpha_bar_(std::move(alpha_bar)) {}

    int timesteps() const { return static_cast<int>(alpha_.size()); }

    double alpha(int t) const {
        check(t, 1);
        return alpha_[static_cast<std::size_t>(t) - 1];
    }

    double alpha_bar(int t) const {
        check(t, 0);
        return t == 0 ? 1.0 : alpha_bar_[static_cast<std::size_t>(t) - 1];
    }

   private:
    void check(int t, int lo) const {
        if (t < lo || t > timesteps())
            throw ParameterError("timestep " + std::to_string(t) + " outside [" +
                                 std::to_string(lo) + ", " + std::to_string(timesteps()) + "]");
    }

    std::vector<double> alpha_;      // alpha_t, t = 1..T
    std::vector<double> alpha_bar_;  // running product, t = 1..T
};

// Builds a DDPM-style schedule with beta interpolated linearly (or linearly
// in sqrt(beta) for kind == ScaledLinear) between beta_start and beta_end.
inline NoiseSchedule make_schedule(int timestep_count, double beta_start, double beta_end,
                                   ScheduleKind kind = ScheduleKind::Linear) {
    if (timestep_count < 1) throw ParameterError("schedule needs at least one timestep");
    if (!(beta_start >= 0.0) || !(beta_end >= beta_start) || !(beta_end < 1.0))
        throw ParameterError("beta range must satisfy 0 <= beta_start <= beta_end < 1");

    std::vector<double> alpha(static_cast<std::size_t>(timestep_count));
    std::vector<double> alpha_bar(static_cast<std::size_t>(timestep_count));
    const double frac_denom = timestep_count > 1 ? timestep_count - 1.0 : 1.0;
    double running = 1.0;
    for (int i = 0; i < timestep_count; ++i) {
        const double f = i / frac_denom;
        double beta;
        if (kind == ScheduleKind::Linear) {
            beta = beta_start + (beta_end - beta_start) * f;
        } else {
            const double s = std::sqrt(beta_start) + (std::sqrt(beta_end) - std::sqrt(beta_start)) * f;
            beta = s * s;
        }
        alpha[static_cast<std::size_t>(i)] = 1.0 - beta;
        running *= 1.0 - beta;
        alpha_bar[static_cast<std::size_t>(i)] = running;
    }
    return NoiseSchedule(std::move(alpha), std::move(alpha_bar));
}

inline NoiseSchedule default_schedule() { return make_schedule(1000, 1e-4, 0.02); }

// Uniformly spaced descending timestep subsequence of [1, T] used for
// few-step sampling: round(T*i/steps) for i = steps..1, deduplicated.
inline std::vector<int> sampling_timesteps(const NoiseSchedule& schedule, int num_steps) {
    if (num_steps < 1) throw ParameterError("num_steps must be >= 1");
    const int T = schedule.timesteps();
    std::vector<int> ts;
    ts.reserve(static_cast<std::size_t>(num_steps));
    for (int i = num_steps; i >= 1; --i) {
        int t = static_cast<int>(std::lround(static_cast<double>(T) * i / num_steps));
        if (t < 1) t = 1;
        if (ts.empty() || ts.back() != t) ts.push_back(t);
    }
    return ts;
}

}  // namespace ddc
