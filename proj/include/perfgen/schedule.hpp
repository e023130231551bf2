#pragma once

#include "perfgen/codecs.hpp"

#include <vector>

namespace perfgen::schedule {

/// Precomputed diffusion tables. Steps are 1-based, t in [1, T], matching the
/// closed-form algebra; alpha_bar(0) is defined as 1 so the posterior variance
/// exists at t = 1 (and equals 0 there). Tables are always double precision:
/// alpha_bar(T) underflows single precision with the default schedule.
struct NoiseSchedule {
    int T = 0;
    double beta_start = 0.0, beta_end = 0.0;
    std::vector<double> beta;          // beta[t-1]
    std::vector<double> alpha;         // 1 - beta
    std::vector<double> alpha_bar;     // running product of alpha
    std::vector<double> posterior_var; // (1-alpha_t)(1-abar_{t-1})/(1-abar_t)

    double beta_at(int t) const { return beta[t - 1]; }
    double alpha_at(int t) const { return alpha[t - 1]; }
    double alpha_bar_at(int t) const { return t == 0 ? 1.0 : alpha_bar[t - 1]; }
    double posterior_var_at(int t) const { return posterior_var[t - 1]; }
    void require_step(int t) const;
};

/// Linear beta schedule including both endpoints.
NoiseSchedule make_schedule(int T = 1000, double beta_start = 1e-4, double beta_end = 0.2);

/// Closed-form forward corruption: x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) eps.
codecs::Mat q_sample(const codecs::Mat& x0, int t, const codecs::Mat& eps,
                     const NoiseSchedule& sched);

/// Inverse of q_sample for a known (or predicted) noise field:
/// x0_hat = (x_t - sqrt(1-abar_t) eps_hat) / sqrt(abar_t).
codecs::Mat invert_q(const codecs::Mat& x_t, int t, const codecs::Mat& eps_hat,
                     const NoiseSchedule& sched);

/// Reverse-step model mean:
/// mu = sqrt(1/alpha_t) (x_t - eps_hat (1-alpha_t)/sqrt(1-abar_t)).
codecs::Mat posterior_mean(const codecs::Mat& x_t, int t, const codecs::Mat& eps_hat,
                           const NoiseSchedule& sched);

} // namespace perfgen::schedule
