#include "perfgen/schedule.hpp"

#include "perfgen/common.hpp"

#include <cmath>
#include <string>

namespace perfgen::schedule {

void NoiseSchedule::require_step(int t) const {
    if (t < 1 || t > T)
        throw ValidationError("diffusion step " + std::to_string(t) + " out of [1, " +
                              std::to_string(T) + "]");
}

NoiseSchedule make_schedule(int T, double beta_start, double beta_end) {
    if (T < 2) throw ValidationError("schedule needs T >= 2");
    if (!(0.0 < beta_start && beta_start < beta_end && beta_end < 1.0))
        throw ValidationError("schedule needs 0 < beta_start < beta_end < 1");

    NoiseSchedule s;
    s.T = T;
    s.beta_start = beta_start;
    s.beta_end = beta_end;
    s.beta.resize(T);
    s.alpha.resize(T);
    s.alpha_bar.resize(T);
    s.posterior_var.resize(T);
    double abar = 1.0;
    for (int i = 0; i < T; ++i) {
        s.beta[i] = beta_start + (beta_end - beta_start) * i / (T - 1);
        s.alpha[i] = 1.0 - s.beta[i];
        const double abar_prev = abar;
        abar *= s.alpha[i];
        s.alpha_bar[i] = abar;
        s.posterior_var[i] = (1.0 - s.alpha[i]) * (1.0 - abar_prev) / (1.0 - abar);
    }
    return s;
}

namespace {

codecs::Mat combine(const codecs::Mat& a, double ca, const codecs::Mat& b, double cb) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw ValidationError("matrix shape mismatch in schedule op");
    codecs::Mat out(a.rows, a.cols);
    for (size_t i = 0; i < a.v.size(); ++i) out.v[i] = ca * a.v[i] + cb * b.v[i];
    return out;
}

} // namespace

codecs::Mat q_sample(const codecs::Mat& x0, int t, const codecs::Mat& eps,
                     const NoiseSchedule& sched) {
    sched.require_step(t);
    const double abar = sched.alpha_bar_at(t);
    return combine(x0, std::sqrt(abar), eps, std::sqrt(1.0 - abar));
}

codecs::Mat invert_q(const codecs::Mat& x_t, int t, const codecs::Mat& eps_hat,
                     const NoiseSchedule& sched) {
    sched.require_step(t);
    const double abar = sched.alpha_bar_at(t);
    const double inv = 1.0 / std::sqrt(abar);
    return combine(x_t, inv, eps_hat, -std::sqrt(1.0 - abar) * inv);
}

codecs::Mat posterior_mean(const codecs::Mat& x_t, int t, const codecs::Mat& eps_hat,
                           const NoiseSchedule& sched) {
    sched.require_step(t);
    const double a = sched.alpha_at(t);
    const double abar = sched.alpha_bar_at(t);
    const double scale = std::sqrt(1.0 / a);
    return combine(x_t, scale, eps_hat, -scale * (1.0 - a) / std::sqrt(1.0 - abar));
}

} // namespace perfgen::schedule
