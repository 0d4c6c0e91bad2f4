// SPDX-License-Identifier: Apache-2.0
#include "lmp/scheduler.hpp"

#include <cmath>
#include <string>

namespace lmp {

namespace {

void check_pair(const LatentVideo& a, const LatentVideo& b, const char* op) {
    if (!a.same_shape(b) || a.data.size() != b.data.size())
        throw ShapeError(std::string(op) + ": latent shapes differ");
}

void check_step(int t, int T, const char* op) {
    if (t < 0 || t > T)
        throw ShapeError(std::string(op) + ": step " + std::to_string(t) + " outside [0, " + std::to_string(T) + "]");
}

}  // namespace

void NoiseSchedule::validate() const {
    if (abar.empty() || a.size() != abar.size()) throw ConfigError("noise schedule: a and abar lengths differ");
    if (abar[0] != 1.0) throw ConfigError("noise schedule: abar[0] must be 1");
    for (std::size_t t = 1; t < abar.size(); ++t) {
        if (!(a[t] >= 0.0 && a[t] <= 1.0)) throw ConfigError("noise schedule: a_t must lie in [0, 1]");
        if (abar[t] > abar[t - 1]) throw ConfigError("noise schedule: abar must be non-increasing");
    }
}

NoiseSchedule noise_schedule_from_coefficients(const std::vector<double>& a_1_to_T) {
    NoiseSchedule s;
    s.a.reserve(a_1_to_T.size() + 1);
    s.abar.reserve(a_1_to_T.size() + 1);
    s.a.push_back(1.0);
    s.abar.push_back(1.0);
    for (double a : a_1_to_T) {
        s.a.push_back(a);
        s.abar.push_back(s.abar.back() * a);
    }
    s.validate();
    return s;
}

NoiseSchedule make_noise_schedule(int T, double abar_final, double beta_min) {
    if (T < 1) throw ConfigError("noise schedule: T must be >= 1");
    if (!(abar_final > 0.0 && abar_final < 1.0)) throw ConfigError("noise schedule: abar_final must lie in (0, 1)");
    if (!(beta_min >= 0.0 && beta_min < 1.0)) throw ConfigError("noise schedule: beta_min must lie in [0, 1)");

    auto coefficients = [&](double beta_max) {
        std::vector<double> a(static_cast<std::size_t>(T));
        for (int t = 1; t <= T; ++t) {
            const double frac = T == 1 ? 1.0 : static_cast<double>(t - 1) / (T - 1);
            a[static_cast<std::size_t>(t - 1)] = 1.0 - (beta_min + frac * (beta_max - beta_min));
        }
        return a;
    };
    auto log_abar = [&](double beta_max) {
        double acc = 0.0;
        for (double a : coefficients(beta_max)) acc += std::log(a);
        return acc;
    };

    const double target = std::log(abar_final);
    if (log_abar(beta_min) < target) throw ConfigError("noise schedule: beta_min already overshoots abar_final");
    // log abar_T is decreasing in beta_max; bisect on [beta_min, 1).
    double lo = beta_min;
    double hi = 1.0 - 1e-12;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (log_abar(mid) > target ? lo : hi) = mid;
    }
    return noise_schedule_from_coefficients(coefficients(0.5 * (lo + hi)));
}

void ScheduleConfig::validate() const {
    if (T < 1) throw ConfigError("schedule: T must be >= 1");
    if (!(0 <= T3 && T3 < T2 && T2 <= T)) throw ConfigError("schedule: require 0 <= T3 < T2 <= T");
    if (!(0 <= T1 && T1 <= T)) throw ConfigError("schedule: require 0 <= T1 <= T");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("schedule: lambda must lie in [0, 1]");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("schedule: beta must be finite and >= 0");
}

void BlendSchedule::validate() const {
    if (lam.empty()) throw ConfigError("blend schedule is empty");
    if (lam[0] != 1.0) throw ConfigError("blend schedule: lam[0] must be 1");
    for (std::size_t t = 0; t < lam.size(); ++t) {
        if (!(lam[t] >= 0.0 && lam[t] <= 1.0)) throw ConfigError("blend schedule: lam_t must lie in [0, 1]");
        if (t > 0 && lam[t] > lam[t - 1]) throw ConfigError("blend schedule: lam must be non-increasing");
    }
}

BlendSchedule make_blend_schedule(int T, std::string_view kind, const NoiseSchedule* noise) {
    if (T < 1) throw ConfigError("blend schedule: T must be >= 1");
    BlendSchedule b;
    b.lam.resize(static_cast<std::size_t>(T) + 1);
    if (kind == "linear") {
        for (int t = 0; t <= T; ++t) b.lam[static_cast<std::size_t>(t)] = 1.0 - static_cast<double>(t) / T;
    } else if (kind == "sqrt_abar") {
        if (noise == nullptr || noise->steps() < T)
            throw ConfigError("blend schedule: sqrt_abar policy needs a noise schedule covering T steps");
        for (int t = 0; t <= T; ++t) b.lam[static_cast<std::size_t>(t)] = std::sqrt(noise->abar[static_cast<std::size_t>(t)]);
    } else {
        throw ConfigError("unknown blend policy '" + std::string(kind) + "'");
    }
    b.validate();
    return b;
}

LatentVideo forward_noise(const LatentVideo& z0, int t, const LatentVideo& eps, const NoiseSchedule& sched) {
    check_pair(z0, eps, "forward_noise");
    check_step(t, sched.steps(), "forward_noise");
    const double abar = sched.abar[static_cast<std::size_t>(t)];
    const double signal = std::sqrt(abar);
    const double noise = std::sqrt(1.0 - abar);
    LatentVideo out = z0;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = signal * z0.data[i] + noise * eps.data[i];
    return out;
}

LatentVideo proportional_noise(const LatentVideo& z0, int t, const LatentVideo& eps, const BlendSchedule& blend) {
    check_pair(z0, eps, "proportional_noise");
    check_step(t, blend.steps(), "proportional_noise");
    const double lam = blend.lam[static_cast<std::size_t>(t)];
    // lam = 1 must hand back z0 bit-exactly (signed zeros included).
    if (lam == 1.0) return z0;
    LatentVideo out = z0;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = lam * z0.data[i] + (1.0 - lam) * eps.data[i];
    return out;
}

LatentVideo predict_clean(const LatentVideo& zt, const LatentVideo& eps_hat, int t, const NoiseSchedule& sched) {
    check_pair(zt, eps_hat, "predict_clean");
    check_step(t, sched.steps(), "predict_clean");
    const double abar = sched.abar[static_cast<std::size_t>(t)];
    if (!(abar > 0.0)) throw NumericError("denoise: abar_" + std::to_string(t) + " is zero");
    const double signal = std::sqrt(abar);
    const double noise = std::sqrt(1.0 - abar);
    LatentVideo out = zt;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = (zt.data[i] - noise * eps_hat.data[i]) / signal;
    return out;
}

LatentVideo denoise_update(const LatentVideo& zt, const LatentVideo& eps_hat, int t, const NoiseSchedule& sched) {
    if (t < 1) throw ShapeError("denoise_update: t must be >= 1");
    const LatentVideo z0_hat = predict_clean(zt, eps_hat, t, sched);
    return forward_noise(z0_hat, t - 1, eps_hat, sched);
}

}  // namespace lmp
