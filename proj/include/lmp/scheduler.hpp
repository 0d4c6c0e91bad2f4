// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lmp/latent.hpp"

namespace lmp {

/// Per-step coefficients a_t and cumulative products abar_t, indexed 0..T.
/// abar[0] = 1 by convention; a[0] is unused and kept at 1.
struct NoiseSchedule {
    std::vector<double> a;
    std::vector<double> abar;

    int steps() const { return static_cast<int>(abar.size()) - 1; }
    void validate() const;
};

NoiseSchedule noise_schedule_from_coefficients(const std::vector<double>& a_1_to_T);

/// Linear ramp on 1 - a_t from beta_min up to a maximum solved so that
/// abar_T equals abar_final.
NoiseSchedule make_noise_schedule(int T, double abar_final = 0.01, double beta_min = 1e-4);

/// Step counts and gate boundaries for the motion-transfer loop.
struct ScheduleConfig {
    int T = 50;
    int T1 = 40;
    int T2 = 45;
    int T3 = 35;
    double lambda = 0.98;
    double beta = 100.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Amplitude blend lam_t for proportional noising of real reference latents.
struct BlendSchedule {
    std::vector<double> lam;

    int steps() const { return static_cast<int>(lam.size()) - 1; }
    void validate() const;
};

// kind: "linear" (1 - t/T) or "sqrt_abar" (needs `noise` covering T steps).
BlendSchedule make_blend_schedule(int T, std::string_view kind, const NoiseSchedule* noise = nullptr);

LatentVideo forward_noise(const LatentVideo& z0, int t, const LatentVideo& eps, const NoiseSchedule& sched);
LatentVideo proportional_noise(const LatentVideo& z0, int t, const LatentVideo& eps, const BlendSchedule& blend);

LatentVideo predict_clean(const LatentVideo& zt, const LatentVideo& eps_hat, int t, const NoiseSchedule& sched);
/// Deterministic DDIM-style step: recover z0 from the noise estimate, then
/// re-noise it to t-1 with the same estimate.
LatentVideo denoise_update(const LatentVideo& zt, const LatentVideo& eps_hat, int t, const NoiseSchedule& sched);

}  // namespace lmp
