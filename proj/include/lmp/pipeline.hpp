// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lmp/block.hpp"
#include "lmp/fbdm.hpp"
#include "lmp/latent.hpp"
#include "lmp/mmdit.hpp"
#include "lmp/scheduler.hpp"

namespace lmp {

/// literal: motion transfer while t > T1 (t counts down).
/// first_k: motion transfer for the first T1 denoising steps, i.e. t > T - T1.
enum class GateInterpretation { literal, first_k };

GateInterpretation parse_gate_interpretation(const std::string& name);

struct GateState {
    bool rtmm_active = false;
    bool asm_active = false;
};

GateState gate_state(int t, const ScheduleConfig& cfg, GateInterpretation interpretation, bool asm_enabled);

struct GateRecord {
    int t = 0;
    bool rtmm_active = false;
    bool asm_active = false;
    std::vector<std::string> block_hooks;  // per block, e.g. "asm+rmtm" or "none"
};

struct GateTrace {
    std::vector<GateRecord> steps;  // descending t

    /// "t,rtmm,asm" header then one 0/1 line per step.
    std::string to_csv() const;
};

struct RunSpec {
    ScheduleConfig schedule;
    GateInterpretation gates = GateInterpretation::literal;
    NoiseSchedule noise;
    BlendSchedule blend;
    ModelWeights model;
    TokenLayout layout;
    PromptTokens target_prompt;
    PromptTokens reference_prompt;
    // Real reference latent (noised per step by proportional_noise); when
    // absent the reference is generated in parallel from seeded noise.
    std::optional<LatentVideo> reference_latent;
    // Image-to-video conditioning: a single-frame latent pinned into frame 0.
    std::optional<LatentVideo> init_frame;
    SelectionPolicy fbdm_policy = SelectionPolicy::top_fraction(0.25);
    bool asm_enabled = true;
    double asm_fraction = 0.2;

    void validate() const;
};

enum class Branch { target, reference };

struct RunObserver {
    std::function<void(int t, std::size_t block, Branch branch, const AttentionMap& map)> on_attention;
    std::function<void(int t, const SaliencyVolume& saliency, const ForegroundMask& mask)> on_mask;
};

struct MaskRecord {
    int t = 0;
    SaliencyVolume saliency;
    ForegroundMask mask;
};

struct BlockValue {
    int t = 0;
    std::size_t block = 0;
    double value = 0.0;
};

struct RunResult {
    LatentVideo latent;
    GateTrace gates;
    std::vector<MaskRecord> masks;              // one per motion-transfer step
    std::vector<BlockValue> asm_losses;         // per (t, block) where ASM ran
    std::vector<BlockValue> reference_masses;   // per (t, block) where RMTM ran

    std::string asm_loss_csv() const;
};

RunResult lmp_generate(const RunSpec& spec, const RunObserver& observer = {});

/// Baseline: the same sampler and model with no reference branch or hooks.
LatentVideo plain_generate(const RunSpec& spec);

/// Seeded initial noise shared by lmp_generate and plain_generate.
LatentVideo initial_target_noise(const RunSpec& spec);

struct Centroid {
    double row = 0.0;
    double col = 0.0;
};

std::vector<Centroid> centroid_trajectory(const ForegroundMask& mask);
std::vector<Centroid> centroid_trajectory(const SaliencyVolume& saliency);

/// Mean of the Pearson correlations of the row and column series. A constant
/// series counts as correlation 0 and a warning is written to stderr.
double trajectory_similarity(const std::vector<Centroid>& a, const std::vector<Centroid>& b);

}  // namespace lmp
