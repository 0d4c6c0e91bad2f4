// SPDX-License-Identifier: Apache-2.0
#include "lmp/pipeline.hpp"

#include <cstdio>
#include <sstream>

#include "lmp/rng.hpp"

namespace lmp {

namespace {

LatentVideo gaussian_latent(const TokenLayout& layout, std::size_t channels, Rng rng) {
    LatentVideo v(layout.frames, layout.height, layout.width, channels);
    for (double& x : v.data) x = rng.normal();
    return v;
}

void pin_first_frame(LatentVideo& z, const LatentVideo& frame) {
    std::copy(frame.data.begin(), frame.data.end(), z.data.begin());
}

template <class Fn>
auto with_context(int t, std::optional<std::size_t> block, Fn&& fn) -> decltype(fn()) {
    const std::string where =
        "t=" + std::to_string(t) + (block ? ", block=" + std::to_string(*block) : std::string()) + ": ";
    try {
        return fn();
    } catch (const ShapeError& e) {
        throw ShapeError(where + e.what());
    } catch (const NumericError& e) {
        throw NumericError(where + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(where + e.what());
    }
}

std::string join_hooks(const std::vector<std::string>& names) {
    if (names.empty()) return "none";
    std::string out;
    for (const auto& n : names) out += (out.empty() ? "" : "+") + n;
    return out;
}

HiddenStates map_to_hidden(const LatentVideo& z, const PromptTokens& prompt, const ModelWeights& model) {
    return {prompt.tokens, tokenize(z, model.embed).tokens};
}

}  // namespace

GateInterpretation parse_gate_interpretation(const std::string& name) {
    if (name == "literal") return GateInterpretation::literal;
    if (name == "first_k") return GateInterpretation::first_k;
    throw ConfigError("unknown gate_interpretation '" + name + "'");
}

GateState gate_state(int t, const ScheduleConfig& cfg, GateInterpretation interpretation, bool asm_enabled) {
    GateState g;
    g.rtmm_active = interpretation == GateInterpretation::literal ? t > cfg.T1 : t > cfg.T - cfg.T1;
    g.asm_active = asm_enabled && cfg.T3 < t && t < cfg.T2;
    return g;
}

std::string GateTrace::to_csv() const {
    std::string out = "t,rtmm,asm\n";
    for (const auto& s : steps)
        out += std::to_string(s.t) + "," + (s.rtmm_active ? "1" : "0") + "," + (s.asm_active ? "1" : "0") + "\n";
    return out;
}

std::string RunResult::asm_loss_csv() const {
    std::string out = "t,block,loss\n";
    char buf[64];
    for (const auto& r : asm_losses) {
        std::snprintf(buf, sizeof buf, "%.17g", r.value);
        out += std::to_string(r.t) + "," + std::to_string(r.block) + "," + buf + "\n";
    }
    return out;
}

void RunSpec::validate() const {
    schedule.validate();
    noise.validate();
    blend.validate();
    if (noise.steps() < schedule.T) throw ConfigError("noise schedule shorter than T");
    if (blend.steps() < schedule.T) throw ConfigError("blend schedule shorter than T");
    model.validate();
    layout.validate();
    target_prompt.validate();
    reference_prompt.validate();
    if (target_prompt.tokens.cols != model.dims.width || reference_prompt.tokens.cols != model.dims.width)
        throw ConfigError("prompt token width must equal model width " + std::to_string(model.dims.width));
    if (reference_latent) {
        reference_latent->validate();
        if (reference_latent->layout() != layout || reference_latent->channels != model.dims.channels)
            throw ConfigError("reference latent shape does not match layout/channels");
    }
    if (init_frame) {
        init_frame->validate();
        if (init_frame->frames != 1 || init_frame->height != layout.height || init_frame->width != layout.width ||
            init_frame->channels != model.dims.channels)
            throw ConfigError("init frame must be 1 x h x w x c matching the layout");
    }
    if (!(fbdm_policy.value > 0.0 && fbdm_policy.value <= 1.0)) throw ConfigError("fbdm policy parameter must lie in (0, 1]");
    if (!(asm_fraction > 0.0 && asm_fraction <= 1.0)) throw ConfigError("asm fraction must lie in (0, 1]");
}

LatentVideo initial_target_noise(const RunSpec& spec) {
    return gaussian_latent(spec.layout, spec.model.dims.channels, make_rng(spec.schedule.seed, Stream::target_noise));
}

RunResult lmp_generate(const RunSpec& spec, const RunObserver& observer) {
    spec.validate();
    const auto& model = spec.model;
    const int T = spec.schedule.T;
    const std::size_t channels = model.dims.channels;

    LatentVideo z = initial_target_noise(spec);
    const LatentVideo ref_noise =
        gaussian_latent(spec.layout, channels, make_rng(spec.schedule.seed, Stream::reference_noise));
    LatentVideo z_ref_generated = ref_noise;  // used when the reference is generated

    RunResult result;
    std::vector<BlockTrace> previous_ref_traces;

    for (int t = T; t >= 1; --t) {
        const GateState gate = gate_state(t, spec.schedule, spec.gates, spec.asm_enabled);
        if (spec.init_frame) pin_first_frame(z, *spec.init_frame);
        const LatentVideo z_ref = spec.reference_latent
                                      ? proportional_noise(*spec.reference_latent, t, ref_noise, spec.blend)
                                      : z_ref_generated;
        HiddenStates h_tar = map_to_hidden(z, spec.target_prompt, model);
        HiddenStates h_ref = map_to_hidden(z_ref, spec.reference_prompt, model);

        std::optional<ForegroundMask> mask;
        if (gate.rtmm_active) {
            if (previous_ref_traces.empty()) {
                // First gated step has no completed reference pass yet.
                previous_ref_traces = with_context(t, std::nullopt, [&] {
                    return model_forward(h_ref, model.blocks).traces;
                });
            }
            SaliencyVolume saliency = with_context(t, std::nullopt, [&] {
                return aggregate_subject_saliency(std::span<const BlockTrace>(previous_ref_traces),
                                                  spec.reference_prompt.subject_indices, spec.layout);
            });
            mask = select_foreground(saliency, spec.fbdm_policy);
            if (observer.on_mask) observer.on_mask(t, saliency, *mask);
            result.masks.push_back({t, std::move(saliency), *mask});
        }

        GateRecord record{t, gate.rtmm_active, gate.asm_active, {}};
        std::vector<BlockTrace> ref_traces;
        ref_traces.reserve(model.blocks.size());
        for (std::size_t b = 0; b < model.blocks.size(); ++b) {
            const BlockWeights& w = model.blocks[b];
            // The reference block runs first: its trace caches the K/V of the
            // reference hidden states entering this block.
            BlockOutput ref_out = with_context(t, b, [&] { return block_forward(h_ref, w, {}, b); });

            std::vector<BlockHook> hooks;
            if (gate.asm_active)
                hooks.emplace_back(AsmHook{with_context(t, b, [&] {
                    return make_asm_context(h_ref.prompt, w, spec.reference_prompt.subject_indices,
                                            spec.schedule.beta, spec.asm_fraction);
                })});
            if (gate.rtmm_active) hooks.emplace_back(RmtmHook{&ref_out.trace, *mask, spec.schedule.lambda});
            BlockOutput tar_out = with_context(t, b, [&] { return block_forward(h_tar, w, hooks, b); });

            if (tar_out.asm_loss) result.asm_losses.push_back({t, b, *tar_out.asm_loss});
            if (tar_out.reference_mass) result.reference_masses.push_back({t, b, *tar_out.reference_mass});
            record.block_hooks.push_back(join_hooks(tar_out.applied));
            if (observer.on_attention) {
                observer.on_attention(t, b, Branch::reference, ref_out.trace.attention);
                observer.on_attention(t, b, Branch::target, tar_out.trace.attention);
            }
            h_tar = std::move(tar_out.hidden);
            h_ref = std::move(ref_out.hidden);
            ref_traces.push_back(std::move(ref_out.trace));
        }
        previous_ref_traces = std::move(ref_traces);
        result.gates.steps.push_back(std::move(record));

        with_context(t, std::nullopt, [&] {
            const LatentVideo eps_hat = detokenize(h_tar.video, spec.layout, model.project);
            z = denoise_update(z, eps_hat, t, spec.noise);
            if (!spec.reference_latent) {
                const LatentVideo eps_ref = detokenize(h_ref.video, spec.layout, model.project);
                z_ref_generated = denoise_update(z_ref_generated, eps_ref, t, spec.noise);
            }
            if (!all_finite(z.data)) throw NumericError("non-finite target latent");
            return 0;
        });
    }
    result.latent = std::move(z);
    return result;
}

LatentVideo plain_generate(const RunSpec& spec) {
    spec.validate();
    const auto& model = spec.model;
    LatentVideo z = initial_target_noise(spec);
    for (int t = spec.schedule.T; t >= 1; --t) {
        if (spec.init_frame) pin_first_frame(z, *spec.init_frame);
        with_context(t, std::nullopt, [&] {
            const ModelOutput out = model_forward(map_to_hidden(z, spec.target_prompt, model), model.blocks);
            z = denoise_update(z, detokenize(out.hidden.video, spec.layout, model.project), t, spec.noise);
            return 0;
        });
    }
    return z;
}

}  // namespace lmp
