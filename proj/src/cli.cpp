// SPDX-License-Identifier: Apache-2.0
#include "lmp/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "acceptance/criteria.hpp"
#include "lmp/config.hpp"
#include "lmp/dump.hpp"
#include "lmp/lmpt.hpp"
#include "lmp/pipeline.hpp"
#include "lmp/rng.hpp"

namespace lmp::cli {

namespace fs = std::filesystem;

namespace {

struct GenerateArgs {
    std::string config;
    std::string out_dir = "lmp_out";
    bool dump_attn = false;
    bool dump_saliency = false;
    bool trace_gates = false;
};

struct InspectArgs {
    std::vector<std::string> dumps;
    std::vector<std::size_t> subjects;
    std::string out_dir = "lmp_inspect";
    std::string policy = "top_fraction";
    double q = 0.25;
    double tau = 0.5;
};

struct NoiseArgs {
    std::string video;
    std::string out;
    int t = 0;
    int steps = 50;
    std::string blend = "linear";
    double abar_final = 0.01;
    std::uint64_t seed = 0;
};

std::optional<std::uint64_t> env_seed() {
    const char* v = std::getenv("LMP_SEED");
    if (v == nullptr || *v == '\0') return std::nullopt;
    try {
        std::size_t used = 0;
        const auto seed = std::stoull(v, &used);
        if (used != std::string(v).size()) throw std::invalid_argument(v);
        return seed;
    } catch (const std::exception&) {
        throw ConfigError(std::string("LMP_SEED is not an unsigned integer: ") + v);
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

int generate(const GenerateArgs& args, std::ostream& out) {
    const RunSpec spec = load_run_spec(args.config, env_seed());
    const fs::path dir(args.out_dir);
    ensure_dir(dir);

    RunObserver observer;
    if (args.dump_attn) {
        observer.on_attention = [&](int t, std::size_t block, Branch branch, const AttentionMap& map) {
            const auto name = branch == Branch::target ? attention_dump_name(t, block)
                                                       : reference_attention_dump_name(t, block);
            write_attention_dump(dir / name, map, spec.layout);
        };
    }
    if (args.dump_saliency) {
        observer.on_mask = [&](int t, const SaliencyVolume& saliency, const ForegroundMask& mask) {
            write_saliency(dir / ("saliency_t" + std::to_string(t) + ".lmpt"), saliency);
            write_mask(dir / ("mask_t" + std::to_string(t) + ".lmpt"), mask);
        };
    }
    const RunResult result = lmp_generate(spec, observer);

    write_lmpt_file(dir / "z0.lmpt", to_tensor(result.latent));
    atomic_write(dir / "gates.csv", result.gates.to_csv());
    atomic_write(dir / "asm_loss.csv", result.asm_loss_csv());
    if (args.trace_gates) {
        std::string hooks = "t,block,hooks\n";
        for (const auto& s : result.gates.steps)
            for (std::size_t b = 0; b < s.block_hooks.size(); ++b)
                hooks += std::to_string(s.t) + "," + std::to_string(b) + "," + s.block_hooks[b] + "\n";
        atomic_write(dir / "gate_hooks.csv", hooks);
        out << result.gates.to_csv();
    }
    out << "wrote " << (dir / "z0.lmpt").string() << "\n";
    return kOk;
}

int inspect(const InspectArgs& args, std::ostream& out, std::ostream& err) {
    std::vector<AttentionMap> maps;
    std::optional<TokenLayout> layout;
    for (const auto& path : args.dumps) {
        AttentionDump d = read_attention_dump(path);
        if (layout && *layout != d.layout) throw IoError(path + ": layout differs from earlier dumps");
        layout = d.layout;
        maps.push_back(std::move(d.map));
    }
    if (!layout) throw ConfigError("inspect: no dump files given");
    for (auto s : args.subjects)
        if (s >= maps.front().prompt_len)
            throw ConfigError("inspect: subject index " + std::to_string(s) + " out of range for prompt length " +
                              std::to_string(maps.front().prompt_len));
    SelectionPolicy policy;
    if (args.policy == "top_fraction")
        policy = SelectionPolicy::top_fraction(args.q);
    else if (args.policy == "threshold")
        policy = SelectionPolicy::threshold(args.tau);
    else
        throw ConfigError("inspect: unknown policy '" + args.policy + "'");

    const SaliencyVolume saliency =
        aggregate_subject_saliency(std::span<const AttentionMap>(maps), args.subjects, *layout);
    const ForegroundMask mask = select_foreground(saliency, policy);

    const fs::path dir(args.out_dir);
    ensure_dir(dir);
    const std::size_t per_frame = layout->frame_size();
    for (std::size_t f = 0; f < layout->frames; ++f) {
        const std::span<const double> frame(saliency.values.data() + f * per_frame, per_frame);
        const Heatmap heat = make_heatmap(frame, layout->height, layout->width);
        if (heat.constant) err << "warning: frame " << f << " saliency is constant; heatmap is all zeros\n";
        atomic_write(dir / ("saliency_f" + std::to_string(f) + ".pgm"), to_pgm(heat));
    }
    write_mask(dir / "mask.lmpt", mask);
    write_saliency(dir / "saliency.lmpt", saliency);
    out << "selected " << mask.indices.size() << " foreground tokens\n";
    return kOk;
}

int noise(const NoiseArgs& args, std::ostream& out) {
    const auto records = read_lmpt_file(args.video);
    if (records.size() != 1) throw IoError(args.video + ": expected a single latent record");
    const LatentVideo z0 = latent_from_tensor(records[0]);
    try {
        z0.validate();
    } catch (const ShapeError& e) {
        throw IoError(args.video + ": " + e.what());
    }
    const NoiseSchedule sched = make_noise_schedule(args.steps, args.abar_final);
    const BlendSchedule blend = make_blend_schedule(args.steps, args.blend, &sched);
    if (args.t < 0 || args.t > args.steps) throw ConfigError("noise: t must lie in [0, steps]");
    Rng rng = make_rng(args.seed, Stream::cli_noise);
    LatentVideo eps(z0.frames, z0.height, z0.width, z0.channels);
    for (double& v : eps.data) v = rng.normal();
    const LatentVideo zt = proportional_noise(z0, args.t, eps, blend);
    write_lmpt_file(args.out, to_tensor(zt));
    out << "wrote " << args.out << "\n";
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Zero-shot motion transfer on a toy joint-attention diffusion transformer", "lmp"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* gen_cmd = app.add_subcommand("generate", "Run the gated motion-transfer sampler from a JSON config");
    gen_cmd->add_option("config", gen.config, "Run config (JSON)")->required();
    gen_cmd->add_option("--out", gen.out_dir, "Output directory");
    gen_cmd->add_flag("--dump-attn", gen.dump_attn, "Write attention maps per (step, block)");
    gen_cmd->add_flag("--dump-saliency", gen.dump_saliency, "Write saliency volumes and masks per step");
    gen_cmd->add_flag("--trace-gates", gen.trace_gates, "Print the gate trace and write per-block hook order");

    InspectArgs insp;
    auto* insp_cmd = app.add_subcommand("inspect", "Saliency heatmaps and foreground mask from attention dumps");
    insp_cmd->add_option("dumps", insp.dumps, "Attention dump files (averaged)")->required();
    insp_cmd->add_option("--subjects", insp.subjects, "Subject prompt token indices")->required()->delimiter(',');
    insp_cmd->add_option("--out", insp.out_dir, "Output directory");
    insp_cmd->add_option("--policy", insp.policy, "top_fraction or threshold");
    insp_cmd->add_option("--q", insp.q, "Per-frame fraction for top_fraction");
    insp_cmd->add_option("--tau", insp.tau, "Relative threshold for threshold");

    NoiseArgs noi;
    auto* noise_cmd = app.add_subcommand("noise", "Proportionally noise a real reference latent to step t");
    noise_cmd->add_option("video", noi.video, "Input latent (LMPT, rank 4)")->required();
    noise_cmd->add_option("--t", noi.t, "Target step")->required();
    noise_cmd->add_option("--out", noi.out, "Output latent path")->required();
    noise_cmd->add_option("--steps", noi.steps, "Total steps T");
    noise_cmd->add_option("--blend", noi.blend, "linear or sqrt_abar");
    noise_cmd->add_option("--abar-final", noi.abar_final, "abar_T of the noise schedule (sqrt_abar blend)");
    noise_cmd->add_option("--seed", noi.seed, "Noise seed");

    auto* self_cmd = app.add_subcommand("selftest", "Run the oracle and acceptance suites");

    std::vector<const char*> argv{"lmp"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        if (gen_cmd->parsed()) return generate(gen, out);
        if (insp_cmd->parsed()) return inspect(insp, out, err);
        if (noise_cmd->parsed()) return noise(noi, out);
        if (self_cmd->parsed()) return acceptance::run_all(out) ? kOk : kFailure;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ShapeError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kIoError;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kNumericError;
    }
    return kFailure;
}

}  // namespace lmp::cli
