// SPDX-License-Identifier: Apache-2.0
#include "lmp/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lmp/lmpt.hpp"
#include "lmp/rng.hpp"

namespace lmp {

namespace {

using json = nlohmann::json;

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

const json& object_or_empty(const json& j, const char* key) {
    static const json empty = json::object();
    if (!j.contains(key)) return empty;
    if (!j.at(key).is_object()) throw ConfigError(std::string("field '") + key + "' must be an object");
    return j.at(key);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

LatentVideo load_latent(const std::filesystem::path& path) {
    const auto records = read_lmpt_file(path);
    if (records.size() != 1) throw IoError(path.string() + ": expected a single latent record");
    return latent_from_tensor(records[0]);
}

PromptTokens parse_prompt(const json& j, const char* key, const std::filesystem::path& base, std::size_t width,
                          std::uint64_t seed, std::uint64_t stream_id) {
    if (!j.contains(key)) throw ConfigError(std::string("missing '") + key + "'");
    const json& p = j.at(key);
    PromptTokens out;
    out.subject_indices = get_or<std::vector<std::size_t>>(p, "subject_indices", {});
    if (p.contains("tokens")) {
        const auto records = read_lmpt_file(resolve(base, p.at("tokens").get<std::string>()));
        out.tokens = matrix_from_tensor(records.at(0));
    } else {
        const auto length = get_or<std::size_t>(p, "length", 6);
        if (length == 0) throw ConfigError(std::string(key) + ": length must be >= 1");
        Rng rng = make_rng(seed, Stream::prompts, stream_id);
        out.tokens = random_normal(length, width, rng);
    }
    try {
        out.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
    }
    return out;
}

}  // namespace

static RunSpec parse_run_spec_impl(const std::string& json_text, const std::filesystem::path& base_dir,
                            std::optional<std::uint64_t> seed_override) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be an object");

    RunSpec spec;
    const json& sched = object_or_empty(j, "schedule");
    auto& cfg = spec.schedule;
    cfg.T = get_or(sched, "T", cfg.T);
    cfg.T1 = get_or(sched, "T1", cfg.T1);
    cfg.T2 = get_or(sched, "T2", cfg.T2);
    cfg.T3 = get_or(sched, "T3", cfg.T3);
    cfg.lambda = get_or(sched, "lambda", cfg.lambda);
    cfg.beta = get_or(sched, "beta", cfg.beta);
    cfg.seed = seed_override.value_or(get_or<std::uint64_t>(j, "seed", 0));
    cfg.validate();
    spec.gates = parse_gate_interpretation(get_or<std::string>(sched, "gate_interpretation", "literal"));
    spec.noise = make_noise_schedule(cfg.T, get_or(sched, "abar_final", 0.01), get_or(sched, "beta_min", 1e-4));
    spec.blend = make_blend_schedule(cfg.T, get_or<std::string>(j, "blend", "linear"), &spec.noise);

    if (get_or<std::string>(j, "saliency_averaging", "equal") != "equal")
        throw ConfigError("saliency_averaging: only 'equal' (all blocks weighted equally) is supported");

    const json& model = object_or_empty(j, "model");
    if (model.contains("weights")) {
        spec.model = load_model_weights(resolve(base_dir, model.at("weights").get<std::string>()));
    } else {
        ModelDims dims;
        dims.blocks = get_or(model, "blocks", dims.blocks);
        dims.heads = get_or(model, "heads", dims.heads);
        dims.width = get_or(model, "width", dims.width);
        dims.head_width = get_or(model, "head_width", dims.head_width);
        dims.channels = get_or(model, "channels", dims.channels);
        if (dims.blocks == 0 || dims.heads == 0 || dims.width == 0 || dims.head_width == 0 || dims.channels == 0)
            throw ConfigError("model dimensions must be >= 1");
        spec.model = make_model_weights(get_or<std::uint64_t>(model, "seed", 0), dims);
    }

    const json& latent = object_or_empty(j, "latent");
    spec.layout = {get_or<std::size_t>(latent, "frames", 8), get_or<std::size_t>(latent, "height", 8),
                   get_or<std::size_t>(latent, "width", 8)};
    if (spec.layout.token_count() == 0) throw ConfigError("latent dimensions must be >= 1");

    spec.target_prompt = parse_prompt(j, "target_prompt", base_dir, spec.model.dims.width, cfg.seed, 0);
    spec.reference_prompt = parse_prompt(j, "reference_prompt", base_dir, spec.model.dims.width, cfg.seed, 1);

    const json& ref = object_or_empty(j, "reference");
    const auto source = get_or<std::string>(ref, "source", "generated");
    if (source == "file") {
        if (!ref.contains("path")) throw ConfigError("reference.source 'file' needs a path");
        spec.reference_latent = load_latent(resolve(base_dir, ref.at("path").get<std::string>()));
    } else if (source != "generated") {
        throw ConfigError("reference.source must be 'generated' or 'file'");
    }
    if (j.contains("init_frame")) spec.init_frame = load_latent(resolve(base_dir, j.at("init_frame").get<std::string>()));

    const json& fbdm = object_or_empty(j, "fbdm");
    const auto policy = get_or<std::string>(fbdm, "policy", "top_fraction");
    if (policy == "top_fraction")
        spec.fbdm_policy = SelectionPolicy::top_fraction(get_or(fbdm, "q", 0.25));
    else if (policy == "threshold")
        spec.fbdm_policy = SelectionPolicy::threshold(get_or(fbdm, "tau", 0.5));
    else
        throw ConfigError("fbdm.policy must be 'top_fraction' or 'threshold'");

    const json& asm_cfg = object_or_empty(j, "asm");
    spec.asm_enabled = get_or(asm_cfg, "enabled", true);
    spec.asm_fraction = get_or(asm_cfg, "fraction", 0.2);

    try {
        spec.validate();
    } catch (const ShapeError& e) {
        throw ConfigError(e.what());
    } catch (const NumericError& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

RunSpec parse_run_spec(const std::string& json_text, const std::filesystem::path& base_dir,
                       std::optional<std::uint64_t> seed_override) {
    try {
        return parse_run_spec_impl(json_text, base_dir, seed_override);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

RunSpec load_run_spec(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_run_spec(buf.str(), path.parent_path(), seed_override);
}

}  // namespace lmp
