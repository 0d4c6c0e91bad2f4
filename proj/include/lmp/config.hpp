// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON run configuration. Tensor inputs are referenced by path (LMPT files);
// relative paths resolve against the config file's directory.
//
// {
//   "seed": 7,
//   "schedule": {"T": 50, "T1": 40, "T2": 45, "T3": 35, "lambda": 0.98, "beta": 100,
//                "gate_interpretation": "literal", "abar_final": 0.01, "beta_min": 1e-4},
//   "blend": "linear",
//   "model": {"blocks": 4, "heads": 2, "width": 16, "head_width": 8, "channels": 4,
//             "seed": 0, "weights": "weights.lmpt"},
//   "latent": {"frames": 8, "height": 8, "width": 8},
//   "target_prompt": {"length": 6, "subject_indices": [1], "tokens": "target_prompt.lmpt"},
//   "reference_prompt": {"length": 6, "subject_indices": [2]},
//   "reference": {"source": "generated"} | {"source": "file", "path": "ref.lmpt"},
//   "init_frame": "frame0.lmpt",
//   "fbdm": {"policy": "top_fraction", "q": 0.25} | {"policy": "threshold", "tau": 0.5},
//   "asm": {"enabled": true, "fraction": 0.2},
//   "saliency_averaging": "equal"
// }
//
// Every field except the prompts' subject_indices has a default.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "lmp/pipeline.hpp"

namespace lmp {

/// Throws ConfigError for malformed or invalid content, IoError when a
/// referenced tensor file cannot be read.
RunSpec parse_run_spec(const std::string& json_text, const std::filesystem::path& base_dir,
                       std::optional<std::uint64_t> seed_override = std::nullopt);
RunSpec load_run_spec(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace lmp
