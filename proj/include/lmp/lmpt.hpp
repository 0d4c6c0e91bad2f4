// SPDX-License-Identifier: Apache-2.0
#pragma once

// LMPT binary tensor records:
//   "LMPT" | u8 version (1) | u8 dtype (1 = f32 LE) | u8 rank | u8 pad
//   rank x u64 LE dims | payload (f32 LE, row-major)
// A file may hold several records back to back (model weights, attention dumps).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "lmp/latent.hpp"
#include "lmp/tensor.hpp"

namespace lmp {

inline constexpr std::uint8_t kLmptVersion = 1;
inline constexpr std::uint8_t kLmptDtypeF32 = 1;

struct Tensor {
    std::vector<std::uint64_t> dims;
    std::vector<float> values;

    std::uint64_t element_count() const;
    bool operator==(const Tensor&) const = default;
};

void write_lmpt(std::ostream& out, const Tensor& t);
// Throws IoError on bad magic/version/dtype or truncation.
Tensor read_lmpt(std::istream& in);

std::vector<Tensor> read_lmpt_file(const std::filesystem::path& path);
void write_lmpt_file(const std::filesystem::path& path, std::span<const Tensor> records);
inline void write_lmpt_file(const std::filesystem::path& path, const Tensor& record) {
    write_lmpt_file(path, std::span<const Tensor>(&record, 1));
}

/// Writes to a sibling temp file, then renames over the target.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

Tensor to_tensor(const LatentVideo& v);
Tensor to_tensor(const Matrix& m);
Tensor to_tensor(std::span<const double> values);
Tensor to_tensor(std::span<const std::size_t> indices);

LatentVideo latent_from_tensor(const Tensor& t);
Matrix matrix_from_tensor(const Tensor& t);
std::vector<double> vector_from_tensor(const Tensor& t);
// Rejects values that are not exact non-negative integers.
std::vector<std::size_t> indices_from_tensor(const Tensor& t);

}  // namespace lmp
