// SPDX-License-Identifier: Apache-2.0
#include "lmp/lmpt.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace lmp {

namespace {

constexpr std::array<char, 4> kMagic{'L', 'M', 'P', 'T'};
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b.data(), b.size());
}

std::uint64_t get_u64(const unsigned char* b) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

void read_exact(std::istream& in, void* dst, std::size_t n, const char* what) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw IoError(std::string("LMPT: truncated ") + what);
}

}  // namespace

std::uint64_t Tensor::element_count() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

void write_lmpt(std::ostream& out, const Tensor& t) {
    if (t.dims.size() > 255) throw ShapeError("LMPT: rank exceeds 255");
    if (t.element_count() != t.values.size()) throw ShapeError("LMPT: dims do not match payload length");
    out.write(kMagic.data(), kMagic.size());
    const std::array<char, 4> head{static_cast<char>(kLmptVersion), static_cast<char>(kLmptDtypeF32),
                                   static_cast<char>(t.dims.size()), 0};
    out.write(head.data(), head.size());
    for (auto d : t.dims) put_u64(out, d);
    std::string payload(t.values.size() * 4, '\0');
    for (std::size_t i = 0; i < t.values.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(t.values[i]);
        for (int k = 0; k < 4; ++k) payload[i * 4 + k] = static_cast<char>((bits >> (8 * k)) & 0xff);
    }
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

Tensor read_lmpt(std::istream& in) {
    std::array<unsigned char, 8> head{};
    read_exact(in, head.data(), head.size(), "header");
    if (!std::equal(kMagic.begin(), kMagic.end(), head.begin(), [](char a, unsigned char b) {
            return static_cast<unsigned char>(a) == b;
        }))
        throw IoError("LMPT: bad magic");
    if (head[4] != kLmptVersion) throw IoError("LMPT: unsupported version " + std::to_string(head[4]));
    if (head[5] != kLmptDtypeF32) throw IoError("LMPT: unsupported dtype " + std::to_string(head[5]));
    Tensor t;
    t.dims.resize(head[6]);
    std::uint64_t count = 1;
    for (auto& d : t.dims) {
        std::array<unsigned char, 8> b{};
        read_exact(in, b.data(), b.size(), "dims");
        d = get_u64(b.data());
        if (d != 0 && count > kMaxElements / d) throw IoError("LMPT: tensor too large");
        count *= d;
    }
    std::string payload(count * 4, '\0');
    read_exact(in, payload.data(), payload.size(), "payload");
    t.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits = 0;
        for (int k = 3; k >= 0; --k) bits = (bits << 8) | static_cast<unsigned char>(payload[i * 4 + k]);
        t.values[i] = std::bit_cast<float>(bits);
    }
    return t;
}

std::vector<Tensor> read_lmpt_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<Tensor> records;
    while (in.peek() != std::char_traits<char>::eof()) records.push_back(read_lmpt(in));
    if (records.empty()) throw IoError("LMPT: empty file " + path.string());
    return records;
}

void write_lmpt_file(const std::filesystem::path& path, std::span<const Tensor> records) {
    std::ostringstream buf(std::ios::binary);
    for (const auto& r : records) write_lmpt(buf, r);
    atomic_write(path, buf.str());
}

void atomic_write(const std::filesystem::path& path, std::string_view bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot rename onto " + path.string());
    }
}

Tensor to_tensor(const LatentVideo& v) {
    Tensor t{{v.frames, v.height, v.width, v.channels}, {}};
    t.values.assign(v.data.begin(), v.data.end());
    return t;
}

Tensor to_tensor(const Matrix& m) {
    Tensor t{{m.rows, m.cols}, {}};
    t.values.assign(m.data.begin(), m.data.end());
    return t;
}

Tensor to_tensor(std::span<const double> values) {
    Tensor t{{values.size()}, {}};
    t.values.assign(values.begin(), values.end());
    return t;
}

Tensor to_tensor(std::span<const std::size_t> indices) {
    Tensor t{{indices.size()}, {}};
    t.values.reserve(indices.size());
    for (auto i : indices) {
        if (i >= (std::size_t{1} << 24)) throw ShapeError("LMPT: index not exactly representable as f32");
        t.values.push_back(static_cast<float>(i));
    }
    return t;
}

LatentVideo latent_from_tensor(const Tensor& t) {
    if (t.dims.size() != 4) throw IoError("expected a rank-4 latent tensor, got rank " + std::to_string(t.dims.size()));
    LatentVideo v(t.dims[0], t.dims[1], t.dims[2], t.dims[3]);
    v.data.assign(t.values.begin(), t.values.end());
    return v;
}

Matrix matrix_from_tensor(const Tensor& t) {
    if (t.dims.size() != 2) throw IoError("expected a rank-2 tensor, got rank " + std::to_string(t.dims.size()));
    Matrix m(t.dims[0], t.dims[1]);
    m.data.assign(t.values.begin(), t.values.end());
    return m;
}

std::vector<double> vector_from_tensor(const Tensor& t) {
    if (t.dims.size() != 1) throw IoError("expected a rank-1 tensor, got rank " + std::to_string(t.dims.size()));
    return {t.values.begin(), t.values.end()};
}

std::vector<std::size_t> indices_from_tensor(const Tensor& t) {
    std::vector<std::size_t> out;
    out.reserve(t.values.size());
    for (double v : vector_from_tensor(t)) {
        if (!(v >= 0.0) || std::floor(v) != v) throw IoError("index tensor holds a non-integer value");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

}  // namespace lmp
