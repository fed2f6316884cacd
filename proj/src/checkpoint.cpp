#include "visco2d/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "visco2d/errors.hpp"

namespace visco2d {

namespace {

constexpr char kMagic[4] = {'V', 'D', '2', 'D'};

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
    const std::uint64_t u = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(u);
}

void put_grid(std::ostream& out, const ScalarField& f) {
    auto r = f.real();
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(r.data()),
                  static_cast<std::streamsize>(r.size() * sizeof(double)));
    } else {
        for (double v : r) put_f64(out, v);
    }
}

void get_grid(std::istream& in, ScalarField& f) {
    auto& r = f.mutable_real();
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(r.data()),
                static_cast<std::streamsize>(r.size() * sizeof(double)));
    } else {
        for (auto& v : r) v = get_f64(in);
    }
}

}  // namespace

void write_checkpoint(const std::string& path, const SimState& s) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out.write(kMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(s.grid().n));
    put_f64(out, s.t);
    put_f64(out, s.delta);
    put_grid(out, s.u.comp(0));
    put_grid(out, s.u.comp(1));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) put_grid(out, s.F.comp(i, j));
    out.flush();
    if (!out) throw IoError("write failed for checkpoint: " + path);
}

SimState read_checkpoint(const std::string& path, Dealias dealias) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw BadArtifact("bad checkpoint magic in " + path);
    const std::uint32_t version = get_u32(in);
    if (version != kCheckpointVersion)
        throw BadArtifact("unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t n = get_u32(in);
    if (n < 16 || n > 8192 || (n & (n - 1)) != 0)
        throw BadArtifact("implausible grid size in checkpoint: " + std::to_string(n));
    GridSpec grid{static_cast<int>(n), dealias};
    SimState s(grid);
    s.t = get_f64(in);
    s.delta = get_f64(in);
    get_grid(in, s.u.comp(0));
    get_grid(in, s.u.comp(1));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) get_grid(in, s.F.comp(i, j));
    if (!in) throw BadArtifact("checkpoint truncated: " + path);
    return s;
}

}  // namespace visco2d
