#pragma once

#include <string>

#include "visco2d/state.hpp"

namespace visco2d {

/// Binary checkpoint, little-endian on every host:
///   magic "VD2D" | version u32 | n u32 | t f64 | delta f64
/// followed by six row-major f64 grids in order u1, u2, F11, F12, F21, F22.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::string& path, const SimState& s);

/// Throws BadArtifact on magic/version/size mismatch, IoError on read failure.
SimState read_checkpoint(const std::string& path, Dealias dealias = Dealias::two_thirds);

}  // namespace visco2d
