#pragma once

#include <filesystem>
#include <iosfwd>

#include "dnnsr/network_params.hpp"

namespace dnnsr {

/// Binary layout, all integers and reals little-endian:
///   8 bytes  magic "DNNSRCKP"
///   u32      format version (kCheckpointVersion)
///   u32      number of layer widths L
///   L x u64  layer widths d_0 .. d_{l+1}
///   u8       hidden activation tag, u8 output activation tag
///   f64 x P  parameters in flatten() order
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const NetworkParams& params, std::ostream& out);
void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path);

/// Throws FormatError on a wrong magic string, unknown version, bad activation
/// tag, truncation or trailing bytes.
NetworkParams load_checkpoint(std::istream& in);
NetworkParams load_checkpoint(const std::filesystem::path& path);

}  // namespace dnnsr
