#pragma once

#include <optional>
#include <string_view>

namespace kljn {

// Which wire-voltage value is attributed to a current zero crossing between
// samples k and k+1.
enum class ZcMode {
    interpolated,   // u_c linearly interpolated to the instant where interpolated i_c is zero
    sample_before,  // u_c[k]
    sample_after,   // u_c[k+1]
    nearest,        // u_c at whichever of k, k+1 has the smaller |i_c|
};

std::string_view to_string(ZcMode mode);
std::optional<ZcMode> parse_zc_mode(std::string_view text);

}  // namespace kljn
