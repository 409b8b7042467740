#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace sempf {

// Why a PIE lost its slice. The first six abort construction; the last two
// are run-time resets of an armed slice.
enum class ResetCause : std::uint8_t {
  inconsistent,
  timeout,
  too_long,
  complex_instruction,
  too_many_temps,
  hash_collision,
  low_usefulness,
  repeated_address,
};
inline constexpr std::size_t kNumResetCauses = 8;

using AbortCause = ResetCause;

constexpr std::string_view to_string(ResetCause c) {
  constexpr std::array<std::string_view, kNumResetCauses> names = {
      "inconsistent",   "timeout",        "too_long",       "complex_instruction",
      "too_many_temps", "hash_collision", "low_usefulness", "repeated_address"};
  return names[static_cast<std::size_t>(c)];
}

}  // namespace sempf
