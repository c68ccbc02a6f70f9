#pragma once
/// Bus symbol primitives: the two wire levels and the wired-AND medium rule.

#include <cstdint>

namespace cantap {

/// Simulation time in bit-times. One tick == one bit on the wire.
using Tick = std::uint64_t;

/// Physical level of one bit-time. Dominant (logical 0) always wins the
/// wired-AND resolution against Recessive (logical 1); an idle line is
/// Recessive.
enum class Level : std::uint8_t { Dominant = 0, Recessive = 1 };

/// Wired-AND of two drivers: Dominant iff at least one side drives Dominant.
[[nodiscard]] constexpr Level wired_and(Level a, Level b) noexcept {
    return (a == Level::Dominant || b == Level::Dominant) ? Level::Dominant : Level::Recessive;
}

/// Logical bit value of a level: Dominant = 0, Recessive = 1.
[[nodiscard]] constexpr int logic(Level l) noexcept { return l == Level::Recessive ? 1 : 0; }

/// Level carrying the logical bit value `bit` (0 → Dominant, nonzero → Recessive).
[[nodiscard]] constexpr Level level_of(int bit) noexcept {
    return bit != 0 ? Level::Recessive : Level::Dominant;
}

[[nodiscard]] constexpr char to_char(Level l) noexcept { return l == Level::Recessive ? '1' : '0'; }

} // namespace cantap
