#pragma once
/// CRC-15 over the frame prefix, ISO 11898 generator
/// x^15 + x^14 + x^10 + x^8 + x^7 + x^4 + x^3 + 1 (0x4599 without the top term),
/// initial register value 0, fed MSB-first with logical bit values.

#include <cstdint>
#include <vector>

#include "bits.hpp"

namespace cantap {

class Crc15 {
public:
    static constexpr std::uint32_t kGenerator = 0x4599;

    /// Shift one logical bit (0 or 1) into the register.
    constexpr void feed(int bit) noexcept {
        const std::uint32_t next = (static_cast<std::uint32_t>(bit) ^ (reg_ >> 14)) & 1u;
        reg_ = (reg_ << 1) & 0x7FFFu;
        if (next != 0) {
            reg_ ^= kGenerator;
        }
    }

    constexpr void feed(Level l) noexcept { feed(logic(l)); }

    [[nodiscard]] constexpr std::uint16_t value() const noexcept {
        return static_cast<std::uint16_t>(reg_);
    }

    constexpr void reset() noexcept { reg_ = 0; }

private:
    std::uint32_t reg_ = 0;
};

/// One-shot CRC of a logical bit sequence.
[[nodiscard]] inline std::uint16_t crc15(const std::vector<int>& bits) noexcept {
    Crc15 c;
    for (const int b : bits) {
        c.feed(b);
    }
    return c.value();
}

} // namespace cantap
