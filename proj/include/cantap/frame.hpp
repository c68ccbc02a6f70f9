#pragma once
/// Data-frame layout and codec: field widths, serialization to logical bits,
/// bit stuffing, and the fully tagged wire sequence a transmitter drives.
///
/// Layout (standard data frames only, bit counts):
///   SOF=1, ID=11, RTR=1, IDE=1, r0=1, DLC=4, Data=8*dlc, CRC=15   <- stuffed region
///   CRC DEL=1, ACK=1, EOF=7                                       <- fixed-form trailer
///   IFS=3                                                         <- nobody drives
/// RTR, IDE and r0 are always Dominant; CRC DEL and EOF are Recessive; the
/// transmitter leaves the ACK slot Recessive for receivers to overwrite.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bits.hpp"
#include "crc.hpp"

namespace cantap {

/// Logical CAN data frame before bit-level serialization.
struct Frame {
    std::uint16_t id = 0;               ///< 11-bit identifier
    std::uint8_t dlc = 0;               ///< payload length in bytes, 0..8
    std::array<std::uint8_t, 8> data{}; ///< payload, data[0..dlc-1] meaningful

    [[nodiscard]] bool operator==(const Frame& o) const noexcept {
        if (id != o.id || dlc != o.dlc) {
            return false;
        }
        for (std::uint8_t i = 0; i < dlc; ++i) {
            if (data[i] != o.data[i]) {
                return false;
            }
        }
        return true;
    }
};

/// Classification of every position in a frame (and of the bus between frames).
enum class FrameField : std::uint8_t {
    Idle,
    Sof,
    Id,
    Rtr,
    Ide,
    R0,
    Dlc,
    Data,
    Crc,
    CrcDel,
    Ack,
    Eof,
    Intermission,
    ErrorRecovery,    // after a detected violation: flag bits, then delimiter
    OverloadRecovery, // after an overload trigger: flag bits, then delimiter
};

[[nodiscard]] constexpr bool in_stuffed_region(FrameField f) noexcept {
    return f >= FrameField::Sof && f <= FrameField::Crc;
}

constexpr std::size_t kIdBits = 11;
constexpr std::size_t kDlcBits = 4;
constexpr std::size_t kCrcBits = 15;
constexpr std::size_t kEofBits = 7;
constexpr std::size_t kIfsBits = 3;
constexpr std::size_t kErrorFlagBits = 6;
constexpr std::size_t kErrorDelimiterBits = 8;
constexpr std::uint16_t kMaxId = 0x7FF;

/// Pre-stuffing length of the stuffed region (SOF..CRC) for a given dlc.
[[nodiscard]] constexpr std::size_t unstuffed_length(std::uint8_t dlc) noexcept {
    return 1 + kIdBits + 3 + kDlcBits + 8u * dlc + kCrcBits;
}

/// Trailer bits the transmitter still drives after CRC: CRC DEL + ACK + EOF.
constexpr std::size_t kDrivenTrailerBits = 1 + 1 + kEofBits;

inline void validate(const Frame& f) {
    if (f.id > kMaxId) {
        throw std::invalid_argument("frame id exceeds 11 bits");
    }
    if (f.dlc > 8) {
        throw std::invalid_argument("frame dlc exceeds 8");
    }
}

namespace detail {
inline void push_value(std::vector<int>& bits, std::uint32_t v, std::size_t width) {
    for (std::size_t i = width; i-- > 0;) {
        bits.push_back(static_cast<int>((v >> i) & 1u));
    }
}
} // namespace detail

/// SOF..Data prefix as logical bits (the CRC input).
[[nodiscard]] inline std::vector<int> header_body_bits(const Frame& f) {
    validate(f);
    std::vector<int> bits;
    bits.reserve(unstuffed_length(f.dlc) - kCrcBits);
    bits.push_back(0); // SOF
    detail::push_value(bits, f.id, kIdBits);
    bits.push_back(0); // RTR: data frame
    bits.push_back(0); // IDE: standard id
    bits.push_back(0); // r0: reserved dominant
    detail::push_value(bits, f.dlc, kDlcBits);
    for (std::uint8_t i = 0; i < f.dlc; ++i) {
        detail::push_value(bits, f.data[i], 8);
    }
    return bits;
}

[[nodiscard]] inline std::uint16_t frame_crc(const Frame& f) {
    Crc15 c;
    for (const int b : header_body_bits(f)) {
        c.feed(b);
    }
    return c.value();
}

/// SOF..CRC as logical bits, before stuffing.
[[nodiscard]] inline std::vector<int> unstuffed_bits(const Frame& f) {
    std::vector<int> bits = header_body_bits(f);
    detail::push_value(bits, frame_crc(f), kCrcBits);
    return bits;
}

/// Result of stuffing: the expanded bit sequence plus which indices are stuff bits.
struct Stuffed {
    std::vector<int> bits;
    std::vector<std::size_t> stuff_positions;
};

/// Insert a complement bit after every run of 5 identical bits. The inserted
/// bit participates in subsequent run counting (so stuff bits can cascade).
[[nodiscard]] inline Stuffed stuff(const std::vector<int>& raw) {
    Stuffed out;
    out.bits.reserve(raw.size() + raw.size() / 5);
    int run_bit = -1;
    std::size_t run_len = 0;
    for (const int b : raw) {
        out.bits.push_back(b);
        if (b == run_bit) {
            ++run_len;
        } else {
            run_bit = b;
            run_len = 1;
        }
        if (run_len == 5) {
            out.stuff_positions.push_back(out.bits.size());
            out.bits.push_back(1 - run_bit);
            run_bit = 1 - run_bit;
            run_len = 1;
        }
    }
    return out;
}

/// Thrown by destuff when a 6-run of identical bits appears in the stuffed
/// region — exactly the shape an error flag imposes.
struct StuffViolation : std::runtime_error {
    explicit StuffViolation(std::size_t at)
        : std::runtime_error("stuff rule violated (6-run)"), index(at) {}
    std::size_t index;
};

/// Remove stuff bits; inverse of stuff() for violation-free input.
[[nodiscard]] inline std::vector<int> destuff(const std::vector<int>& stuffed) {
    std::vector<int> out;
    out.reserve(stuffed.size());
    int run_bit = -1;
    std::size_t run_len = 0;
    for (std::size_t i = 0; i < stuffed.size(); ++i) {
        const int b = stuffed[i];
        if (run_len == 5) {
            // this position must be a stuff bit: the complement of the run
            if (b == run_bit) {
                throw StuffViolation(i);
            }
            run_bit = b;
            run_len = 1;
            continue; // consumed silently
        }
        out.push_back(b);
        if (b == run_bit) {
            ++run_len;
        } else {
            run_bit = b;
            run_len = 1;
        }
    }
    return out;
}

/// One position of the transmitter's drive plan.
struct WireBit {
    Level level;
    FrameField field; ///< stuff bits inherit the field they appear in
    bool stuff;
};

/// Everything the transmitter drives for one frame, in order: the stuffed
/// SOF..CRC region followed by CRC DEL, ACK (left Recessive) and 7 EOF bits.
/// The 3 IFS bits are not driven and therefore not part of the plan.
[[nodiscard]] inline std::vector<WireBit> wire_sequence(const Frame& f) {
    validate(f);
    std::vector<WireBit> out;
    out.reserve(unstuffed_length(f.dlc) + unstuffed_length(f.dlc) / 5 + kDrivenTrailerBits);

    // field tag for each unstuffed index
    const std::size_t data_bits = 8u * f.dlc;
    auto field_at = [&](std::size_t i) {
        if (i == 0) return FrameField::Sof;
        if (i < 1 + kIdBits) return FrameField::Id;
        if (i == 12) return FrameField::Rtr;
        if (i == 13) return FrameField::Ide;
        if (i == 14) return FrameField::R0;
        if (i < 15 + kDlcBits) return FrameField::Dlc;
        if (i < 19 + data_bits) return FrameField::Data;
        return FrameField::Crc;
    };

    const std::vector<int> raw = unstuffed_bits(f);
    int run_bit = -1;
    std::size_t run_len = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const int b = raw[i];
        out.push_back({level_of(b), field_at(i), false});
        if (b == run_bit) {
            ++run_len;
        } else {
            run_bit = b;
            run_len = 1;
        }
        if (run_len == 5) {
            out.push_back({level_of(1 - run_bit), field_at(i), true});
            run_bit = 1 - run_bit;
            run_len = 1;
        }
    }
    out.push_back({Level::Recessive, FrameField::CrcDel, false});
    out.push_back({Level::Recessive, FrameField::Ack, false});
    for (std::size_t i = 0; i < kEofBits; ++i) {
        out.push_back({Level::Recessive, FrameField::Eof, false});
    }
    return out;
}

} // namespace cantap
