#pragma once
/// Incremental bus-bit decoder: one instance per observer (controller RX path,
/// bit-level attacker, officer). Consumes the resolved bus level once per tick
/// and reports what that bit was plus any protocol events it completes.
///
/// The decoder tracks the full medium life cycle: idle, frame fields with
/// stuff-bit removal and CRC checking, fixed-form trailer, intermission, and
/// the error/overload recovery phases (flag bits of arbitrary length followed
/// by an 8-bit recessive delimiter). It never drives the bus; reacting to the
/// events is the caller's job.

#include <cstdint>

#include "bits.hpp"
#include "crc.hpp"
#include "frame.hpp"

namespace cantap {

/// Event flags reported by BitDecoder::step (bitwise OR-able).
enum DecEvent : unsigned {
    kEvNone = 0,
    kEvSofSeen = 1u << 0,             ///< this bit starts a frame
    kEvArbitrationComplete = 1u << 1, ///< 11th ID bit consumed this tick
    kEvAckSlot = 1u << 2,             ///< this bit is the ACK slot
    kEvFrameComplete = 1u << 3,       ///< valid frame available via last_frame()
    kEvCrcMismatch = 1u << 4,         ///< received CRC != computed, reported at the first EOF bit
    kEvStuffViolation = 1u << 5,      ///< 6-run of identical bits inside the stuffed region
    kEvFormViolation = 1u << 6,       ///< Dominant in a fixed-form Recessive position
    kEvOverloadTrigger = 1u << 7,     ///< Dominant at the last EOF bit or at IFS bit 1/2
    kEvDelimiterDominant = 1u << 8,   ///< Dominant inside a delimiter: a fresh signaling cycle
    kEvBusFree = 1u << 9,             ///< next tick may carry a new SOF
    kEvErrorFlagShape = 1u << 10,     ///< the violating 6-run was all-Dominant (active flag shape)
};

constexpr unsigned kEvAnyViolation = kEvCrcMismatch | kEvStuffViolation | kEvFormViolation;

class BitDecoder {
public:
    /// What the bit consumed this tick was.
    struct Observation {
        FrameField field = FrameField::Idle;
        int index = 0;    ///< 0-based position within the field
        bool stuff = false;
        unsigned events = kEvNone;
    };

    /// Consume the resolved bus level for tick `now`. Call exactly once per tick.
    Observation step(Level lvl, Tick now) {
        Observation obs;
        switch (field_) {
        case FrameField::Idle:
            if (lvl == Level::Dominant) {
                begin_frame(now, obs);
            } else {
                obs.field = FrameField::Idle;
                obs.events |= kEvBusFree;
            }
            break;

        case FrameField::Id:
        case FrameField::Rtr:
        case FrameField::Ide:
        case FrameField::R0:
        case FrameField::Dlc:
        case FrameField::Data:
        case FrameField::Crc:
            step_stuffed(lvl, now, obs);
            break;

        case FrameField::CrcDel:
            obs.field = FrameField::CrcDel;
            if (lvl == Level::Dominant) {
                obs.events |= kEvFormViolation;
                enter_recovery(FrameField::ErrorRecovery);
            } else {
                field_ = FrameField::Ack;
            }
            break;

        case FrameField::Ack:
            obs.field = FrameField::Ack;
            obs.events |= kEvAckSlot;
            acked_ = (lvl == Level::Dominant);
            field_ = FrameField::Eof;
            idx_ = 0;
            break;

        case FrameField::Eof:
            obs.field = FrameField::Eof;
            obs.index = idx_;
            if (idx_ == 0 && crc_received_ != crc_computed_) {
                obs.events |= kEvCrcMismatch;
                enter_recovery(FrameField::ErrorRecovery);
                break;
            }
            if (lvl == Level::Dominant) {
                if (idx_ < 6) {
                    obs.events |= kEvFormViolation;
                    enter_recovery(FrameField::ErrorRecovery);
                } else {
                    // Dominant in the very last EOF bit: the frame already
                    // counts as received, but the bus reacts with overload
                    // signaling (and the transmitter with a bit error).
                    finalize_frame(now, obs);
                    obs.events |= kEvOverloadTrigger;
                    enter_recovery(FrameField::OverloadRecovery);
                }
            } else if (++idx_ == static_cast<int>(kEofBits)) {
                finalize_frame(now, obs);
                field_ = FrameField::Intermission;
                idx_ = 0;
            }
            break;

        case FrameField::Intermission:
            obs.field = FrameField::Intermission;
            obs.index = idx_;
            if (lvl == Level::Dominant) {
                if (idx_ < 2) {
                    obs.events |= kEvOverloadTrigger;
                    enter_recovery(FrameField::OverloadRecovery);
                } else {
                    begin_frame(now, obs); // a Dominant third IFS bit counts as SOF
                }
            } else if (++idx_ == static_cast<int>(kIfsBits)) {
                obs.events |= kEvBusFree;
                field_ = FrameField::Idle;
            }
            break;

        case FrameField::ErrorRecovery:
        case FrameField::OverloadRecovery:
            obs.field = field_;
            if (!in_delimiter_) {
                if (lvl == Level::Recessive) {
                    in_delimiter_ = true;
                    delim_count_ = 1;
                }
                // Dominant bits here are (someone's) flag bits: skipped.
            } else if (lvl == Level::Recessive) {
                if (++delim_count_ == static_cast<int>(kErrorDelimiterBits)) {
                    field_ = FrameField::Intermission;
                    idx_ = 0;
                }
            } else {
                obs.events |= kEvDelimiterDominant;
                in_delimiter_ = false; // a new signaling cycle begins
            }
            break;

        case FrameField::Sof:
            break; // unreachable: Sof is consumed inside begin_frame
        }
        return obs;
    }

    // --- accessors ---------------------------------------------------------

    /// True when the next consumed bit will be the ACK slot.
    [[nodiscard]] bool next_is_ack() const noexcept { return field_ == FrameField::Ack; }

    /// Field the next consumed bit belongs to.
    [[nodiscard]] FrameField next_field() const noexcept { return field_; }

    /// 0-based index of the next bit within next_field().
    [[nodiscard]] int next_index() const noexcept { return idx_; }

    /// True while a frame is being decoded (SOF consumed, no terminal event yet).
    [[nodiscard]] bool frame_in_progress() const noexcept {
        return field_ >= FrameField::Id && field_ <= FrameField::Eof;
    }

    /// True once the 11 ID bits of the current frame were consumed.
    [[nodiscard]] bool arbitration_done() const noexcept {
        return frame_in_progress() && !(field_ == FrameField::Id);
    }

    /// ID of the frame currently on the bus (valid once arbitration_done()).
    [[nodiscard]] std::uint16_t current_id() const noexcept { return frame_.id; }

    /// Tick of the 11th ID bit of the current (or last) frame.
    [[nodiscard]] Tick arbitration_tick() const noexcept { return arb_tick_; }

    /// Received CRC matches the computed one (meaningful from CrcDel on).
    [[nodiscard]] bool crc_ok() const noexcept { return crc_received_ == crc_computed_; }

    /// Last completely received frame and its completion tick.
    [[nodiscard]] const Frame& last_frame() const noexcept { return last_frame_; }
    [[nodiscard]] Tick last_frame_tick() const noexcept { return last_frame_tick_; }
    [[nodiscard]] bool last_frame_acked() const noexcept { return last_frame_acked_; }

private:
    void begin_frame(Tick now, Observation& obs) {
        obs.field = FrameField::Sof;
        obs.events |= kEvSofSeen;
        frame_ = Frame{};
        crc_.reset();
        crc_.feed(0); // SOF participates in the CRC
        run_level_ = Level::Dominant;
        run_len_ = 1;
        data_bits_ = 0;
        crc_received_ = 0;
        crc_computed_ = 0;
        acked_ = false;
        sof_tick_ = now;
        field_ = FrameField::Id;
        idx_ = 0;
    }

    void enter_recovery(FrameField kind) {
        field_ = kind;
        in_delimiter_ = false;
        delim_count_ = 0;
    }

    void step_stuffed(Level lvl, Tick now, Observation& obs) {
        obs.field = field_;
        obs.index = idx_;
        if (run_len_ == 5) {
            if (lvl == run_level_) {
                // 6-run: stuff violation; an all-Dominant run has the shape
                // of an active error flag.
                obs.events |= kEvStuffViolation;
                if (lvl == Level::Dominant) {
                    obs.events |= kEvErrorFlagShape;
                }
                enter_recovery(FrameField::ErrorRecovery);
                return;
            }
            obs.stuff = true;
            run_level_ = lvl;
            run_len_ = 1;
            // A run ending exactly at the last CRC bit still forces one stuff
            // bit before the CRC delimiter; consume it, then leave the region.
            if (field_ == FrameField::Crc && idx_ == static_cast<int>(kCrcBits)) {
                field_ = FrameField::CrcDel;
                idx_ = 0;
            }
            return; // stuff bits carry no field content and no CRC input
        }
        if (lvl == run_level_) {
            ++run_len_;
        } else {
            run_level_ = lvl;
            run_len_ = 1;
        }

        const int bit = logic(lvl);
        if (field_ != FrameField::Crc) {
            crc_.feed(bit);
        }
        switch (field_) {
        case FrameField::Id:
            frame_.id = static_cast<std::uint16_t>((frame_.id << 1) | bit);
            if (++idx_ == static_cast<int>(kIdBits)) {
                obs.events |= kEvArbitrationComplete;
                arb_tick_ = now;
                field_ = FrameField::Rtr;
                idx_ = 0;
            }
            break;
        case FrameField::Rtr:
            field_ = FrameField::Ide;
            break;
        case FrameField::Ide:
            field_ = FrameField::R0;
            break;
        case FrameField::R0:
            field_ = FrameField::Dlc;
            idx_ = 0;
            break;
        case FrameField::Dlc:
            dlc_raw_ = static_cast<std::uint8_t>((dlc_raw_ << 1) | bit);
            if (++idx_ == static_cast<int>(kDlcBits)) {
                frame_.dlc = dlc_raw_ > 8 ? std::uint8_t{8} : dlc_raw_;
                dlc_raw_ = 0;
                idx_ = 0;
                if (frame_.dlc == 0) {
                    crc_computed_ = crc_.value();
                    field_ = FrameField::Crc;
                } else {
                    field_ = FrameField::Data;
                }
            }
            break;
        case FrameField::Data: {
            const int byte = idx_ / 8;
            frame_.data[static_cast<std::size_t>(byte)] =
                static_cast<std::uint8_t>((frame_.data[static_cast<std::size_t>(byte)] << 1) | bit);
            ++idx_;
            if (idx_ == 8 * static_cast<int>(frame_.dlc)) {
                crc_computed_ = crc_.value();
                field_ = FrameField::Crc;
                idx_ = 0;
            }
            break;
        }
        case FrameField::Crc:
            crc_received_ = static_cast<std::uint16_t>((crc_received_ << 1) | bit);
            if (++idx_ == static_cast<int>(kCrcBits) && run_len_ != 5) {
                field_ = FrameField::CrcDel;
                idx_ = 0;
            }
            break;
        default:
            break; // the remaining fields are not part of the stuffed region
        }
    }

    FrameField field_ = FrameField::Idle;
    int idx_ = 0;
    Level run_level_ = Level::Recessive;
    int run_len_ = 0;
    Crc15 crc_;
    std::uint16_t crc_computed_ = 0;
    std::uint16_t crc_received_ = 0;
    std::uint8_t dlc_raw_ = 0;
    int data_bits_ = 0;
    bool acked_ = false;
    Frame frame_{};
    Tick sof_tick_ = 0;
    Tick arb_tick_ = 0;
    Frame last_frame_{};
    Tick last_frame_tick_ = 0;
    bool last_frame_acked_ = false;
    bool in_delimiter_ = false;
    int delim_count_ = 0;

    void finalize_frame(Tick now, Observation& obs) {
        obs.events |= kEvFrameComplete;
        last_frame_ = frame_;
        last_frame_tick_ = now;
        last_frame_acked_ = acked_;
    }
};

} // namespace cantap
