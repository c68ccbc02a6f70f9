#pragma once
/// Conformant per-ECU CAN controller: FIFO transmit queue with schedules,
/// bitwise arbitration, bit-error detection, error/overload signaling,
/// TEC/REC bookkeeping with the error-active / error-passive / bus-off state
/// machine, automatic retransmission, and the observable CANTX pin level.
///
/// Counter rules: +8 per transmit error, +1 per receive error, -1 (floor 0)
/// per successful transmit/receive. Error-passive above counter 127; bus-off
/// above TEC 255, absorbing for the whole run (no recovery).

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "bits.hpp"
#include "decoder.hpp"
#include "frame.hpp"

namespace cantap {

enum class ErrorState : std::uint8_t { ErrorActive, ErrorPassive, BusOff };

/// Terminal (or intermediate, for ArbitrationLost) result of one wire attempt.
enum class TxOutcome : std::uint8_t { Delivered, ArbitrationLost, ErrorAborted, PreventedByOfficer };

[[nodiscard]] inline const char* outcome_name(TxOutcome o) noexcept {
    switch (o) {
    case TxOutcome::Delivered: return "Delivered";
    case TxOutcome::ArbitrationLost: return "ArbitrationLost";
    case TxOutcome::ErrorAborted: return "ErrorAborted";
    case TxOutcome::PreventedByOfficer: return "PreventedByOfficer";
    }
    return "?";
}

class CanController {
public:
    using ReceiveFn = std::function<void(const Frame&, Tick)>;
    /// (frame, sof tick, retransmission index) when a wire attempt starts.
    using TxStartFn = std::function<void(const Frame&, Tick, int)>;
    /// (frame, sof tick, event tick, outcome, retransmission index).
    using TxEventFn = std::function<void(const Frame&, Tick, Tick, TxOutcome, int)>;
    /// Regenerates the payload of a scheduled frame at enqueue time.
    using PayloadFn = std::function<void(Frame&, Tick)>;

    ReceiveFn on_receive;
    TxStartFn on_tx_start;
    TxEventFn on_tx_event;

    // --- queueing ----------------------------------------------------------

    /// Queue a frame for transmission as soon as the bus allows. Rejected in bus-off.
    bool enqueue(const Frame& f) {
        if (busoff_) {
            return false;
        }
        validate(f);
        queue_.push_back(Pending{f, 0, 0});
        ++emitted_;
        return true;
    }

    /// Queue a frame so that (bus permitting) its SOF lands exactly at tick t.
    bool enqueue_at(Frame f, Tick t, PayloadFn regen = {}) {
        if (busoff_) {
            return false;
        }
        validate(f);
        schedules_.push_back(Sched{t, 0, 1, std::move(f), std::move(regen)});
        return true;
    }

    /// Queue a frame every `period` ticks starting at `start`; `count` = 0 means
    /// unlimited. `regen` may rewrite the payload for each emission.
    bool enqueue_periodic(Frame f, Tick start, Tick period, long count = 0, PayloadFn regen = {}) {
        if (busoff_ || period == 0) {
            return false;
        }
        validate(f);
        schedules_.push_back(Sched{start, period, count == 0 ? -1 : count, std::move(f), std::move(regen)});
        return true;
    }

    // --- per-tick interface (drive before sense, once each) -----------------

    [[nodiscard]] Level drive(Tick now) {
        cantx_ = compute_drive(now);
        return cantx_;
    }

    void sense(Tick now, Level bus) {
        const bool was_transmitting = transmitting_;
        const bool was_flagging = flag_left_ > 0;
        const BitDecoder::Observation obs = rx_.step(bus, now);
        if (busoff_) {
            return;
        }
        pump_schedules(now);

        if ((obs.events & kEvSofSeen) != 0 && role_ == Role::None) {
            role_ = Role::Rx;
        }

        if (was_flagging) {
            --flag_left_;
        } else if (was_transmitting) {
            sense_as_transmitter(now, bus);
        } else {
            sense_as_observer(now, obs);
        }

        if ((obs.events & kEvBusFree) != 0) {
            role_ = Role::None;
            if (suspend_pending_) {
                // error-passive suspend transmission: 8 bit-times before the
                // next attempt may start
                earliest_tx_ = now + 1 + 8;
                suspend_pending_ = false;
            }
        }

        // Arm a transmission: the bus is free after this tick, a frame is
        // queued, and no suspend gate is pending.
        if (!busoff_ && !transmitting_ && !arm_sof_ && flag_left_ == 0 && !queue_.empty()
            && (obs.events & kEvBusFree) != 0 && now + 1 >= earliest_tx_) {
            arm_sof_ = true;
            wire_ = wire_sequence(queue_.front().frame);
        }
    }

    // --- introspection ------------------------------------------------------

    /// Transmit-pin level this tick, exactly as driven (what a tap measures).
    [[nodiscard]] Level cantx() const noexcept { return cantx_; }

    [[nodiscard]] int tec() const noexcept { return tec_; }
    [[nodiscard]] int rec() const noexcept { return rec_; }

    [[nodiscard]] ErrorState state() const noexcept {
        if (busoff_) {
            return ErrorState::BusOff;
        }
        if (tec_ > 127 || rec_ > 127) {
            return ErrorState::ErrorPassive;
        }
        return ErrorState::ErrorActive;
    }

    [[nodiscard]] bool bus_off() const noexcept { return busoff_; }
    [[nodiscard]] Tick bus_off_tick() const noexcept { return busoff_tick_; }
    [[nodiscard]] std::size_t queue_size() const noexcept { return queue_.size(); }
    [[nodiscard]] bool transmitting() const noexcept { return transmitting_; }
    [[nodiscard]] std::uint64_t emitted() const noexcept { return emitted_; }
    [[nodiscard]] std::uint64_t delivered() const noexcept { return delivered_; }
    [[nodiscard]] const BitDecoder& decoder() const noexcept { return rx_; }

private:
    enum class Role : std::uint8_t { None, Tx, Rx };

    struct Pending {
        Frame frame;
        Tick sof;
        int retrans;
    };
    struct Sched {
        Tick next;
        Tick period;    // 0 = one-shot
        long remaining; // -1 = unlimited
        Frame proto;
        PayloadFn regen;
    };

    [[nodiscard]] Level compute_drive(Tick now) {
        if (busoff_) {
            return Level::Recessive;
        }
        if (flag_left_ > 0) {
            return flag_level_;
        }
        if (arm_sof_) {
            arm_sof_ = false;
            transmitting_ = true;
            wx_ = 0;
            role_ = Role::Tx;
            queue_.front().sof = now;
            if (on_tx_start) {
                on_tx_start(queue_.front().frame, now, queue_.front().retrans);
            }
            return wire_[0].level; // SOF
        }
        if (transmitting_) {
            return wire_[wx_].level;
        }
        // Receiver ACK: overwrite the slot with Dominant for a CRC-clean frame,
        // but only while error-active.
        if (role_ == Role::Rx && rx_.next_is_ack() && rx_.crc_ok()
            && state() == ErrorState::ErrorActive) {
            return Level::Dominant;
        }
        return Level::Recessive;
    }

    /// Compare the resolved bus level against the bit we drove this tick.
    void sense_as_transmitter(Tick now, Level bus) {
        const WireBit& wb = wire_[wx_];
        if (bus == wb.level) {
            advance_tx(now);
            return;
        }
        // Mismatch. In the arbitration field a stomped *frame* bit means a
        // higher-priority ID won; a stomped *stuff* bit cannot come from a
        // conformant contender (identical prefixes imply identical stuff bits),
        // so it is a bit error like anywhere else.
        if (wb.field == FrameField::Id && !wb.stuff && wb.level == Level::Recessive) {
            transmitting_ = false;
            role_ = Role::Rx;
            Pending& p = queue_.front();
            if (on_tx_event) {
                on_tx_event(p.frame, p.sof, now, TxOutcome::ArbitrationLost, p.retrans);
            }
            return; // frame stays queued for retransmission, no penalty
        }
        if (wb.field == FrameField::Ack && wb.level == Level::Recessive) {
            advance_tx(now); // receivers overwrote the ACK slot: expected
            return;
        }
        transmit_bit_error(now);
    }

    void advance_tx(Tick now) {
        ++wx_;
        if (wx_ < wire_.size()) {
            return;
        }
        // Full driven sequence survived on the wire: delivered.
        transmitting_ = false;
        tec_ = std::max(0, tec_ - 1);
        ++delivered_;
        Pending& p = queue_.front();
        if (on_tx_event) {
            on_tx_event(p.frame, p.sof, now, TxOutcome::Delivered, p.retrans);
        }
        queue_.pop_front();
        // role_ stays Tx until bus-free so our own frame-complete event is not
        // delivered to on_receive.
    }

    void transmit_bit_error(Tick now) {
        transmitting_ = false;
        tec_ += 8;
        Pending& p = queue_.front();
        if (on_tx_event) {
            on_tx_event(p.frame, p.sof, now, TxOutcome::ErrorAborted, p.retrans);
        }
        ++p.retrans;
        if (tec_ > 255) {
            enter_busoff(now);
            return;
        }
        start_error_flag();
        if (state() == ErrorState::ErrorPassive) {
            suspend_pending_ = true;
        }
    }

    void enter_busoff(Tick now) {
        busoff_ = true;
        busoff_tick_ = now;
        transmitting_ = false;
        arm_sof_ = false;
        flag_left_ = 0;
        role_ = Role::None;
    }

    void start_error_flag() {
        flag_left_ = kErrorFlagBits;
        flag_level_ = state() == ErrorState::ErrorPassive ? Level::Recessive : Level::Dominant;
    }

    void start_overload_flag() {
        flag_left_ = kErrorFlagBits;
        flag_level_ = Level::Dominant; // overload flags are always dominant
    }

    /// Event handling while not driving the wire this tick (pure receiver,
    /// arbitration loser, or ex-transmitter waiting out recovery/intermission).
    void sense_as_observer(Tick now, const BitDecoder::Observation& obs) {
        if ((obs.events & kEvFrameComplete) != 0 && role_ == Role::Rx) {
            rec_ = std::max(0, rec_ - 1);
            if (on_receive) {
                on_receive(rx_.last_frame(), now);
            }
        }
        if ((obs.events & kEvAnyViolation) != 0) {
            if (role_ == Role::Rx) {
                rec_ += 1;
                start_error_flag();
            }
            // role Tx: our own mismatch already charged the error via
            // sense_as_transmitter; the decoder event is the same incident.
            return;
        }
        if ((obs.events & kEvDelimiterDominant) != 0) {
            if (rx_.next_field() == FrameField::ErrorRecovery) {
                if (role_ == Role::Tx) {
                    tec_ += 8;
                    if (tec_ > 255) {
                        enter_busoff(now);
                        return;
                    }
                    start_error_flag();
                } else if (role_ == Role::Rx) {
                    rec_ += 1;
                    start_error_flag();
                }
            } else {
                // overload delimiter disturbed: re-signal, counter-neutral
                start_overload_flag();
            }
            return;
        }
        if ((obs.events & kEvOverloadTrigger) != 0) {
            start_overload_flag();
        }
    }

    void pump_schedules(Tick now) {
        for (Sched& s : schedules_) {
            while (s.remaining != 0 && now + 1 >= s.next) {
                Frame f = s.proto;
                if (s.regen) {
                    s.regen(f, now);
                }
                queue_.push_back(Pending{f, 0, 0});
                ++emitted_;
                if (s.remaining > 0) {
                    --s.remaining;
                }
                if (s.period == 0) {
                    s.remaining = 0;
                    break;
                }
                s.next += s.period;
            }
        }
    }

    BitDecoder rx_;
    std::deque<Pending> queue_;
    std::vector<Sched> schedules_;
    int tec_ = 0;
    int rec_ = 0;
    bool busoff_ = false;
    Tick busoff_tick_ = 0;
    Role role_ = Role::None;
    bool transmitting_ = false;
    std::vector<WireBit> wire_;
    std::size_t wx_ = 0;
    bool arm_sof_ = false;
    int flag_left_ = 0;
    Level flag_level_ = Level::Recessive;
    bool suspend_pending_ = false;
    Tick earliest_tx_ = 0;
    Level cantx_ = Level::Recessive;
    std::uint64_t emitted_ = 0;
    std::uint64_t delivered_ = 0;
};

} // namespace cantap
