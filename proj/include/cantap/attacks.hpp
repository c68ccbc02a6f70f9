#pragma once
/// Attack nodes and the attack log used for scoring.
///
/// Frame-level attacker (FiaNode): a compromised ECU that injects whole,
/// well-formed frames through an ordinary conformant controller — flooding,
/// spoofing (blind or triggered by observing the legitimate frame), and
/// replay of a recorded trace. Every wire attempt that reaches SOF opens one
/// attack-log entry; arbitration losses extend the same entry, and each
/// retransmission after an error abort opens a new one.
///
/// Bit-level attacker (SbaNode): direct wire access with its own protocol
/// decoder, overwriting single recessive bits in the same bit time via the
/// bus react phase. Strategies: single-bit frame destruction against a victim
/// id, duplicate-delivery at the last end-of-frame bit, and a recovery-freeze
/// loop injecting at the first intermission bit. One log entry per injected
/// bit.

#include <cstdint>
#include <utility>
#include <vector>

#include "bus.hpp"
#include "controller.hpp"
#include "decoder.hpp"
#include "frame.hpp"

namespace cantap {

enum class AttackFamily : std::uint8_t { FrameInjection, BitInjection };

struct AttackEntry {
    Tick start;           // SOF tick (frame-level) or injection tick (bit-level)
    Tick end;             // last event tick of the attempt
    std::uint16_t id;     // frame id used / targeted
    AttackFamily family;
    int bit_pos = -1;       // bit-level: injected bit position since frame SOF
    bool delivered = false; // frame-level: frame survived to EOF
    bool aborted = false;   // frame-level: ended in an error abort
    bool open = true;       // still in flight when the run ended
};

/// Frame-level attacker. Configure exactly one behavior before the run.
class FiaNode : public Node {
public:
    explicit FiaNode(int label) : label_(label) { wire_callbacks(); }

    [[nodiscard]] CanController& ctrl() noexcept { return ctrl_; }
    [[nodiscard]] int label() const noexcept { return label_; }
    [[nodiscard]] const std::vector<AttackEntry>& log() const noexcept { return log_; }

    /// Harness hook, invoked after the internal log update. The controller's
    /// own on_tx_event slot is taken by the attack logger.
    CanController::TxEventFn forward_tx_event;

    /// Periodic high-priority frame injection.
    void configure_flooding(Frame f, Tick start, Tick period, long count = 0,
                            CanController::PayloadFn regen = {}) {
        ctrl_.enqueue_periodic(std::move(f), start, period, count, std::move(regen));
    }

    /// Blind spoofing: periodic frames carrying someone else's id.
    void configure_spoof_blind(Frame f, Tick start, Tick period, long count = 0,
                               CanController::PayloadFn regen = {}) {
        ctrl_.enqueue_periodic(std::move(f), start, period, count, std::move(regen));
    }

    /// Triggered spoofing: after observing a delivered frame with the target
    /// id, inject a counterfeit as soon as the bus allows.
    void configure_spoof_after(Frame counterfeit, Tick armed_from = 0, long count = 0,
                               CanController::PayloadFn regen = {}) {
        counterfeit_ = std::move(counterfeit);
        trigger_armed_from_ = armed_from;
        trigger_remaining_ = count == 0 ? -1 : count;
        trigger_regen_ = std::move(regen);
        ctrl_.on_receive = [this](const Frame& f, Tick now) {
            if (trigger_remaining_ != 0 && now >= trigger_armed_from_
                && f.id == counterfeit_.id) {
                Frame c = counterfeit_;
                if (trigger_regen_) {
                    trigger_regen_(c, now);
                }
                ctrl_.enqueue(c);
                if (trigger_remaining_ > 0) {
                    --trigger_remaining_;
                }
            }
        };
    }

    /// Replay a list of (tick, frame) pairs, `repeat` times over with a fixed
    /// tick stride between repetitions (0 strides by the span of the list).
    void configure_replay(std::vector<std::pair<Tick, Frame>> shots, int repeat = 1,
                          Tick stride = 0) {
        if (shots.empty() || repeat < 1) {
            return;
        }
        Tick span = stride;
        if (span == 0) {
            Tick lo = shots.front().first;
            Tick hi = lo;
            for (const auto& s : shots) {
                lo = s.first < lo ? s.first : lo;
                hi = s.first > hi ? s.first : hi;
            }
            span = hi - lo + 1;
        }
        for (int r = 0; r < repeat; ++r) {
            for (const auto& s : shots) {
                ctrl_.enqueue_at(s.second, s.first + span * static_cast<Tick>(r));
            }
        }
    }

    Level drive(Tick now) override { return ctrl_.drive(now); }

    void sense(Tick now, Level resolved, const std::vector<Level>&) override {
        ctrl_.sense(now, resolved);
    }

private:
    void wire_callbacks() {
        ctrl_.on_tx_start = [this](const Frame& f, Tick sof, int) {
            if (cur_ < 0) {
                log_.push_back(AttackEntry{sof, sof, f.id, AttackFamily::FrameInjection});
                cur_ = static_cast<long>(log_.size()) - 1;
            }
        };
        ctrl_.on_tx_event = [this](const Frame& f, Tick sof, Tick when, TxOutcome out, int retrans) {
            if (cur_ >= 0) {
                AttackEntry& e = log_[static_cast<std::size_t>(cur_)];
                e.end = when;
                switch (out) {
                case TxOutcome::ArbitrationLost:
                    break; // same attempt continues at the next bus-free boundary
                case TxOutcome::Delivered:
                    e.delivered = true;
                    e.open = false;
                    cur_ = -1;
                    break;
                case TxOutcome::ErrorAborted:
                case TxOutcome::PreventedByOfficer:
                    e.aborted = true;
                    e.open = false;
                    cur_ = -1;
                    break;
                }
            }
            if (forward_tx_event) {
                forward_tx_event(f, sof, when, out, retrans);
            }
        };
    }

    int label_;
    CanController ctrl_;
    std::vector<AttackEntry> log_;
    long cur_ = -1;

    Frame counterfeit_{};
    Tick trigger_armed_from_ = 0;
    long trigger_remaining_ = 0;
    CanController::PayloadFn trigger_regen_;
};

enum class BitAttackKind : std::uint8_t { FrameKill, DuplicateDelivery, RecoveryFreeze };

/// Bit-level attacker: transceiver access only, no conformant controller.
class SbaNode : public Node {
public:
    SbaNode(int label, BitAttackKind kind) : label_(label), kind_(kind) {}

    [[nodiscard]] int label() const noexcept { return label_; }
    [[nodiscard]] const std::vector<AttackEntry>& log() const noexcept { return log_; }
    [[nodiscard]] std::uint64_t injections() const noexcept { return log_.size(); }

    /// Arm between [start, start+duration); duration 0 = until the run ends.
    void arm(Tick start, Tick duration = 0) {
        start_ = start;
        duration_ = duration;
    }

    void set_victim(std::uint16_t id) { victim_ = id; }
    void set_max_hits(long n) { max_hits_ = n; }

    Level drive(Tick) override { return Level::Recessive; }

    Level react(Tick now, Level tentative, Level own) override {
        if (!armed(now) || tentative == Level::Dominant) {
            return own;
        }
        // Decoder state reflects bits through the previous tick, i.e. what the
        // attacker has decoded so far; `tentative` recessive means nobody is
        // driving this bit, so an overwrite flips the resolved level.
        bool fire = false;
        std::uint16_t logged_id = victim_;
        switch (kind_) {
        case BitAttackKind::FrameKill:
            fire = dec_.arbitration_done() && dec_.current_id() == victim_
                   && !hit_this_frame_ && (max_hits_ < 0 || hits_ < max_hits_)
                   && dec_.next_field() != FrameField::Ack;
            break;
        case BitAttackKind::DuplicateDelivery:
            fire = dec_.arbitration_done() && dec_.current_id() == victim_
                   && dec_.next_field() == FrameField::Eof && dec_.next_index() == 6
                   && (max_hits_ < 0 || hits_ < max_hits_);
            break;
        case BitAttackKind::RecoveryFreeze:
            fire = dec_.next_field() == FrameField::Intermission && dec_.next_index() == 0;
            logged_id = dec_.arbitration_done() || dec_.last_frame_tick() > 0
                            ? dec_.last_frame().id
                            : 0;
            break;
        }
        if (!fire) {
            return own;
        }
        hit_this_frame_ = true;
        ++hits_;
        AttackEntry e{now, now, logged_id, AttackFamily::BitInjection};
        e.bit_pos = sof_seen_ ? static_cast<int>(now - sof_tick_) : -1;
        e.open = false;
        log_.push_back(e);
        return Level::Dominant;
    }

    void sense(Tick now, Level resolved, const std::vector<Level>&) override {
        const BitDecoder::Observation obs = dec_.step(resolved, now);
        if ((obs.events & kEvSofSeen) != 0) {
            hit_this_frame_ = false;
            sof_seen_ = true;
            sof_tick_ = now;
        }
    }

private:
    [[nodiscard]] bool armed(Tick now) const noexcept {
        return now >= start_ && (duration_ == 0 || now < start_ + duration_);
    }

    int label_;
    BitAttackKind kind_;
    BitDecoder dec_;
    std::vector<AttackEntry> log_;
    std::uint16_t victim_ = 0;
    long max_hits_ = -1;
    std::uint64_t hits_ = 0;
    bool hit_this_frame_ = false;
    bool sof_seen_ = false;
    Tick sof_tick_ = 0;
    Tick start_ = 0;
    Tick duration_ = 0;
};

} // namespace cantap
