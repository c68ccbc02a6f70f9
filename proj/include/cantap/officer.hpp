#pragma once
/// Bus guardian node ("officer"): correlates resolved bus traffic with
/// per-ECU transmit-pin taps to attribute every frame to its true origin,
/// detect impersonation deterministically, and optionally destroy attacking
/// frames on the wire.
///
/// Detection rules, relative to the arbitration-complete tick T of a frame
/// with id I:
///   unknown_id   — I was never seen during learning: alert at T, offset 0.
///   silent_owner — the tap that owns I shows no dominant level anywhere in
///                  [T+1, T+6]: alert exactly at T+6 (a conformant
///                  transmitter must drive a dominant bit in any 6-bit span,
///                  so six silent bit times prove the owner pin idle).
///   foreign_tx   — a tap that does NOT own I shows a dominant level at some
///                  tick in [T+1 .. first intermission bit], the ACK slot
///                  excepted (every receiver legitimately pulls that bit
///                  down). The window also closes, inclusively, at the first
///                  protocol anomaly the officer's own decoder reports —
///                  error/overload signaling that follows an anomaly starts
///                  strictly later, so legitimate flags can never match.
///
/// Prevention: for unknown_id and silent_owner alerts the officer overwrites
/// the six bits after the alert with dominant levels. A conformant
/// transmitter emits at least one recessive bit in that span, so it aborts
/// with a bit error, retransmits, gets killed again, and walks its transmit
/// error counter to bus-off — the attack self-terminates with no officer
/// state beyond the per-alert burst. foreign_tx alerts are detect-only: the
/// frame's id is legitimate, so destroying it would also punish the real
/// owner's traffic.
///
/// Learning: a frame's origin candidates are the taps that show dominant at
/// every tick where the resolved bus is dominant across SOF..CRC. Exactly one
/// candidate after a valid frame attributes the id; zero marks it seen-but-
/// unattributed (origin not measured); more than one, or a conflict with an
/// earlier attribution, marks it ambiguous.

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bus.hpp"
#include "decoder.hpp"
#include "frame.hpp"

namespace cantap {

enum class OfficerMode : std::uint8_t { Off, Learning, Detect, Prevent };

enum class AlertKind : std::uint8_t { SilentOwner, ForeignTx, UnknownId };

[[nodiscard]] inline const char* alert_name(AlertKind k) noexcept {
    switch (k) {
    case AlertKind::SilentOwner: return "silent_owner";
    case AlertKind::ForeignTx: return "foreign_tx";
    case AlertKind::UnknownId: return "unknown_id";
    }
    return "?";
}

struct Alert {
    Tick tick;
    AlertKind kind;
    std::uint16_t frame_id;
    int tap;    // tap index, -1 when no tap is implicated (unknown_id)
    int offset; // ticks after arbitration completion
};

struct KillRecord {
    Tick start; // first dominant overwrite tick
    Tick end;   // last overwrite tick (start + 5)
    std::uint16_t frame_id;
};

struct AmbiguityRecord {
    std::uint16_t id;
    Tick tick;
};

/// Persistent id-ownership table keyed by tap name.
struct AllowlistTable {
    std::map<std::string, std::set<std::uint16_t>> by_tap;
    std::set<std::uint16_t> unattributed;
    std::set<std::uint16_t> ambiguous;

    [[nodiscard]] bool known(std::uint16_t id) const {
        if (unattributed.count(id) != 0 || ambiguous.count(id) != 0) {
            return true;
        }
        for (const auto& [name, ids] : by_tap) {
            if (ids.count(id) != 0) {
                return true;
            }
        }
        return false;
    }

    void save(std::ostream& os) const {
        for (const auto& [name, ids] : by_tap) {
            os << "tap " << name << ":";
            for (std::uint16_t id : ids) {
                os << " " << id;
            }
            os << "\n";
        }
        os << "unattributed:";
        for (std::uint16_t id : unattributed) {
            os << " " << id;
        }
        os << "\n";
        os << "ambiguous:";
        for (std::uint16_t id : ambiguous) {
            os << " " << id;
        }
        os << "\n";
    }

    static AllowlistTable load(std::istream& is) {
        AllowlistTable t;
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty() || line[0] == '#') {
                continue;
            }
            const auto colon = line.find(':');
            if (colon == std::string::npos) {
                throw std::runtime_error("allowlist: missing ':' in line: " + line);
            }
            std::string head = line.substr(0, colon);
            std::istringstream ids(line.substr(colon + 1));
            std::set<std::uint16_t>* dst = nullptr;
            if (head.rfind("tap ", 0) == 0) {
                dst = &t.by_tap[head.substr(4)];
            } else if (head == "unattributed") {
                dst = &t.unattributed;
            } else if (head == "ambiguous") {
                dst = &t.ambiguous;
            } else {
                throw std::runtime_error("allowlist: bad section: " + head);
            }
            long v = 0;
            while (ids >> v) {
                if (v < 0 || v > kMaxId) {
                    throw std::runtime_error("allowlist: id out of range");
                }
                dst->insert(static_cast<std::uint16_t>(v));
            }
        }
        return t;
    }
};

struct OfficerConfig {
    OfficerMode mode = OfficerMode::Detect;
    Tick activation_tick = 0;
    /// Close the foreign-tx window after the last end-of-frame bit instead of
    /// the first intermission bit (matches guardians that stop watching at
    /// EOF; leaves the recovery-freeze injection point unobserved).
    bool allow_legacy_overflow = false;
    /// Record the first recessive->dominant transition offset of the owner
    /// tap in [T+1, T+6] for every valid owned frame.
    bool instrument_delay = false;
};

class Officer : public Node {
public:
    Officer(OfficerConfig cfg, std::vector<std::string> tap_names)
        : cfg_(cfg), tap_names_(std::move(tap_names)) {
        if (tap_names_.size() > 63) {
            throw std::runtime_error("officer: too many taps");
        }
        own_.resize(tap_names_.size());
        prev_taps_.assign(tap_names_.size(), Level::Recessive);
    }

    /// Install a learned/loaded ownership table. Tap names in the table that
    /// this officer does not measure are a configuration error.
    void set_allowlist(const AllowlistTable& t) {
        for (auto& s : own_) {
            s.clear();
        }
        unattributed_ = t.unattributed;
        ambiguous_ = t.ambiguous;
        for (const auto& [name, ids] : t.by_tap) {
            const int idx = tap_index(name);
            if (idx < 0) {
                throw std::runtime_error("allowlist names unmeasured tap: " + name);
            }
            own_[static_cast<std::size_t>(idx)] = ids;
        }
    }

    [[nodiscard]] AllowlistTable allowlist() const {
        AllowlistTable t;
        for (std::size_t i = 0; i < own_.size(); ++i) {
            if (!own_[i].empty()) {
                t.by_tap[tap_names_[i]] = own_[i];
            }
        }
        t.unattributed = unattributed_;
        t.ambiguous = ambiguous_;
        return t;
    }

    [[nodiscard]] const std::vector<Alert>& alerts() const noexcept { return alerts_; }
    [[nodiscard]] const std::vector<KillRecord>& kills() const noexcept { return kills_; }
    [[nodiscard]] const std::vector<AmbiguityRecord>& ambiguities() const noexcept {
        return ambiguity_log_;
    }

    /// Delay instrument: histogram over offsets 0..6 plus the frame count.
    [[nodiscard]] const std::array<std::uint64_t, 7>& delay_histogram() const noexcept {
        return delay_hist_;
    }
    [[nodiscard]] std::uint64_t delay_frames() const noexcept { return delay_frames_; }

    // --- Node interface ------------------------------------------------------

    Level drive(Tick now) override {
        if (kill_arm_) {
            kill_arm_ = false;
            kill_left_ = kErrorFlagBits;
            kills_.push_back(KillRecord{now, now + kErrorFlagBits - 1, kill_id_});
        }
        return kill_left_ > 0 ? Level::Dominant : Level::Recessive;
    }

    void sense(Tick now, Level resolved, const std::vector<Level>& taps) override {
        const bool killing = kill_left_ > 0;
        if (kill_left_ > 0) {
            --kill_left_;
        }
        const BitDecoder::Observation obs = dec_.step(resolved, now);

        if (cfg_.mode == OfficerMode::Off || now < cfg_.activation_tick) {
            prev_taps_ = taps;
            return;
        }
        if (cfg_.mode == OfficerMode::Learning) {
            learn_tick(now, resolved, taps, obs);
        } else {
            monitor_tick(now, taps, obs, killing);
        }
        prev_taps_ = taps;
    }

private:
    // --- learning -------------------------------------------------------------

    void learn_tick(Tick now, Level resolved, const std::vector<Level>& taps,
                    const BitDecoder::Observation& obs) {
        if ((obs.events & kEvSofSeen) != 0) {
            cand_ = ~0ULL;
            cand_valid_ = true;
        }
        if (cand_valid_ && in_stuffed_region(obs.field) && resolved == Level::Dominant) {
            std::uint64_t mask = 0;
            for (std::size_t t = 0; t < taps.size(); ++t) {
                if (taps[t] == Level::Dominant) {
                    mask |= 1ULL << t;
                }
            }
            cand_ &= mask;
        }
        if ((obs.events & (kEvAnyViolation | kEvDelimiterDominant)) != 0) {
            cand_valid_ = false; // damaged frame: discard the sample
        }
        if ((obs.events & kEvFrameComplete) != 0 && cand_valid_) {
            attribute(dec_.last_frame().id, now);
            cand_valid_ = false;
        }
    }

    void attribute(std::uint16_t id, Tick now) {
        std::uint64_t cand = cand_;
        if (tap_names_.size() < 64) {
            cand &= (1ULL << tap_names_.size()) - 1;
        }
        if (ambiguous_.count(id) != 0) {
            return; // already condemned
        }
        const int pop = popcount64(cand);
        const int prior = owner_of(id);
        const bool prior_unattr = unattributed_.count(id) != 0;
        if (pop == 1) {
            const int tap = lowest_bit(cand);
            if ((prior >= 0 && prior != tap) || prior_unattr) {
                condemn(id, now);
            } else if (prior < 0) {
                own_[static_cast<std::size_t>(tap)].insert(id);
            }
        } else if (pop == 0) {
            if (prior >= 0) {
                condemn(id, now);
            } else {
                unattributed_.insert(id);
            }
        } else {
            condemn(id, now);
        }
    }

    void condemn(std::uint16_t id, Tick now) {
        for (auto& s : own_) {
            s.erase(id);
        }
        unattributed_.erase(id);
        ambiguous_.insert(id);
        ambiguity_log_.push_back(AmbiguityRecord{id, now});
    }

    // --- detection / prevention ------------------------------------------------

    void monitor_tick(Tick now, const std::vector<Level>& taps,
                      const BitDecoder::Observation& obs, bool killing) {
        const bool anomaly =
            (obs.events & (kEvAnyViolation | kEvOverloadTrigger | kEvDelimiterDominant)) != 0;

        if ((obs.events & kEvArbitrationComplete) != 0) {
            open_frame(now, taps);
        } else if (frame_active_) {
            const Tick rel = now - arb_tick_;

            if (e1_watch_ && rel >= 1) {
                if (anomaly) {
                    e1_watch_ = false; // frame destroyed before the deadline
                } else if (taps[static_cast<std::size_t>(frame_owner_)] == Level::Dominant) {
                    e1_watch_ = false; // owner pin active: legitimate origin
                } else if (rel == kErrorFlagBits) {
                    e1_watch_ = false;
                    raise(now, AlertKind::SilentOwner, cur_id_, frame_owner_,
                          static_cast<int>(rel));
                }
            }

            if (cfg_.instrument_delay && frame_owner_ >= 0 && !edge_seen_ && rel >= 1
                && rel <= kErrorFlagBits) {
                const auto o = static_cast<std::size_t>(frame_owner_);
                if (prev_taps_[o] == Level::Recessive && taps[o] == Level::Dominant) {
                    edge_seen_ = true;
                    edge_offset_ = static_cast<int>(rel);
                }
            }

            if (window_open_) {
                const bool at_ack = obs.field == FrameField::Ack;
                if (!killing && !at_ack && rel >= 1) {
                    scan_taps(now, taps, rel);
                }
                const bool at_close = cfg_.allow_legacy_overflow
                                          ? (obs.field == FrameField::Eof && obs.index == 6)
                                          : (obs.field == FrameField::Intermission
                                             && obs.index == 0);
                if (anomaly || at_close) {
                    window_open_ = false;
                }
            }

            if ((obs.events & kEvFrameComplete) != 0) {
                if (cfg_.instrument_delay && frame_owner_ >= 0 && edge_seen_) {
                    delay_hist_[static_cast<std::size_t>(edge_offset_)] += 1;
                    ++delay_frames_;
                }
            }
            if (anomaly || (obs.events & (kEvFrameComplete | kEvBusFree)) != 0) {
                if (!window_open_ && !e1_watch_) {
                    frame_active_ = false;
                }
            }
        }
    }

    void open_frame(Tick now, const std::vector<Level>&) {
        cur_id_ = dec_.current_id();
        arb_tick_ = now;
        alerted_taps_ = 0;
        edge_seen_ = false;
        edge_offset_ = 0;
        frame_owner_ = owner_of(cur_id_);
        const bool id_known = frame_owner_ >= 0 || unattributed_.count(cur_id_) != 0
                              || ambiguous_.count(cur_id_) != 0;
        if (!id_known) {
            frame_active_ = false;
            window_open_ = false;
            e1_watch_ = false;
            raise(now, AlertKind::UnknownId, cur_id_, -1, 0);
            return;
        }
        frame_active_ = true;
        window_open_ = true;
        e1_watch_ = frame_owner_ >= 0;
    }

    void scan_taps(Tick now, const std::vector<Level>& taps, Tick rel) {
        for (std::size_t t = 0; t < taps.size(); ++t) {
            if (taps[t] != Level::Dominant) {
                continue;
            }
            if (static_cast<int>(t) == frame_owner_) {
                continue;
            }
            if ((alerted_taps_ & (1ULL << t)) != 0) {
                continue;
            }
            alerted_taps_ |= 1ULL << t;
            raise(now, AlertKind::ForeignTx, cur_id_, static_cast<int>(t),
                  static_cast<int>(rel));
        }
    }

    void raise(Tick now, AlertKind kind, std::uint16_t id, int tap, int offset) {
        alerts_.push_back(Alert{now, kind, id, tap, offset});
        if (cfg_.mode == OfficerMode::Prevent && kind != AlertKind::ForeignTx) {
            kill_arm_ = true;
            kill_id_ = id;
        }
    }

    // --- helpers ---------------------------------------------------------------

    [[nodiscard]] int owner_of(std::uint16_t id) const {
        for (std::size_t t = 0; t < own_.size(); ++t) {
            if (own_[t].count(id) != 0) {
                return static_cast<int>(t);
            }
        }
        return -1;
    }

    [[nodiscard]] int tap_index(const std::string& name) const {
        for (std::size_t i = 0; i < tap_names_.size(); ++i) {
            if (tap_names_[i] == name) {
                return static_cast<int>(i);
            }
        }
        return -1;
    }

    [[nodiscard]] static int popcount64(std::uint64_t v) noexcept {
        int n = 0;
        while (v != 0) {
            v &= v - 1;
            ++n;
        }
        return n;
    }

    [[nodiscard]] static int lowest_bit(std::uint64_t v) noexcept {
        int i = 0;
        while ((v & 1ULL) == 0) {
            v >>= 1;
            ++i;
        }
        return i;
    }

    OfficerConfig cfg_;
    std::vector<std::string> tap_names_;
    BitDecoder dec_;

    std::vector<std::set<std::uint16_t>> own_; // tap index -> owned ids
    std::set<std::uint16_t> unattributed_;
    std::set<std::uint16_t> ambiguous_;

    std::vector<Alert> alerts_;
    std::vector<KillRecord> kills_;
    std::vector<AmbiguityRecord> ambiguity_log_;

    // learning state
    std::uint64_t cand_ = 0;
    bool cand_valid_ = false;

    // per-frame monitoring state
    bool frame_active_ = false;
    bool window_open_ = false;
    bool e1_watch_ = false;
    int frame_owner_ = -1;
    std::uint16_t cur_id_ = 0;
    Tick arb_tick_ = 0;
    std::uint64_t alerted_taps_ = 0;
    bool edge_seen_ = false;
    int edge_offset_ = 0;

    // prevention state
    bool kill_arm_ = false;
    int kill_left_ = 0;
    std::uint16_t kill_id_ = 0;

    // delay instrument
    std::array<std::uint64_t, 7> delay_hist_{};
    std::uint64_t delay_frames_ = 0;

    std::vector<Level> prev_taps_;
};

} // namespace cantap
