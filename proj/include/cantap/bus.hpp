#pragma once
/// Single shared wire with wired-AND resolution, lockstep tick engine, and
/// measurement taps on node transmit pins.
///
/// Tick phases:
///   1. drive  — every node emits its level for this tick
///   2. react  — nodes that bit-bang the wire directly (not through a
///               conformant controller) may overwrite their own contribution
///               after seeing the tentative AND of everyone's first-phase
///               levels (models reacting within the same bit time)
///   3. resolve — final AND of all contributions
///   4. taps   — each tap records the AND of its member pins' contributions
///   5. sense  — every node observes the resolved level plus all tap levels,
///               in attach order
///
/// A tap covering several nodes models one physical measuring point shared by
/// ECUs wired through the same connector.

#include <cstdint>
#include <string>
#include <vector>

#include "bits.hpp"

namespace cantap {

using TapId = int;

class Node {
public:
    virtual ~Node() = default;

    /// Phase 1: the level this node puts on the wire this tick.
    virtual Level drive(Tick now) = 0;

    /// Phase 2: optional same-tick overwrite after seeing the tentative
    /// resolution. `own` is what this node drove in phase 1. Default: keep it.
    virtual Level react(Tick now, Level tentative, Level own) {
        (void)now;
        (void)tentative;
        return own;
    }

    /// Phase 5: observe the resolved bus level and every tap's level.
    virtual void sense(Tick now, Level resolved, const std::vector<Level>& taps) = 0;
};

class Bus {
public:
    /// Attach a node; sense order equals attach order. Returns its index.
    int add_node(Node* n) {
        nodes_.push_back(n);
        driven_.push_back(Level::Recessive);
        return static_cast<int>(nodes_.size()) - 1;
    }

    /// Declare a measurement tap over the transmit pins of `members`
    /// (indices returned by add_node). Returns the tap id (= column index in
    /// the tap vector passed to sense()).
    TapId add_tap(std::string name, std::vector<int> members) {
        taps_.push_back(Tap{std::move(name), std::move(members)});
        tap_levels_.push_back(Level::Recessive);
        return static_cast<TapId>(taps_.size()) - 1;
    }

    [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
    [[nodiscard]] std::size_t tap_count() const noexcept { return taps_.size(); }
    [[nodiscard]] const std::string& tap_name(TapId t) const { return taps_[static_cast<std::size_t>(t)].name; }
    [[nodiscard]] const std::vector<int>& tap_members(TapId t) const {
        return taps_[static_cast<std::size_t>(t)].members;
    }

    /// Level node `i` contributed this tick (post-react).
    [[nodiscard]] Level driven(int i) const { return driven_[static_cast<std::size_t>(i)]; }

    /// Resolved level of the last completed tick.
    [[nodiscard]] Level level() const noexcept { return level_; }

    [[nodiscard]] Tick now() const noexcept { return now_; }

    /// Advance one bit time.
    void tick() {
        const Tick t = now_;
        const std::size_t n = nodes_.size();

        Level tentative = Level::Recessive;
        for (std::size_t i = 0; i < n; ++i) {
            driven_[i] = nodes_[i]->drive(t);
            tentative = wired_and(tentative, driven_[i]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            driven_[i] = nodes_[i]->react(t, tentative, driven_[i]);
        }
        Level resolved = Level::Recessive;
        for (std::size_t i = 0; i < n; ++i) {
            resolved = wired_and(resolved, driven_[i]);
        }
        level_ = resolved;

        for (std::size_t k = 0; k < taps_.size(); ++k) {
            Level lv = Level::Recessive;
            for (int m : taps_[k].members) {
                lv = wired_and(lv, driven_[static_cast<std::size_t>(m)]);
            }
            tap_levels_[k] = lv;
        }

        for (std::size_t i = 0; i < n; ++i) {
            nodes_[i]->sense(t, resolved, tap_levels_);
        }
        ++now_;
    }

    void run(Tick ticks) {
        for (Tick i = 0; i < ticks; ++i) {
            tick();
        }
    }

private:
    struct Tap {
        std::string name;
        std::vector<int> members;
    };

    std::vector<Node*> nodes_;
    std::vector<Level> driven_;
    std::vector<Tap> taps_;
    std::vector<Level> tap_levels_;
    Level level_ = Level::Recessive;
    Tick now_ = 0;
};

} // namespace cantap
