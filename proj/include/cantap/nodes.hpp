#pragma once
/// Legitimate ECU node: one conformant controller attached to the bus, plus
/// deterministic per-node randomness helpers.
///
/// All randomness in the simulator flows through std::mt19937_64 streams
/// seeded by splitmix64-mixed (master seed, salt) pairs, and values are drawn
/// with explicit modulo so every platform produces identical byte streams.

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "bus.hpp"
#include "controller.hpp"
#include "frame.hpp"

namespace cantap {

/// splitmix64 step; the standard way to spread one 64-bit seed into many.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derive an independent stream seed from a master seed and a salt
/// (e.g. a node id), stable across runs and platforms.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t master, std::uint64_t salt) noexcept {
    return splitmix64(master ^ splitmix64(salt + 1));
}

/// Payload regenerator drawing fresh random bytes for each emission.
[[nodiscard]] inline CanController::PayloadFn random_payload(std::uint64_t seed) {
    auto rng = std::make_shared<std::mt19937_64>(seed);
    return [rng](Frame& f, Tick) {
        for (int i = 0; i < f.dlc; ++i) {
            f.data[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((*rng)() % 256);
        }
    };
}

/// A legitimate ECU: drives and senses through its controller only.
class EcuNode : public Node {
public:
    explicit EcuNode(int label) : label_(label) {}

    [[nodiscard]] CanController& ctrl() noexcept { return ctrl_; }
    [[nodiscard]] const CanController& ctrl() const noexcept { return ctrl_; }
    [[nodiscard]] int label() const noexcept { return label_; }

    Level drive(Tick now) override { return ctrl_.drive(now); }

    void sense(Tick now, Level resolved, const std::vector<Level>&) override {
        ctrl_.sense(now, resolved);
    }

private:
    int label_;
    CanController ctrl_;
};

} // namespace cantap
