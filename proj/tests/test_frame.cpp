// Frame layout and bit-stuffing codec checks.

#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <random>
#include <vector>

#include <cantap/frame.hpp>

using namespace cantap;

namespace {

Frame random_frame(std::mt19937_64& rng) {
    Frame f;
    f.id = static_cast<std::uint16_t>(rng() % (kMaxId + 1));
    f.dlc = static_cast<std::uint8_t>(rng() % 9);
    for (int i = 0; i < f.dlc; ++i) {
        f.data[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(rng() % 256);
    }
    return f;
}

int max_run(const std::vector<int>& bits) {
    int best = 0;
    int cur = 0;
    int prev = -1;
    for (const int b : bits) {
        cur = b == prev ? cur + 1 : 1;
        prev = b;
        best = cur > best ? cur : best;
    }
    return best;
}

} // namespace

TEST_CASE("field widths add up") {
    CHECK(unstuffed_length(0) == 34);
    CHECK(unstuffed_length(8) == 98);
    CHECK(kDrivenTrailerBits == 9);
    Frame f{0x7FF, 8, {1, 2, 3, 4, 5, 6, 7, 8}};
    CHECK(unstuffed_bits(f).size() == 98);
    CHECK(header_body_bits(f).size() == 98 - 15);
}

TEST_CASE("validate rejects out-of-range frames") {
    Frame bad_id{0x800, 0, {}};
    CHECK_THROWS_AS(validate(bad_id), std::invalid_argument);
    Frame bad_dlc{0x100, 9, {}};
    CHECK_THROWS_AS(validate(bad_dlc), std::invalid_argument);
}

TEST_CASE("stuffing hand examples") {
    {
        const std::vector<int> in{0, 0, 0, 0, 0, 0};
        const Stuffed s = stuff(in);
        CHECK(s.bits == std::vector<int>{0, 0, 0, 0, 0, 1, 0});
        CHECK(s.stuff_positions == std::vector<std::size_t>{5});
    }
    {
        // The inserted bit participates in the following run count.
        const std::vector<int> in{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
        const Stuffed s = stuff(in);
        CHECK(s.bits == std::vector<int>{0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 0, 1});
        CHECK(s.stuff_positions == std::vector<std::size_t>{5, 10});
    }
    {
        // All-zero stuffed region of an empty frame: 34 zeros -> 6 stuff bits.
        Frame zero{};
        const Stuffed s = stuff(unstuffed_bits(zero));
        CHECK(s.bits.size() == 40);
        CHECK(s.stuff_positions.size() == 6);
    }
}

TEST_CASE("destuff inverts stuff and flags 6-runs") {
    std::mt19937_64 rng(4242);
    for (int iter = 0; iter < 10000; ++iter) {
        const Frame f = random_frame(rng);
        const std::vector<int> raw = unstuffed_bits(f);
        const Stuffed s = stuff(raw);
        CHECK(destuff(s.bits) == raw);
        CHECK(max_run(s.bits) <= 5);
        // True worst-case expansion: one insert after the first 5 bits, then
        // at most one every 4 bits.
        CHECK(s.bits.size() <= raw.size() + 1 + (raw.size() - 5) / 4);
    }
    const std::vector<int> six_run{1, 0, 0, 0, 0, 0, 0, 1};
    CHECK_THROWS_AS(destuff(six_run), StuffViolation);
}

TEST_CASE("wire sequence shape") {
    std::mt19937_64 rng(99);
    for (int iter = 0; iter < 300; ++iter) {
        const Frame f = random_frame(rng);
        const std::vector<WireBit> w = wire_sequence(f);
        const Stuffed s = stuff(unstuffed_bits(f));
        REQUIRE(w.size() == s.bits.size() + kDrivenTrailerBits);

        // Levels of the stuffed region match the stuffed logical bits.
        for (std::size_t i = 0; i < s.bits.size(); ++i) {
            CHECK(w[i].level == level_of(s.bits[i]));
        }
        // Stuff flags appear exactly at the stuffing positions.
        std::vector<std::size_t> flagged;
        for (std::size_t i = 0; i < s.bits.size(); ++i) {
            if (w[i].stuff) {
                flagged.push_back(i);
            }
        }
        CHECK(flagged == s.stuff_positions);

        // Fixed-form trailer: CRC DEL, ACK, then 7 EOF bits, all recessive.
        const std::size_t t = s.bits.size();
        CHECK(w[t].field == FrameField::CrcDel);
        CHECK(w[t + 1].field == FrameField::Ack);
        for (std::size_t i = 0; i < kEofBits; ++i) {
            CHECK(w[t + 2 + i].field == FrameField::Eof);
        }
        for (std::size_t i = t; i < w.size(); ++i) {
            CHECK(w[i].level == Level::Recessive);
        }

        // SOF dominant, fields in order.
        CHECK(w[0].field == FrameField::Sof);
        CHECK(w[0].level == Level::Dominant);
    }
}

TEST_CASE("frame equality compares only meaningful payload bytes") {
    Frame a{0x55, 2, {1, 2, 99, 99}};
    Frame b{0x55, 2, {1, 2, 0, 0}};
    CHECK(a == b);
    b.data[1] = 3;
    CHECK(!(a == b));
}
