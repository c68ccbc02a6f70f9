// Officer node: learning-phase attribution, the three detection rules with
// their exact tick semantics, the ACK exemption, the legacy window toggle,
// and prevention bursts driving an attacker to bus-off.

#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <cantap/attacks.hpp>
#include <cantap/bus.hpp>
#include <cantap/nodes.hpp>
#include <cantap/officer.hpp>

using namespace cantap;

namespace {

OfficerConfig make_cfg(OfficerMode mode) {
    OfficerConfig cfg;
    cfg.mode = mode;
    return cfg;
}

} // namespace

TEST_CASE("learning attributes every id to its transmitting tap") {
    EcuNode a(0);
    EcuNode b(1);
    EcuNode c(2);
    Bus bus;
    const int ai = bus.add_node(&a);
    const int bi = bus.add_node(&b);
    const int ci = bus.add_node(&c);
    bus.add_tap("A", {ai});
    bus.add_tap("B", {bi});
    bus.add_tap("C", {ci});
    Officer officer(make_cfg(OfficerMode::Learning), {"A", "B", "C"});
    bus.add_node(&officer);

    a.ctrl().enqueue_periodic(Frame{0x100, 8, {}}, 11, 1700, 0, random_payload(mix_seed(1, 0)));
    b.ctrl().enqueue_periodic(Frame{0x200, 4, {1, 2, 3, 4}}, 400, 2100);
    c.ctrl().enqueue_periodic(Frame{0x300, 0, {}}, 900, 2500);
    bus.run(30000);

    const AllowlistTable t = officer.allowlist();
    REQUIRE(t.by_tap.count("A") == 1);
    REQUIRE(t.by_tap.count("B") == 1);
    REQUIRE(t.by_tap.count("C") == 1);
    CHECK(t.by_tap.at("A") == std::set<std::uint16_t>{0x100});
    CHECK(t.by_tap.at("B") == std::set<std::uint16_t>{0x200});
    CHECK(t.by_tap.at("C") == std::set<std::uint16_t>{0x300});
    CHECK(t.unattributed.empty());
    CHECK(t.ambiguous.empty());
    CHECK(officer.alerts().empty()); // learning never raises
}

TEST_CASE("learning condemns shared ids and records unmeasured ones") {
    EcuNode a(0);
    EcuNode b(1);
    EcuNode ghost(2); // transmits but has no tap
    Bus bus;
    const int ai = bus.add_node(&a);
    const int bi = bus.add_node(&b);
    bus.add_node(&ghost);
    bus.add_tap("A", {ai});
    bus.add_tap("B", {bi});
    Officer officer(make_cfg(OfficerMode::Learning), {"A", "B"});
    bus.add_node(&officer);

    // A and B both emit 0x150 at different times: attribution conflicts.
    a.ctrl().enqueue_periodic(Frame{0x150, 1, {0xAA}}, 100, 4000);
    b.ctrl().enqueue_periodic(Frame{0x150, 1, {0xBB}}, 2100, 4000);
    ghost.ctrl().enqueue_periodic(Frame{0x2F0, 1, {0xCC}}, 1000, 4000);
    bus.run(30000);

    const AllowlistTable t = officer.allowlist();
    CHECK(t.ambiguous == std::set<std::uint16_t>{0x150});
    CHECK(t.unattributed == std::set<std::uint16_t>{0x2F0});
    CHECK(t.by_tap.empty()); // the condemned id was erased from both taps
    CHECK(!officer.ambiguities().empty());
    CHECK(officer.ambiguities()[0].id == 0x150);
}

TEST_CASE("allowlist naming an unmeasured tap is a configuration error") {
    Officer officer(make_cfg(OfficerMode::Detect), {"A"});
    AllowlistTable t;
    t.by_tap["B"] = {0x100};
    CHECK_THROWS_AS(officer.set_allowlist(t), std::runtime_error);
}

TEST_CASE("a silent owner is reported exactly six bits after arbitration") {
    EcuNode victim(0); // owns 0x110 on paper, transmits nothing
    EcuNode spoofer(1); // no tap: impersonates from outside the measured set
    Bus bus;
    const int vi = bus.add_node(&victim);
    bus.add_node(&spoofer);
    bus.add_tap("VIC", {vi});
    Officer officer(make_cfg(OfficerMode::Detect), {"VIC"});
    AllowlistTable table;
    table.by_tap["VIC"] = {0x110};
    officer.set_allowlist(table);
    bus.add_node(&officer);

    spoofer.ctrl().enqueue_periodic(Frame{0x110, 8, {}}, 1000, 2500, 0,
                                    random_payload(mix_seed(2, 0)));
    bus.run(20000);

    CHECK(spoofer.ctrl().delivered() == 8); // detect-only: frames go through
    REQUIRE(officer.alerts().size() == 8);
    for (const Alert& al : officer.alerts()) {
        CHECK(al.kind == AlertKind::SilentOwner);
        CHECK(al.frame_id == 0x110);
        CHECK(al.tap == 0);
        CHECK(al.offset == 6);
    }
    CHECK(officer.kills().empty());
}

TEST_CASE("acknowledging receivers never raise a foreign-transmitter alert") {
    EcuNode a(0);
    EcuNode b(1);
    Bus bus;
    const int ai = bus.add_node(&a);
    const int bi = bus.add_node(&b);
    bus.add_tap("A", {ai});
    bus.add_tap("B", {bi});
    Officer officer(make_cfg(OfficerMode::Detect), {"A", "B"});
    AllowlistTable table;
    table.by_tap["A"] = {0x100};
    table.by_tap["B"] = {0x200};
    officer.set_allowlist(table);
    bus.add_node(&officer);

    // Both nodes transmit and both ACK each other's frames, so the non-owner
    // tap goes dominant at every ACK slot. None of that may alert.
    a.ctrl().enqueue_periodic(Frame{0x100, 8, {}}, 40, 1700, 0, random_payload(mix_seed(3, 0)));
    b.ctrl().enqueue_periodic(Frame{0x200, 8, {}}, 600, 2100, 0, random_payload(mix_seed(3, 1)));
    bus.run(100000);

    CHECK(a.ctrl().delivered() > 50);
    CHECK(b.ctrl().delivered() > 40);
    CHECK(officer.alerts().empty());
    CHECK(officer.kills().empty());
}

TEST_CASE("a tapped bit attacker is caught at the exact injection tick") {
    EcuNode engine(0);
    SbaNode killer(1, BitAttackKind::FrameKill);
    killer.set_victim(0x100);
    killer.set_max_hits(3);
    killer.arm(5000);
    Bus bus;
    const int ei = bus.add_node(&engine);
    const int ki = bus.add_node(&killer);
    bus.add_tap("ENG", {ei});
    bus.add_tap("ATK", {ki});
    Officer officer(make_cfg(OfficerMode::Detect), {"ENG", "ATK"});
    AllowlistTable table;
    table.by_tap["ENG"] = {0x100};
    officer.set_allowlist(table);
    bus.add_node(&officer);

    engine.ctrl().enqueue_periodic(Frame{0x100, 8, {}}, 30, 2000, 0,
                                   random_payload(mix_seed(4, 0)));
    bus.run(30000);

    REQUIRE(killer.log().size() == 3);
    REQUIRE(officer.alerts().size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const Alert& al = officer.alerts()[i];
        CHECK(al.kind == AlertKind::ForeignTx);
        CHECK(al.tick == killer.log()[i].start);
        CHECK(al.frame_id == 0x100);
        CHECK(al.tap == 1);
        CHECK(al.offset >= 1);
    }
    CHECK(officer.kills().empty()); // foreign_tx is detect-only by design
    CHECK(engine.ctrl().delivered() > 10); // traffic survives the three kills
}

TEST_CASE("legacy window stops at end-of-frame and misses the freeze point") {
    for (const bool legacy : {false, true}) {
        EcuNode engine(0);
        SbaNode freezer(1, BitAttackKind::RecoveryFreeze);
        freezer.arm(10000, 200);
        Bus bus;
        const int ei = bus.add_node(&engine);
        const int fi = bus.add_node(&freezer);
        bus.add_tap("ENG", {ei});
        bus.add_tap("ATK", {fi});
        OfficerConfig cfg = make_cfg(OfficerMode::Detect);
        cfg.allow_legacy_overflow = legacy;
        Officer officer(cfg, {"ENG", "ATK"});
        AllowlistTable table;
        table.by_tap["ENG"] = {0x100};
        officer.set_allowlist(table);
        bus.add_node(&officer);

        engine.ctrl().enqueue_periodic(Frame{0x100, 8, {}}, 30, 2000, 0,
                                       random_payload(mix_seed(5, 0)));
        bus.run(16000);

        REQUIRE(!freezer.log().empty());
        if (legacy) {
            CHECK(officer.alerts().empty());
        } else {
            // The monitored window closes inclusively at the first
            // intermission bit — exactly where the freeze injects.
            REQUIRE(officer.alerts().size() == 1);
            CHECK(officer.alerts()[0].kind == AlertKind::ForeignTx);
            CHECK(officer.alerts()[0].tick == freezer.log()[0].start);
            CHECK(officer.alerts()[0].tap == 1);
        }
    }
}

TEST_CASE("unknown ids alert at arbitration and prevention kills to bus-off") {
    EcuNode intruder(0); // no tap, transmits an id the table never saw
    EcuNode witness(1);
    Bus bus;
    bus.add_node(&intruder);
    const int wi = bus.add_node(&witness);
    bus.add_tap("WIT", {wi});
    Officer officer(make_cfg(OfficerMode::Prevent), {"WIT"});
    AllowlistTable table;
    table.by_tap["WIT"] = {0x200};
    officer.set_allowlist(table);
    bus.add_node(&officer);

    std::vector<Tick> aborts;
    intruder.ctrl().on_tx_event = [&](const Frame&, Tick, Tick end, TxOutcome out, int) {
        if (out == TxOutcome::ErrorAborted) {
            aborts.push_back(end);
        }
    };
    intruder.ctrl().enqueue(Frame{0x3AA, 8, {0xDE, 0xAD, 0xBE, 0xEF, 0, 1, 2, 3}});
    bus.run(40000);

    CHECK(intruder.ctrl().bus_off());
    CHECK(intruder.ctrl().delivered() == 0);
    REQUIRE(officer.alerts().size() == 32); // one per retransmission attempt
    REQUIRE(officer.kills().size() == 32);
    REQUIRE(aborts.size() == 32);
    for (std::size_t i = 0; i < 32; ++i) {
        const Alert& al = officer.alerts()[i];
        CHECK(al.kind == AlertKind::UnknownId);
        CHECK(al.offset == 0);
        CHECK(al.tap == -1);
        CHECK(al.frame_id == 0x3AA);
        const KillRecord& k = officer.kills()[i];
        CHECK(k.start == al.tick + 1);
        CHECK(k.end == k.start + 5);
        CHECK(k.frame_id == 0x3AA);
        // The conformant attacker hits a bit error inside the burst.
        CHECK(aborts[i] >= k.start);
        CHECK(aborts[i] <= k.end);
    }
}

TEST_CASE("prevention destroys impersonating frames within six bits of the alert") {
    EcuNode victim(0); // legitimate owner, silent
    EcuNode spoofer(1);
    Bus bus;
    const int vi = bus.add_node(&victim);
    bus.add_node(&spoofer);
    bus.add_tap("VIC", {vi});
    Officer officer(make_cfg(OfficerMode::Prevent), {"VIC"});
    AllowlistTable table;
    table.by_tap["VIC"] = {0x110};
    officer.set_allowlist(table);
    bus.add_node(&officer);

    std::vector<Tick> aborts;
    spoofer.ctrl().on_tx_event = [&](const Frame&, Tick, Tick end, TxOutcome out, int) {
        if (out == TxOutcome::ErrorAborted) {
            aborts.push_back(end);
        }
    };
    spoofer.ctrl().enqueue_periodic(Frame{0x110, 8, {}}, 500, 5000, 0,
                                    random_payload(mix_seed(6, 0)));
    bus.run(60000);

    CHECK(spoofer.ctrl().bus_off());
    CHECK(spoofer.ctrl().delivered() == 0); // nothing impersonated gets through
    REQUIRE(officer.alerts().size() == 32);
    REQUIRE(officer.kills().size() == 32);
    REQUIRE(aborts.size() == 32);
    for (std::size_t i = 0; i < 32; ++i) {
        CHECK(officer.alerts()[i].kind == AlertKind::SilentOwner);
        CHECK(officer.alerts()[i].offset == 6);
        CHECK(officer.kills()[i].start == officer.alerts()[i].tick + 1);
        CHECK(aborts[i] >= officer.kills()[i].start);
        CHECK(aborts[i] <= officer.kills()[i].end);
    }
    // The silent owner itself was never disturbed: its controller is intact.
    CHECK(!victim.ctrl().bus_off());
    CHECK(victim.ctrl().tec() == 0);
}

TEST_CASE("delay instrument records the owner's first dominant edge") {
    EcuNode e(0);
    Bus bus;
    const int ei = bus.add_node(&e);
    bus.add_tap("E", {ei});
    OfficerConfig cfg = make_cfg(OfficerMode::Detect);
    cfg.instrument_delay = true;
    Officer officer(cfg, {"E"});
    AllowlistTable table;
    table.by_tap["E"] = {0x123};
    officer.set_allowlist(table);
    bus.add_node(&officer);

    e.ctrl().enqueue_periodic(Frame{0x123, 8, {}}, 50, 2000, 0, random_payload(mix_seed(7, 0)));
    bus.run(50000);

    const std::uint64_t n = officer.delay_frames();
    CHECK(n == e.ctrl().delivered());
    CHECK(n >= 20);
    // Id 0x123 ends in a recessive bit, so the owner's pin goes dominant at
    // the RTR slot: offset 1 for every frame, independent of the payload.
    CHECK(officer.delay_histogram()[1] == n);
    CHECK(officer.delay_histogram()[0] == 0);
    std::uint64_t total = 0;
    for (std::uint64_t v : officer.delay_histogram()) {
        total += v;
    }
    CHECK(total == n);
}
