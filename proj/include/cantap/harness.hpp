#pragma once
/// Scenario harness: builds a world from a ScenarioConfig, runs it, joins
/// transmit traces with guardian alerts and kill bursts into metrics, and
/// writes the external report formats (trace, alert log, metrics JSON,
/// delay-CDF CSV). Also hosts the canned experiments: the delay-CDF corpus,
/// the detection-coverage sweep, and the sensor spoofing demo.

#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "attacks.hpp"
#include "bus.hpp"
#include "controller.hpp"
#include "nodes.hpp"
#include "officer.hpp"
#include "scenario.hpp"

namespace cantap {

struct TraceRecord {
    Tick sof;     // bit_time column: tick of the attempt's SOF
    Tick end;     // tick of the terminal event
    int node;     // bus node index
    Frame frame;
    TxOutcome outcome;
    int retrans;
};

struct RxRecord {
    Tick tick; // frame-complete tick at this receiver
    int node;
    Frame frame;
};

struct NodeSummary {
    std::string name;
    NodeKind kind;
    bool has_ctrl = false;
    std::uint64_t emitted = 0;
    std::uint64_t delivered = 0;
    int tec = 0;
    int rec = 0;
    bool bus_off = false;
    Tick bus_off_tick = 0;
};

struct Metrics {
    std::optional<double> asr_percent;
    std::optional<double> detection_rate_percent;
    std::optional<double> prevention_rate_percent;
    std::uint64_t false_positive_count = 0;
    std::optional<double> legit_delivery_rate_percent;
    std::array<std::uint64_t, 7> delay_histogram{};
    std::uint64_t delay_frames = 0;
    std::optional<Tick> attacker_busoff_tick;
    std::optional<double> escalation_duration_us;
    std::uint64_t attack_entries = 0;
    std::uint64_t matched_entries = 0;
    std::uint64_t prevented_entries = 0;
    std::uint64_t delivered_attack_entries = 0;
    std::uint64_t alerts_total = 0;
    std::uint64_t kills_total = 0;
    std::uint64_t frames_delivered = 0;
};

struct RunOutput {
    std::vector<TraceRecord> trace;
    std::vector<RxRecord> rx;
    std::vector<Alert> alerts;
    std::vector<KillRecord> kills;
    std::vector<AttackEntry> attacks;
    std::vector<bool> attack_matched; // parallel to `attacks`
    AllowlistTable allowlist;
    std::vector<std::string> tap_names;
    std::vector<NodeSummary> nodes;
    Metrics metrics;
};

namespace detail {

[[nodiscard]] inline std::vector<std::uint8_t> parse_hex_bytes(const std::string& s) {
    std::vector<std::uint8_t> out;
    int hi = -1;
    for (char c : s) {
        int v = -1;
        if (c >= '0' && c <= '9') {
            v = c - '0';
        } else if (c >= 'a' && c <= 'f') {
            v = c - 'a' + 10;
        } else if (c >= 'A' && c <= 'F') {
            v = c - 'A' + 10;
        } else if (c == ' ' || c == ':' || c == '_') {
            continue;
        } else {
            throw std::runtime_error("bad hex payload: " + s);
        }
        if (hi < 0) {
            hi = v;
        } else {
            out.push_back(static_cast<std::uint8_t>(hi * 16 + v));
            hi = -1;
        }
    }
    if (hi >= 0) {
        throw std::runtime_error("odd hex digit count in payload: " + s);
    }
    if (out.size() > 8) {
        throw std::runtime_error("payload longer than 8 bytes: " + s);
    }
    return out;
}

[[nodiscard]] inline std::string dir_of(const std::string& path) {
    const auto slash = path.find_last_of('/');
    return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

[[nodiscard]] inline std::string join_path(const std::string& base, const std::string& rel) {
    if (rel.empty() || rel.front() == '/' || base.empty()) {
        return rel;
    }
    return base + "/" + rel;
}

} // namespace detail

/// One assembled simulation world. Owns every node; officer attached last.
class World {
public:
    World(const ScenarioConfig& cfg, OfficerMode officer_mode, const AllowlistTable* table,
          const std::string& base_dir, bool with_attackers)
        : cfg_(cfg) {
        // Collect taps in first-appearance order.
        std::vector<std::vector<int>> tap_members;
        auto tap_slot = [&](const std::string& name) -> int {
            for (std::size_t i = 0; i < tap_names_.size(); ++i) {
                if (tap_names_[i] == name) {
                    return static_cast<int>(i);
                }
            }
            tap_names_.push_back(name);
            tap_members.emplace_back();
            return static_cast<int>(tap_names_.size()) - 1;
        };

        int ctrl_salt = 0;
        for (const NodeSpec& spec : cfg.nodes) {
            const bool attacker = spec.kind == NodeKind::Fia || spec.kind == NodeKind::Sba;
            if (attacker && !with_attackers) {
                ++ctrl_salt;
                continue;
            }
            int bus_idx = -1;
            switch (spec.kind) {
            case NodeKind::Ecu:
            case NodeKind::Sensor:
            case NodeKind::Dashboard:
            case NodeKind::Background: {
                auto node = std::make_unique<EcuNode>(ctrl_salt);
                bus_idx = bus_.add_node(node.get());
                setup_ecu(*node, spec, bus_idx, ctrl_salt, officer_mode == OfficerMode::Learning);
                ecus_.push_back(node.get());
                owned_.push_back(std::move(node));
                break;
            }
            case NodeKind::Fia: {
                auto node = std::make_unique<FiaNode>(ctrl_salt);
                bus_idx = bus_.add_node(node.get());
                setup_fia(*node, spec, bus_idx, ctrl_salt, base_dir);
                fias_.push_back(node.get());
                owned_.push_back(std::move(node));
                break;
            }
            case NodeKind::Sba: {
                auto node = std::make_unique<SbaNode>(ctrl_salt, sba_kind(spec));
                bus_idx = bus_.add_node(node.get());
                node->set_victim(spec.victim_id);
                node->set_max_hits(spec.max_hits);
                node->arm(spec.start, spec.duration);
                sbas_.push_back(node.get());
                owned_.push_back(std::move(node));
                break;
            }
            }
            node_names_.push_back(spec.name);
            node_kinds_.push_back(spec.kind);
            if (!spec.tap.empty()) {
                tap_members[static_cast<std::size_t>(tap_slot(spec.tap))].push_back(bus_idx);
            }
            ++ctrl_salt;
        }
        for (std::size_t i = 0; i < tap_names_.size(); ++i) {
            bus_.add_tap(tap_names_[i], tap_members[i]);
        }

        OfficerConfig ocfg;
        ocfg.mode = officer_mode;
        ocfg.activation_tick = cfg.officer.activation_tick;
        ocfg.allow_legacy_overflow = cfg.officer.allow_legacy_overflow;
        ocfg.instrument_delay = cfg.officer.instrument_delay;
        officer_ = std::make_unique<Officer>(ocfg, tap_names_);
        if (table != nullptr) {
            officer_->set_allowlist(*table);
        }
        bus_.add_node(officer_.get());
        node_names_.push_back("officer");
        node_kinds_.push_back(NodeKind::Ecu); // placeholder kind, never a controller
    }

    void run(Tick ticks) { bus_.run(ticks); }

    [[nodiscard]] Bus& bus() noexcept { return bus_; }
    [[nodiscard]] Officer& officer() noexcept { return *officer_; }
    [[nodiscard]] const std::vector<std::string>& tap_names() const noexcept { return tap_names_; }
    [[nodiscard]] const std::vector<std::string>& node_names() const noexcept { return node_names_; }
    [[nodiscard]] std::vector<EcuNode*>& ecus() noexcept { return ecus_; }
    [[nodiscard]] std::vector<FiaNode*>& fias() noexcept { return fias_; }
    [[nodiscard]] std::vector<SbaNode*>& sbas() noexcept { return sbas_; }
    [[nodiscard]] std::vector<TraceRecord>& trace() noexcept { return trace_; }
    [[nodiscard]] std::vector<RxRecord>& rx() noexcept { return rx_; }

    [[nodiscard]] std::vector<NodeSummary> summaries() const {
        std::vector<NodeSummary> out;
        std::size_t ei = 0;
        std::size_t fi = 0;
        std::size_t si = 0;
        for (std::size_t i = 0; i + 1 < node_names_.size(); ++i) { // skip trailing officer
            NodeSummary s;
            s.name = node_names_[i];
            s.kind = node_kinds_[i];
            const CanController* c = nullptr;
            if (s.kind == NodeKind::Fia) {
                c = &fias_[fi++]->ctrl();
            } else if (s.kind == NodeKind::Sba) {
                ++si;
            } else {
                c = &ecus_[ei++]->ctrl();
            }
            if (c != nullptr) {
                s.has_ctrl = true;
                s.emitted = c->emitted();
                s.delivered = c->delivered();
                s.tec = c->tec();
                s.rec = c->rec();
                s.bus_off = c->bus_off();
                s.bus_off_tick = c->bus_off_tick();
            }
            out.push_back(std::move(s));
        }
        return out;
    }

private:
    [[nodiscard]] static BitAttackKind sba_kind(const NodeSpec& spec) {
        if (spec.mode == "frame_kill") {
            return BitAttackKind::FrameKill;
        }
        if (spec.mode == "duplicate_delivery") {
            return BitAttackKind::DuplicateDelivery;
        }
        if (spec.mode == "recovery_freeze") {
            return BitAttackKind::RecoveryFreeze;
        }
        throw std::runtime_error("node '" + spec.name + "': bad sba mode: " + spec.mode);
    }

    [[nodiscard]] Frame proto_frame(const NodeSpec& spec) const {
        Frame f{};
        f.id = spec.id;
        f.dlc = static_cast<std::uint8_t>(spec.dlc);
        if (spec.payload != "random") {
            const auto bytes = detail::parse_hex_bytes(spec.payload);
            for (std::size_t i = 0; i < bytes.size() && i < 8; ++i) {
                f.data[i] = bytes[i];
            }
        }
        return f;
    }

    [[nodiscard]] CanController::PayloadFn payload_fn(const NodeSpec& spec, int salt) const {
        const std::uint64_t s = mix_seed(cfg_.seed, static_cast<std::uint64_t>(salt));
        if (spec.random_ids) {
            auto rng = std::make_shared<std::mt19937_64>(s);
            return [rng](Frame& f, Tick) {
                f.id = static_cast<std::uint16_t>((*rng)() & kMaxId);
                for (int i = 0; i < f.dlc; ++i) {
                    f.data[static_cast<std::size_t>(i)] =
                        static_cast<std::uint8_t>((*rng)() % 256);
                }
            };
        }
        if (spec.payload == "random") {
            return random_payload(s);
        }
        return {};
    }

    void setup_ecu(EcuNode& node, const NodeSpec& spec, int bus_idx, int salt, bool learning) {
        CanController& c = node.ctrl();
        c.on_tx_event = [this, bus_idx](const Frame& f, Tick sof, Tick end, TxOutcome out,
                                        int retrans) {
            trace_.push_back(TraceRecord{sof, end, bus_idx, f, out, retrans});
        };
        c.on_receive = [this, bus_idx](const Frame& f, Tick now) {
            rx_.push_back(RxRecord{now, bus_idx, f});
        };
        // period 0 with a nonzero learn_period = a node that owns its id (it
        // speaks during the learning phase) but is silent while under attack.
        const Tick period = learning && spec.learn_period != 0 ? spec.learn_period : spec.period;
        if (spec.kind == NodeKind::Dashboard || period == 0) {
            return;
        }
        c.enqueue_periodic(proto_frame(spec), spec.offset, period, spec.count,
                           payload_fn(spec, salt));
    }

    void setup_fia(FiaNode& node, const NodeSpec& spec, int bus_idx, int salt,
                   const std::string& base_dir) {
        node.forward_tx_event = [this, bus_idx](const Frame& f, Tick sof, Tick end,
                                                TxOutcome out, int retrans) {
            trace_.push_back(TraceRecord{sof, end, bus_idx, f, out, retrans});
        };
        const std::string mode = spec.mode.empty() ? "spoof_blind" : spec.mode;
        if (mode == "flooding") {
            node.configure_flooding(proto_frame(spec), spec.offset,
                                    spec.period == 0 ? 1 : spec.period, spec.count,
                                    payload_fn(spec, salt));
        } else if (mode == "spoof_blind") {
            node.configure_spoof_blind(proto_frame(spec), spec.offset,
                                       spec.period == 0 ? 1 : spec.period, spec.count,
                                       payload_fn(spec, salt));
        } else if (mode == "spoof_after") {
            node.configure_spoof_after(proto_frame(spec), spec.offset, spec.count,
                                       payload_fn(spec, salt));
        } else if (mode == "replay") {
            node.configure_replay(load_replay(detail::join_path(base_dir, spec.trace),
                                              spec.offset),
                                  spec.repeat);
        } else {
            throw std::runtime_error("node '" + spec.name + "': bad fia mode: " + mode);
        }
    }

    /// Replay source: a previously written trace file; Delivered lines become
    /// (tick + shift, frame) shots.
    [[nodiscard]] static std::vector<std::pair<Tick, Frame>> load_replay(const std::string& path,
                                                                         Tick shift) {
        std::ifstream f(path);
        if (!f) {
            throw std::runtime_error("cannot open replay trace: " + path);
        }
        std::vector<std::pair<Tick, Frame>> shots;
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty() || line[0] == '#') {
                continue;
            }
            std::istringstream ls(line);
            unsigned long long bit_time = 0;
            std::string node;
            std::string id_s;
            int dlc = 0;
            std::string payload;
            std::string outcome;
            int retrans = 0;
            if (!(ls >> bit_time >> node >> id_s >> dlc >> payload >> outcome >> retrans)) {
                throw std::runtime_error("bad trace line in " + path + ": " + line);
            }
            if (outcome != "Delivered") {
                continue;
            }
            Frame fr{};
            fr.id = static_cast<std::uint16_t>(std::stoul(id_s, nullptr, 0));
            fr.dlc = static_cast<std::uint8_t>(dlc);
            if (payload != "-") {
                const auto bytes = detail::parse_hex_bytes(payload);
                for (std::size_t i = 0; i < bytes.size() && i < 8; ++i) {
                    fr.data[i] = bytes[i];
                }
            }
            shots.emplace_back(static_cast<Tick>(bit_time) + shift, fr);
        }
        return shots;
    }

    ScenarioConfig cfg_;
    Bus bus_;
    std::vector<std::unique_ptr<Node>> owned_;
    std::unique_ptr<Officer> officer_;
    std::vector<EcuNode*> ecus_;
    std::vector<FiaNode*> fias_;
    std::vector<SbaNode*> sbas_;
    std::vector<std::string> tap_names_;
    std::vector<std::string> node_names_;
    std::vector<NodeKind> node_kinds_;
    std::vector<TraceRecord> trace_;
    std::vector<RxRecord> rx_;
};

/// Run only the learning pass of a scenario and return the learned table.
[[nodiscard]] inline AllowlistTable learn_allowlist(const ScenarioConfig& cfg,
                                                    const std::string& base_dir = ".") {
    World w(cfg, OfficerMode::Learning, nullptr, base_dir, /*with_attackers=*/false);
    w.run(cfg.officer.learn_ticks);
    return w.officer().allowlist();
}

/// Every id attributed to the first declared tap: the single-source corpus
/// configuration used by the delay experiment.
[[nodiscard]] inline AllowlistTable universal_allowlist(const std::string& tap) {
    AllowlistTable t;
    auto& ids = t.by_tap[tap];
    for (int i = 0; i <= kMaxId; ++i) {
        ids.insert(static_cast<std::uint16_t>(i));
    }
    return t;
}

namespace detail {

inline void match_attacks(RunOutput& out) {
    out.attack_matched.assign(out.attacks.size(), false);
    std::vector<bool> alert_used(out.alerts.size(), false);
    for (std::size_t i = 0; i < out.attacks.size(); ++i) {
        const AttackEntry& e = out.attacks[i];
        for (std::size_t a = 0; a < out.alerts.size(); ++a) {
            const Alert& al = out.alerts[a];
            if (al.frame_id != e.id) {
                continue;
            }
            const bool hit = e.family == AttackFamily::FrameInjection
                                 ? (al.tick >= e.start && al.tick <= e.end)
                                 : (al.tick == e.start);
            if (hit) {
                out.attack_matched[i] = true;
                alert_used[a] = true;
            }
        }
    }
    out.metrics.false_positive_count = 0;
    for (std::size_t a = 0; a < out.alerts.size(); ++a) {
        if (!alert_used[a]) {
            ++out.metrics.false_positive_count;
        }
    }
}

inline void apply_prevention_join(RunOutput& out) {
    for (TraceRecord& r : out.trace) {
        if (r.outcome != TxOutcome::ErrorAborted) {
            continue;
        }
        for (const KillRecord& k : out.kills) {
            if (k.frame_id == r.frame.id && r.end >= k.start && r.end <= k.end) {
                r.outcome = TxOutcome::PreventedByOfficer;
                break;
            }
        }
    }
}

} // namespace detail

/// Build, run, and score a scenario against an explicit ownership table
/// (nullptr = officer starts empty).
[[nodiscard]] inline RunOutput run_scenario_with_table(const ScenarioConfig& cfg,
                                                       const AllowlistTable* table,
                                                       const std::string& base_dir = ".") {
    World w(cfg, cfg.officer.mode, table, base_dir, /*with_attackers=*/true);
    w.run(cfg.ticks);

    RunOutput out;
    out.trace = std::move(w.trace());
    out.rx = std::move(w.rx());
    out.alerts = w.officer().alerts();
    out.kills = w.officer().kills();
    out.tap_names = w.tap_names();
    out.allowlist = table != nullptr ? *table : w.officer().allowlist();
    out.nodes = w.summaries();

    // An attempt still in flight when the run ends is neither a success nor
    // a failure; it is excluded from every rate denominator.
    for (FiaNode* f : w.fias()) {
        for (const AttackEntry& e : f->log()) {
            if (!e.open) {
                out.attacks.push_back(e);
            }
        }
    }
    for (SbaNode* s : w.sbas()) {
        for (const AttackEntry& e : s->log()) {
            out.attacks.push_back(e);
        }
    }

    detail::apply_prevention_join(out);
    detail::match_attacks(out);

    Metrics& m = out.metrics;
    m.alerts_total = out.alerts.size();
    m.kills_total = out.kills.size();
    m.attack_entries = out.attacks.size();
    m.delay_histogram = w.officer().delay_histogram();
    m.delay_frames = w.officer().delay_frames();

    std::uint64_t fia_entries = 0;
    std::uint64_t fia_delivered = 0;
    std::uint64_t fia_prevented = 0;
    std::uint64_t sba_kill_hits = 0;
    bool any_frame_kill = false;
    for (std::size_t i = 0; i < out.attacks.size(); ++i) {
        const AttackEntry& e = out.attacks[i];
        if (out.attack_matched[i]) {
            ++m.matched_entries;
        }
        if (e.family == AttackFamily::FrameInjection) {
            ++fia_entries;
            if (e.delivered) {
                ++fia_delivered;
            }
        } else {
            ++sba_kill_hits; // refined below per sba node kind
        }
    }
    m.delivered_attack_entries = fia_delivered;
    // prevented = aborted attempts whose terminal tick falls in a kill burst
    for (std::size_t i = 0; i < out.attacks.size(); ++i) {
        const AttackEntry& e = out.attacks[i];
        if (e.family != AttackFamily::FrameInjection || !e.aborted) {
            continue;
        }
        for (const KillRecord& k : out.kills) {
            if (k.frame_id == e.id && e.end >= k.start && e.end <= k.end) {
                ++fia_prevented;
                break;
            }
        }
    }
    m.prevented_entries = fia_prevented;

    // Victim frames that survived a frame-kill attacker's armed window.
    std::uint64_t dos_survivors = 0;
    for (const NodeSpec& spec : cfg.nodes) {
        if (spec.kind != NodeKind::Sba || spec.mode != "frame_kill") {
            continue;
        }
        any_frame_kill = true;
        for (const TraceRecord& r : out.trace) {
            if (r.outcome == TxOutcome::Delivered && r.frame.id == spec.victim_id
                && r.sof >= spec.start
                && (spec.duration == 0 || r.sof < spec.start + spec.duration)) {
                ++dos_survivors;
            }
        }
    }

    const bool officer_active =
        cfg.officer.mode == OfficerMode::Detect || cfg.officer.mode == OfficerMode::Prevent;

    if (fia_entries > 0) {
        m.asr_percent = 100.0 * static_cast<double>(fia_delivered)
                        / static_cast<double>(fia_entries);
    } else if (any_frame_kill && sba_kill_hits + dos_survivors > 0) {
        m.asr_percent = 100.0 * static_cast<double>(sba_kill_hits)
                        / static_cast<double>(sba_kill_hits + dos_survivors);
    }
    if (officer_active && m.attack_entries > 0) {
        m.detection_rate_percent = 100.0 * static_cast<double>(m.matched_entries)
                                   / static_cast<double>(m.attack_entries);
    }
    if (cfg.officer.mode == OfficerMode::Prevent && fia_entries > 0) {
        m.prevention_rate_percent = 100.0 * static_cast<double>(fia_prevented)
                                    / static_cast<double>(fia_entries);
    }

    std::uint64_t legit_emitted = 0;
    std::uint64_t legit_delivered = 0;
    for (const NodeSummary& s : out.nodes) {
        if (s.kind == NodeKind::Fia || s.kind == NodeKind::Sba || !s.has_ctrl) {
            continue;
        }
        legit_emitted += s.emitted;
        legit_delivered += s.delivered;
        m.frames_delivered += s.delivered;
    }
    for (const NodeSummary& s : out.nodes) {
        if (s.kind == NodeKind::Fia && s.has_ctrl) {
            m.frames_delivered += s.delivered;
            if (s.bus_off && !m.attacker_busoff_tick.has_value()) {
                m.attacker_busoff_tick = s.bus_off_tick;
            }
        }
    }
    if (legit_emitted > 0) {
        m.legit_delivery_rate_percent = 100.0 * static_cast<double>(legit_delivered)
                                        / static_cast<double>(legit_emitted);
    }
    if (m.attacker_busoff_tick.has_value() && !out.kills.empty()) {
        const double us_per_tick = 1000.0 / static_cast<double>(cfg.bitrate_kbps);
        m.escalation_duration_us = static_cast<double>(*m.attacker_busoff_tick
                                                       - out.kills.front().start)
                                   * us_per_tick;
    }
    return out;
}

/// Full scenario entry point: resolves the allowlist source ('none',
/// 'learned', 'universal', or a file path), then runs and scores.
[[nodiscard]] inline RunOutput run_scenario(const ScenarioConfig& cfg,
                                            const std::string& base_dir = ".") {
    const std::string& src = cfg.officer.allowlist;
    if (cfg.officer.mode == OfficerMode::Off || cfg.officer.mode == OfficerMode::Learning
        || src == "none") {
        return run_scenario_with_table(cfg, nullptr, base_dir);
    }
    if (src == "learned") {
        const AllowlistTable t = learn_allowlist(cfg, base_dir);
        return run_scenario_with_table(cfg, &t, base_dir);
    }
    if (src == "universal") {
        std::string first_tap;
        for (const NodeSpec& n : cfg.nodes) {
            if (!n.tap.empty()) {
                first_tap = n.tap;
                break;
            }
        }
        if (first_tap.empty()) {
            throw std::runtime_error("allowlist=universal requires at least one tapped node");
        }
        const AllowlistTable t = universal_allowlist(first_tap);
        return run_scenario_with_table(cfg, &t, base_dir);
    }
    std::ifstream f(detail::join_path(base_dir, src));
    if (!f) {
        throw std::runtime_error("cannot open allowlist: " + src);
    }
    const AllowlistTable t = AllowlistTable::load(f);
    return run_scenario_with_table(cfg, &t, base_dir);
}

// --- report writers ----------------------------------------------------------

inline void write_trace(std::ostream& os, const RunOutput& out,
                        const std::vector<std::string>& node_names) {
    os << "# bit_time node_id id dlc payload_hex outcome retrans\n";
    char buf[160];
    for (const TraceRecord& r : out.trace) {
        std::string payload;
        if (r.frame.dlc == 0) {
            payload = "-";
        } else {
            char b[4];
            for (int i = 0; i < r.frame.dlc; ++i) {
                std::snprintf(b, sizeof b, "%02x", r.frame.data[static_cast<std::size_t>(i)]);
                payload += b;
            }
        }
        std::snprintf(buf, sizeof buf, "%llu %s 0x%03x %d %s %s %d\n",
                      static_cast<unsigned long long>(r.sof),
                      node_names[static_cast<std::size_t>(r.node)].c_str(), r.frame.id,
                      static_cast<int>(r.frame.dlc), payload.c_str(), outcome_name(r.outcome),
                      r.retrans);
        os << buf;
    }
}

inline void write_alerts(std::ostream& os, const RunOutput& out) {
    os << "# bit_time kind frame_id tap bit_offset\n";
    char buf[120];
    for (const Alert& a : out.alerts) {
        const std::string tap = a.tap >= 0 && a.tap < static_cast<int>(out.tap_names.size())
                                    ? out.tap_names[static_cast<std::size_t>(a.tap)]
                                    : std::string("-");
        std::snprintf(buf, sizeof buf, "%llu %s 0x%03x %s %d\n",
                      static_cast<unsigned long long>(a.tick), alert_name(a.kind), a.frame_id,
                      tap.c_str(), a.offset);
        os << buf;
    }
}

[[nodiscard]] inline nlohmann::ordered_json metrics_json(const Metrics& m) {
    nlohmann::ordered_json j;
    auto opt = [](const std::optional<double>& v) {
        return v.has_value() ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    j["asr_percent"] = opt(m.asr_percent);
    j["detection_rate_percent"] = opt(m.detection_rate_percent);
    j["prevention_rate_percent"] = opt(m.prevention_rate_percent);
    j["false_positive_count"] = m.false_positive_count;
    j["legit_delivery_rate_percent"] = opt(m.legit_delivery_rate_percent);
    nlohmann::ordered_json hist;
    for (int i = 0; i <= 6; ++i) {
        hist[std::to_string(i)] = m.delay_histogram[static_cast<std::size_t>(i)];
    }
    j["delay_histogram"] = hist;
    j["attacker_busoff_tick"] = m.attacker_busoff_tick.has_value()
                                    ? nlohmann::ordered_json(*m.attacker_busoff_tick)
                                    : nlohmann::ordered_json(nullptr);
    j["escalation_duration_us"] = opt(m.escalation_duration_us);
    j["attack_entries"] = m.attack_entries;
    j["matched_entries"] = m.matched_entries;
    j["prevented_entries"] = m.prevented_entries;
    j["delivered_attack_entries"] = m.delivered_attack_entries;
    j["alerts_total"] = m.alerts_total;
    j["kills_total"] = m.kills_total;
    j["frames_delivered"] = m.frames_delivered;
    j["delay_frames"] = m.delay_frames;
    return j;
}

inline void write_metrics(std::ostream& os, const Metrics& m) {
    os << metrics_json(m).dump(2) << "\n";
}

/// offset,count,cumulative_fraction rows over offsets 0..6.
inline void write_cdf_csv(std::ostream& os, const std::array<std::uint64_t, 7>& hist,
                          std::uint64_t total) {
    os << "offset,count,cumulative_fraction\n";
    std::uint64_t acc = 0;
    char buf[80];
    for (int i = 0; i <= 6; ++i) {
        acc += hist[static_cast<std::size_t>(i)];
        const double frac = total == 0 ? 0.0
                                       : static_cast<double>(acc) / static_cast<double>(total);
        std::snprintf(buf, sizeof buf, "%d,%llu,%.6f\n", i,
                      static_cast<unsigned long long>(hist[static_cast<std::size_t>(i)]), frac);
        os << buf;
    }
}

// --- canned experiments --------------------------------------------------------

/// Detection coverage matrices over four ECUs (ids 0x100..0x400) of which only
/// the first two sit behind measured pins. Cell values: 1 detected, 0 not
/// detected, -1 not applicable (diagonal).
struct CoverageMatrices {
    std::array<std::array<int, 4>, 4> spoofing;  // [origin][spoofed id owner]
    std::array<std::array<int, 4>, 4> bit_kill;  // [attacker position][victim]
};

[[nodiscard]] inline CoverageMatrices coverage_sweep(std::uint64_t seed) {
    const std::array<std::uint16_t, 4> ids{0x100, 0x200, 0x300, 0x400};
    const std::array<const char*, 4> taps{"A", "B", "", ""};

    AllowlistTable table;
    table.by_tap["A"].insert(0x100);
    table.by_tap["B"].insert(0x200);
    table.unattributed.insert(0x300);
    table.unattributed.insert(0x400);

    auto base_cfg = [&](std::uint64_t salt) {
        ScenarioConfig cfg;
        cfg.ticks = 200000;
        cfg.seed = mix_seed(seed, salt);
        cfg.officer.mode = OfficerMode::Detect;
        cfg.officer.allowlist = "explicit";
        for (int i = 0; i < 4; ++i) {
            NodeSpec n;
            n.name = std::string("ecu_") + static_cast<char>('a' + i);
            n.kind = NodeKind::Ecu;
            n.id = ids[static_cast<std::size_t>(i)];
            n.dlc = 8;
            n.period = 2400 + 310 * static_cast<Tick>(i);
            n.offset = 40 + 700 * static_cast<Tick>(i);
            n.tap = taps[static_cast<std::size_t>(i)];
            cfg.nodes.push_back(n);
        }
        return cfg;
    };

    CoverageMatrices out{};
    for (int o = 0; o < 4; ++o) {
        for (int s = 0; s < 4; ++s) {
            if (o == s) {
                out.spoofing[static_cast<std::size_t>(o)][static_cast<std::size_t>(s)] = -1;
                continue;
            }
            ScenarioConfig cfg = base_cfg(static_cast<std::uint64_t>(100 + o * 4 + s));
            NodeSpec atk;
            atk.name = "intruder";
            atk.kind = NodeKind::Fia;
            atk.mode = "spoof_blind";
            atk.id = ids[static_cast<std::size_t>(s)];
            atk.dlc = 8;
            atk.period = 5100;
            atk.offset = 50000;
            atk.tap = taps[static_cast<std::size_t>(o)]; // empty = unmonitored origin
            cfg.nodes.push_back(atk);
            const RunOutput r = run_scenario_with_table(cfg, &table);
            bool detected = false;
            for (bool b : r.attack_matched) {
                detected = detected || b;
            }
            out.spoofing[static_cast<std::size_t>(o)][static_cast<std::size_t>(s)] =
                detected ? 1 : 0;
        }
    }
    for (int a = 0; a < 4; ++a) {
        for (int v = 0; v < 4; ++v) {
            if (a == v) {
                out.bit_kill[static_cast<std::size_t>(a)][static_cast<std::size_t>(v)] = -1;
                continue;
            }
            ScenarioConfig cfg = base_cfg(static_cast<std::uint64_t>(200 + a * 4 + v));
            NodeSpec atk;
            atk.name = "biter";
            atk.kind = NodeKind::Sba;
            atk.mode = "frame_kill";
            atk.victim_id = ids[static_cast<std::size_t>(v)];
            atk.max_hits = 8; // enough to sample, victim stays short of bus-off
            atk.start = 50000;
            atk.tap = taps[static_cast<std::size_t>(a)];
            cfg.nodes.push_back(atk);
            const RunOutput r = run_scenario_with_table(cfg, &table);
            bool detected = false;
            for (bool b : r.attack_matched) {
                detected = detected || b;
            }
            out.bit_kill[static_cast<std::size_t>(a)][static_cast<std::size_t>(v)] =
                detected ? 1 : 0;
        }
    }
    return out;
}

inline void write_coverage(std::ostream& os, const CoverageMatrices& m) {
    auto cell = [](int v) {
        return v < 0 ? "  -" : (v == 1 ? "  Y" : "  n");
    };
    os << "spoofing detection (rows: origin, cols: spoofed id owner)\n";
    os << "      A  B  C  D\n";
    for (int i = 0; i < 4; ++i) {
        os << "  " << static_cast<char>('A' + i) << " ";
        for (int j = 0; j < 4; ++j) {
            os << cell(m.spoofing[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
        }
        os << "\n";
    }
    os << "single-bit frame-kill detection (rows: attacker position, cols: victim)\n";
    os << "      A  B  C  D\n";
    for (int i = 0; i < 4; ++i) {
        os << "  " << static_cast<char>('A' + i) << " ";
        for (int j = 0; j < 4; ++j) {
            os << cell(m.bit_kill[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
        }
        os << "\n";
    }
}

/// Sensor spoofing walkthrough: ramping sensor readings, a blind spoofer that
/// starts at t1, the guardian activating in prevent mode at t2.
struct SensorDemo {
    struct Row {
        Tick tick;
        unsigned value;
        bool spoofed;
    };
    std::vector<Row> rows;
    Tick t1 = 0;
    Tick t2 = 0;
    std::optional<Tick> attacker_busoff_tick;
    Metrics metrics;
};

[[nodiscard]] inline SensorDemo demo_sensor(std::uint64_t seed) {
    SensorDemo demo;
    demo.t1 = 200000;
    demo.t2 = 400000;

    ScenarioConfig cfg;
    cfg.ticks = 650000;
    cfg.seed = seed;
    cfg.officer.mode = OfficerMode::Prevent;
    cfg.officer.activation_tick = demo.t2;
    cfg.officer.allowlist = "explicit";

    NodeSpec sensor;
    sensor.name = "sensor";
    sensor.kind = NodeKind::Sensor;
    sensor.id = 0x110;
    sensor.dlc = 2;
    sensor.period = 0; // scheduled manually below with a ramp payload
    sensor.tap = "S";
    cfg.nodes.push_back(sensor);

    NodeSpec dash;
    dash.name = "dashboard";
    dash.kind = NodeKind::Dashboard;
    cfg.nodes.push_back(dash);

    NodeSpec atk;
    atk.name = "intruder";
    atk.kind = NodeKind::Fia;
    atk.mode = "spoof_blind";
    atk.id = 0x110;
    atk.dlc = 2;
    atk.payload = "fff0";
    atk.period = 2500;
    atk.offset = demo.t1;
    cfg.nodes.push_back(atk);

    AllowlistTable table;
    table.by_tap["S"].insert(0x110);

    // The sensor emits a deterministic ramp, 12-bit value big-endian.
    World w(cfg, cfg.officer.mode, &table, ".", /*with_attackers=*/true);
    EcuNode* sensor_node = w.ecus().front();
    sensor_node->ctrl().enqueue_periodic(
        Frame{0x110, 2, {}}, 60, 5000, 0, [](Frame& f, Tick now) {
            const unsigned v = static_cast<unsigned>((now / 5000) * 7 % 0x1000);
            f.data[0] = static_cast<std::uint8_t>(v >> 8);
            f.data[1] = static_cast<std::uint8_t>(v & 0xFF);
        });
    w.run(cfg.ticks);

    int dash_idx = 1; // second declared node
    for (const RxRecord& r : w.rx()) {
        if (r.node != dash_idx || r.frame.id != 0x110) {
            continue;
        }
        const unsigned v = static_cast<unsigned>(r.frame.data[0]) << 8 | r.frame.data[1];
        demo.rows.push_back(SensorDemo::Row{r.tick, v, v >= 0xF000});
    }
    for (const NodeSummary& s : w.summaries()) {
        if (s.kind == NodeKind::Fia && s.bus_off) {
            demo.attacker_busoff_tick = s.bus_off_tick;
        }
    }
    return demo;
}

inline void write_sensor_csv(std::ostream& os, const SensorDemo& demo) {
    os << "tick,value,source\n";
    for (const auto& row : demo.rows) {
        os << row.tick << "," << row.value << "," << (row.spoofed ? "spoofed" : "legit")
           << "\n";
    }
}

} // namespace cantap
