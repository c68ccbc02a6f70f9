#pragma once
/// Scenario description files: a small INI dialect listing the simulation
/// parameters, the guardian configuration, and one section per bus node.
///
///   # comment (';' also works)
///   [sim]
///   ticks = 1000000
///   seed = 42
///   bitrate_kbps = 500
///
///   [officer]
///   mode = prevent              ; off | learning | detect | prevent
///   activation_tick = 0
///   allow_legacy_overflow = false
///   allowlist = learned         ; 'learned' (run a learning pass first),
///                               ; 'none', 'universal' (every id owned by the
///                               ; first tap), or a path to a saved table
///   learn_ticks = 200000        ; length of the learning pass
///   instrument_delay = false
///
///   [node engine]
///   kind = ecu                  ; ecu | sensor | dashboard | background
///   id = 0x100
///   ids = random                ; alternative to id: fresh random id each time
///   dlc = 8
///   period = 1200
///   offset = 17
///   count = 0                   ; emissions, 0 = unlimited
///   payload = random            ; 'random' or hex bytes ("DE AD")
///   tap = A                     ; measured transmit pin; omit = unmonitored
///   learn_period = 997          ; emission period in the learning pass
///
///   [node intruder]
///   kind = fia                  ; whole-frame injection through a controller
///   mode = spoof_blind          ; flooding | spoof_blind | spoof_after | replay
///   id = 0x100
///   dlc = 8
///   payload = random
///   period = 5000
///   offset = 300000
///   count = 0
///   tap = A                     ; share the victim pin = hijacked-ECU model
///   trace = replay.trace        ; replay input
///   repeat = 1
///
///   [node biter]
///   kind = sba                  ; single-bit wire access, no controller
///   mode = frame_kill           ; frame_kill | duplicate_delivery | recovery_freeze
///   victim_id = 0x100
///   max_hits = 200
///   start = 300000
///   duration = 0                ; 0 = armed to the end
///   tap = B
///
/// Unknown sections or keys are configuration errors.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bits.hpp"
#include "officer.hpp"

namespace cantap {

enum class NodeKind : std::uint8_t { Ecu, Sensor, Dashboard, Background, Fia, Sba };

struct NodeSpec {
    std::string name;
    NodeKind kind = NodeKind::Ecu;
    std::uint16_t id = 0;
    int dlc = 8;
    Tick period = 0;
    Tick offset = 0;
    long count = 0;
    std::string payload = "random"; // "random" or hex byte list
    bool random_ids = false;        // draw a fresh random id per emission
    std::string tap;                // empty = unmonitored
    Tick learn_period = 0;          // 0 = use `period`

    // attacker behavior:
    //   fia: flooding | spoof_blind | spoof_after | replay
    //   sba: frame_kill | duplicate_delivery | recovery_freeze
    std::string mode;
    std::string trace;
    int repeat = 1;
    std::uint16_t victim_id = 0;
    long max_hits = -1;
    Tick start = 0;
    Tick duration = 0;
};

struct OfficerSpec {
    OfficerMode mode = OfficerMode::Off;
    Tick activation_tick = 0;
    bool allow_legacy_overflow = false;
    std::string allowlist = "none"; // none | learned | <path>
    Tick learn_ticks = 200000;
    bool instrument_delay = false;
};

struct ScenarioConfig {
    Tick ticks = 1000000;
    std::uint64_t seed = 1;
    int bitrate_kbps = 500;
    OfficerSpec officer;
    std::vector<NodeSpec> nodes;

    static ScenarioConfig parse(std::istream& is);
    static ScenarioConfig from_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) {
            throw std::runtime_error("cannot open scenario file: " + path);
        }
        try {
            return parse(f);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ": " + e.what());
        }
    }
};

namespace detail {

[[nodiscard]] inline std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])) != 0) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])) != 0) {
        --e;
    }
    return s.substr(b, e - b);
}

[[nodiscard]] inline std::uint64_t parse_uint(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const unsigned long long r = std::stoull(v, &pos, 0); // accepts 0x..
        if (pos != v.size()) {
            throw std::invalid_argument(v);
        }
        return r;
    } catch (const std::exception&) {
        throw std::runtime_error("bad integer for '" + key + "': " + v);
    }
}

[[nodiscard]] inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no" || v == "off") {
        return false;
    }
    throw std::runtime_error("bad boolean for '" + key + "': " + v);
}

[[nodiscard]] inline OfficerMode parse_mode(const std::string& v) {
    if (v == "off") {
        return OfficerMode::Off;
    }
    if (v == "learning") {
        return OfficerMode::Learning;
    }
    if (v == "detect") {
        return OfficerMode::Detect;
    }
    if (v == "prevent") {
        return OfficerMode::Prevent;
    }
    throw std::runtime_error("bad officer mode: " + v);
}

[[nodiscard]] inline NodeKind parse_kind(const std::string& v) {
    if (v == "ecu") {
        return NodeKind::Ecu;
    }
    if (v == "sensor") {
        return NodeKind::Sensor;
    }
    if (v == "dashboard") {
        return NodeKind::Dashboard;
    }
    if (v == "background") {
        return NodeKind::Background;
    }
    if (v == "fia") {
        return NodeKind::Fia;
    }
    if (v == "sba") {
        return NodeKind::Sba;
    }
    throw std::runtime_error("bad node kind: " + v);
}

} // namespace detail

inline ScenarioConfig ScenarioConfig::parse(std::istream& is) {
    using detail::parse_bool;
    using detail::parse_kind;
    using detail::parse_mode;
    using detail::parse_uint;
    using detail::trim;

    ScenarioConfig cfg;
    enum class Sect { None, Sim, Officer, Node };
    Sect sect = Sect::None;
    NodeSpec* node = nullptr;
    std::string line;
    int lineno = 0;

    while (std::getline(is, line)) {
        ++lineno;
        const auto cut = line.find_first_of("#;");
        const std::string body = trim(cut == std::string::npos ? line : line.substr(0, cut));
        if (body.empty()) {
            continue;
        }
        if (body.front() == '[') {
            if (body.back() != ']') {
                throw std::runtime_error("line " + std::to_string(lineno) + ": unterminated section");
            }
            const std::string name = trim(body.substr(1, body.size() - 2));
            if (name == "sim") {
                sect = Sect::Sim;
            } else if (name == "officer") {
                sect = Sect::Officer;
            } else if (name.rfind("node", 0) == 0) {
                const std::string label = trim(name.substr(4));
                if (label.empty()) {
                    throw std::runtime_error("line " + std::to_string(lineno) + ": node needs a name");
                }
                cfg.nodes.push_back(NodeSpec{});
                node = &cfg.nodes.back();
                node->name = label;
                sect = Sect::Node;
            } else {
                throw std::runtime_error("line " + std::to_string(lineno) + ": unknown section [" + name + "]");
            }
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(body.substr(0, eq));
        const std::string val = trim(body.substr(eq + 1));
        if (key.empty() || val.empty()) {
            throw std::runtime_error("line " + std::to_string(lineno) + ": empty key or value");
        }

        switch (sect) {
        case Sect::Sim:
            if (key == "ticks") {
                cfg.ticks = parse_uint(val, key);
            } else if (key == "seed") {
                cfg.seed = parse_uint(val, key);
            } else if (key == "bitrate_kbps") {
                cfg.bitrate_kbps = static_cast<int>(parse_uint(val, key));
            } else {
                throw std::runtime_error("line " + std::to_string(lineno) + ": unknown [sim] key: " + key);
            }
            break;
        case Sect::Officer:
            if (key == "mode") {
                cfg.officer.mode = parse_mode(val);
            } else if (key == "activation_tick") {
                cfg.officer.activation_tick = parse_uint(val, key);
            } else if (key == "allow_legacy_overflow") {
                cfg.officer.allow_legacy_overflow = parse_bool(val, key);
            } else if (key == "allowlist") {
                cfg.officer.allowlist = val;
            } else if (key == "learn_ticks") {
                cfg.officer.learn_ticks = parse_uint(val, key);
            } else if (key == "instrument_delay") {
                cfg.officer.instrument_delay = parse_bool(val, key);
            } else {
                throw std::runtime_error("line " + std::to_string(lineno) + ": unknown [officer] key: " + key);
            }
            break;
        case Sect::Node:
            if (key == "kind") {
                node->kind = parse_kind(val);
            } else if (key == "id") {
                const auto v = parse_uint(val, key);
                if (v > kMaxId) {
                    throw std::runtime_error("line " + std::to_string(lineno) + ": id out of range");
                }
                node->id = static_cast<std::uint16_t>(v);
            } else if (key == "dlc") {
                node->dlc = static_cast<int>(parse_uint(val, key));
                if (node->dlc > 8) {
                    throw std::runtime_error("line " + std::to_string(lineno) + ": dlc out of range");
                }
            } else if (key == "period") {
                node->period = parse_uint(val, key);
            } else if (key == "offset") {
                node->offset = parse_uint(val, key);
            } else if (key == "count") {
                node->count = static_cast<long>(parse_uint(val, key));
            } else if (key == "payload") {
                node->payload = val;
            } else if (key == "ids") {
                if (val == "random") {
                    node->random_ids = true;
                } else if (val == "fixed") {
                    node->random_ids = false;
                } else {
                    throw std::runtime_error("line " + std::to_string(lineno) + ": ids must be fixed|random");
                }
            } else if (key == "tap") {
                node->tap = val;
            } else if (key == "learn_period") {
                node->learn_period = parse_uint(val, key);
            } else if (key == "mode") {
                node->mode = val;
            } else if (key == "trace") {
                node->trace = val;
            } else if (key == "repeat") {
                node->repeat = static_cast<int>(parse_uint(val, key));
            } else if (key == "victim_id") {
                const auto v = parse_uint(val, key);
                if (v > kMaxId) {
                    throw std::runtime_error("line " + std::to_string(lineno) + ": victim_id out of range");
                }
                node->victim_id = static_cast<std::uint16_t>(v);
            } else if (key == "max_hits") {
                node->max_hits = static_cast<long>(parse_uint(val, key));
            } else if (key == "start") {
                node->start = parse_uint(val, key);
            } else if (key == "duration") {
                node->duration = parse_uint(val, key);
            } else {
                throw std::runtime_error("line " + std::to_string(lineno) + ": unknown node key: " + key);
            }
            break;
        case Sect::None:
            throw std::runtime_error("line " + std::to_string(lineno) + ": key outside any section");
        }
    }
    if (cfg.nodes.empty()) {
        throw std::runtime_error("scenario declares no nodes");
    }
    return cfg;
}

} // namespace cantap
