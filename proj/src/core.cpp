#include "ams/core.hpp"

#include <charconv>
#include <sstream>
#include <vector>

namespace ams {

std::string to_string(MessageKind k) {
    switch (k) {
        case MessageKind::MIA: return "MIA";
        case MessageKind::TAIA: return "TAIA";
        case MessageKind::TEIF: return "TEIF";
        case MessageKind::EVENT_NOTIFY: return "EVENT_NOTIFY";
        case MessageKind::HELLO_BACK: return "HELLO_BACK";
    }
    return "?";
}

std::string to_string(DeductionKind k) {
    switch (k) {
        case DeductionKind::AgentCrashedNodeAlive: return "agent_crashed_node_alive";
        case DeductionKind::AgentSlowedDown: return "agent_slowed_down";
        case DeductionKind::NodeCrashed: return "node_crashed";
    }
    return "?";
}

std::string to_string(Role r) {
    return r == Role::Coordinator ? "coordinator" : "assistant";
}

std::string to_string(TaskKind t) {
    return t == TaskKind::D ? "D" : "I";
}

namespace {

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const char* first = value.data();
    const char* last = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
    }
    return out;
}

void check_positive(const char* name, std::uint64_t v) {
    if (v == 0) {
        throw ConfigError(std::string(name) + " must be > 0");
    }
}

// Shared by parse_config and validate_config so both report the same text.
void check_invariants(const Config& c) {
    check_positive("NODES", c.n);
    check_positive("TICK_NS", c.tick_ns);
    check_positive("MIA_SEND", c.mia_send);
    check_positive("MIA_RECV", c.mia_recv);
    check_positive("TAIA_SEND", c.taia_send);
    check_positive("TAIA_RECV", c.taia_recv);
    check_positive("IM_ALIVE_SET", c.im_alive_set);
    check_positive("IM_ALIVE_CLEAR", c.im_alive_clear);
    check_positive("TEIF_RECV", c.teif_recv);
    check_positive("MAX_LATENCY", c.max_latency);
    if (c.m >= c.n) {
        throw ConfigError("COORDINATOR must name a node: COORDINATOR < NODES violated (" +
                          std::to_string(c.m) + " >= " + std::to_string(c.n) + ")");
    }
    if (c.mia_send + c.max_latency >= c.mia_recv) {
        throw ConfigError("MIA_SEND + MAX_LATENCY < MIA_RECV violated (" +
                          std::to_string(c.mia_send) + " + " + std::to_string(c.max_latency) +
                          " >= " + std::to_string(c.mia_recv) + ")");
    }
    if (c.taia_send + c.max_latency >= c.taia_recv) {
        throw ConfigError("TAIA_SEND + MAX_LATENCY < TAIA_RECV violated (" +
                          std::to_string(c.taia_send) + " + " + std::to_string(c.max_latency) +
                          " >= " + std::to_string(c.taia_recv) + ")");
    }
    if (c.im_alive_set >= c.im_alive_clear) {
        throw ConfigError("IM_ALIVE_SET < IM_ALIVE_CLEAR violated (" +
                          std::to_string(c.im_alive_set) + " >= " +
                          std::to_string(c.im_alive_clear) + ")");
    }
    if (c.teif_recv <= c.im_alive_clear + c.max_latency) {
        throw ConfigError("TEIF_RECV > IM_ALIVE_CLEAR + MAX_LATENCY violated (" +
                          std::to_string(c.teif_recv) + " <= " +
                          std::to_string(c.im_alive_clear) + " + " +
                          std::to_string(c.max_latency) + ")");
    }
}

}  // namespace

Config parse_config(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream ls(line);
        std::string key, value, extra;
        if (!(ls >> key)) {
            continue;  // blank line
        }
        if (!(ls >> value)) {
            throw ConfigError("line " + std::to_string(lineno) + ": missing value for " + key);
        }
        if (ls >> extra) {
            throw ConfigError("line " + std::to_string(lineno) + ": trailing text after value: '" +
                              extra + "'");
        }
        if (key == "NODES") {
            cfg.n = static_cast<NodeId>(parse_u64(key, value));
        } else if (key == "COORDINATOR") {
            cfg.m = static_cast<NodeId>(parse_u64(key, value));
        } else if (key == "TICK_NS") {
            cfg.tick_ns = parse_u64(key, value);
        } else if (key == "MIA_SEND") {
            cfg.mia_send = parse_u64(key, value);
        } else if (key == "MIA_RECV") {
            cfg.mia_recv = parse_u64(key, value);
        } else if (key == "TAIA_SEND") {
            cfg.taia_send = parse_u64(key, value);
        } else if (key == "TAIA_RECV") {
            cfg.taia_recv = parse_u64(key, value);
        } else if (key == "IM_ALIVE_SET") {
            cfg.im_alive_set = parse_u64(key, value);
        } else if (key == "IM_ALIVE_CLEAR") {
            cfg.im_alive_clear = parse_u64(key, value);
        } else if (key == "TEIF_RECV") {
            cfg.teif_recv = parse_u64(key, value);
        } else if (key == "REVIVE_DELAY") {
            cfg.revive_delay = parse_u64(key, value);
        } else if (key == "NODE_REBOOT_DELAY") {
            cfg.node_reboot_delay = parse_u64(key, value);
        } else if (key == "MAX_LATENCY") {
            cfg.max_latency = parse_u64(key, value);
        } else if (key == "SEED") {
            cfg.seed = parse_u64(key, value);
        } else if (key == "ELECTION") {
            if (value == "SKIP_SCAN") {
                cfg.election = ElectionPolicy::SkipScan;
            } else if (value == "NAIVE") {
                cfg.election = ElectionPolicy::Naive;
            } else {
                throw ConfigError("ELECTION must be SKIP_SCAN or NAIVE, got '" + value + "'");
            }
        } else {
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    check_invariants(cfg);
    return cfg;
}

std::string render_config(const Config& cfg) {
    std::ostringstream out;
    out << "NODES " << cfg.n << '\n'
        << "COORDINATOR " << cfg.m << '\n'
        << "TICK_NS " << cfg.tick_ns << '\n'
        << "MIA_SEND " << cfg.mia_send << '\n'
        << "MIA_RECV " << cfg.mia_recv << '\n'
        << "TAIA_SEND " << cfg.taia_send << '\n'
        << "TAIA_RECV " << cfg.taia_recv << '\n'
        << "IM_ALIVE_SET " << cfg.im_alive_set << '\n'
        << "IM_ALIVE_CLEAR " << cfg.im_alive_clear << '\n'
        << "TEIF_RECV " << cfg.teif_recv << '\n'
        << "REVIVE_DELAY " << cfg.revive_delay << '\n'
        << "NODE_REBOOT_DELAY " << cfg.node_reboot_delay << '\n'
        << "MAX_LATENCY " << cfg.max_latency << '\n'
        << "SEED " << cfg.seed << '\n'
        << "ELECTION " << (cfg.election == ElectionPolicy::Naive ? "NAIVE" : "SKIP_SCAN") << '\n';
    return out.str();
}

ValidatedConfig validate_config(const Config& cfg) {
    check_invariants(cfg);
    return ValidatedConfig{cfg, cfg.n > 1};
}

}  // namespace ams
