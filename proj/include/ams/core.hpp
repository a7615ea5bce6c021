#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ams {

using NodeId = std::uint32_t;
using Tick = std::uint64_t;
using Epoch = std::uint64_t;

enum class Role { Coordinator, Assistant };

enum class TaskKind { D, I };

enum class ElectionPolicy {
    SkipScan,  // first operational node after the failed one
    Naive,     // failed + 1 mod n, operational or not
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Runtime parameters of one backbone instance. All durations are in clock
// ticks; tick_ns gives the real length of one tick (default 1 us, so that
// 5000000 ticks == 5 s).
struct Config {
    NodeId n = 4;             // node count
    NodeId m = 0;             // node hosting the initial coordinator
    std::uint64_t tick_ns = 1000;

    Tick mia_send = 100000;   // coordinator heartbeat period
    Tick mia_recv = 300000;   // assistant's deadline for coordinator heartbeats
    Tick taia_send = 100000;  // assistant heartbeat period
    Tick taia_recv = 300000;  // coordinator's deadline for assistant heartbeats
    Tick im_alive_set = 50000;
    Tick im_alive_clear = 150000;
    Tick teif_recv = 500000;  // suspicion period length

    Tick revive_delay = 200000;     // 0 = local revival disabled
    Tick node_reboot_delay = 0;     // 0 = crashed nodes never reboot
    Tick max_latency = 10000;       // upper bound on message delay

    std::uint64_t seed = 1;
    ElectionPolicy election = ElectionPolicy::SkipScan;

    bool operator==(const Config&) const = default;
};

// A Config whose invariants have been checked. ams_enabled is false for
// n == 1: a single agent runs as an inert coordinator with no self-check.
struct ValidatedConfig {
    Config cfg;
    bool ams_enabled = true;

    const Config& operator*() const { return cfg; }
    const Config* operator->() const { return &cfg; }
};

enum class MessageKind { MIA, TAIA, TEIF, EVENT_NOTIFY, HELLO_BACK };

struct Message {
    MessageKind kind;
    NodeId from = 0;
    TaskKind from_task = TaskKind::D;  // TEIF is the only task-I message
    Epoch epoch = 0;
    Tick sent_at = 0;
    NodeId coordinator = 0;  // sender's believed coordinator (HELLO_BACK payload)

    bool operator==(const Message&) const = default;
};

enum class DeductionKind {
    AgentCrashedNodeAlive,  // TEIF arrived: the agent died but its node runs
    AgentSlowedDown,        // late sign of life within the suspicion period
    NodeCrashed,            // suspicion period elapsed with total silence
};

struct Deduction {
    DeductionKind kind;
    NodeId subject;

    bool operator==(const Deduction&) const = default;
};

std::string to_string(MessageKind k);
std::string to_string(DeductionKind k);
std::string to_string(Role r);
std::string to_string(TaskKind t);

// Parses the flat "KEY value" configuration format ('#' starts a comment).
// Unknown keys, malformed values, and violated timeout inequalities are
// reported as ConfigError.
Config parse_config(const std::string& text);

// Renders every key in canonical order; parse_config(render_config(c)) == c.
std::string render_config(const Config& cfg);

// Checks the timeout inequalities and field ranges. Throws ConfigError with
// the violated inequality spelled out.
ValidatedConfig validate_config(const Config& cfg);

}  // namespace ams
