#pragma once

#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "ams/alarm.hpp"
#include "ams/core.hpp"

namespace ams {

struct AgentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One node's task-D protocol state. Tasks D and I run on the same event loop
// and share im_alive_flag through this struct.
struct AgentState {
    NodeId me = 0;
    Role role = Role::Assistant;
    Epoch epoch = 0;
    NodeId coordinator = 0;           // believed manager
    std::set<NodeId> operational;     // nodes believed alive, includes me
    std::map<NodeId, Tick> suspected; // sus flags; value = tick the flag was set
    bool im_alive_flag = false;
    bool crashed = false;

    std::map<Clause, AlarmId> alarm_ids;  // live clauses registered with task A
    AlarmId next_alarm_id = 1;

    bool suspects(NodeId k) const { return suspected.contains(k); }

    bool operator==(const AgentState&) const = default;
};

// Externally visible effects of a transition, interpreted by the harness.
namespace act {

struct Send {
    NodeId to;
    Message msg;
};
struct Broadcast {
    Message msg;
};
struct RegisterAlarm {
    AlarmSpec spec;
};
struct CancelAlarm {
    Clause clause;
    AlarmId id;
};
struct RestartAlarm {
    Clause clause;
    AlarmId id;
};
struct Deduce {
    Deduction deduction;
};
struct ReviveLocalD {};
struct RecoveryHook {
    std::string description;
};
struct TraceNote {
    std::string text;
};

}  // namespace act

using Action = std::variant<act::Send, act::Broadcast, act::RegisterAlarm, act::CancelAlarm,
                            act::RestartAlarm, act::Deduce, act::ReviveLocalD, act::RecoveryHook,
                            act::TraceNote>;

using Actions = std::vector<Action>;

// Deterministic successor choice: the first node in failed+1, failed+2, ...
// (mod n) that is in `operational`. Every agent with the same operational set
// picks the same node. Throws AgentError when no candidate exists.
NodeId elect_successor(const std::set<NodeId>& operational, NodeId failed_coordinator, NodeId n);

// Fresh agent for node `me`. The coordinator (me == cfg.m) registers
// MIA_SEND/j and TAIA_RECV/j for every other node; assistants register
// TAIA_SEND and MIA_RECV for the coordinator; both register the I'm-alive
// set/clear pair. With AMS disabled (n == 1) the coordinator is inert.
std::pair<AgentState, Actions> init_agent(NodeId me, const ValidatedConfig& cfg);

// Task-D reaction to an expired clause.
Actions on_alarm(AgentState& state, const FiredAlarm& fired, const ValidatedConfig& cfg);

// Task-D reaction to a protocol message.
Actions on_message(AgentState& state, const Message& msg, Tick now, const ValidatedConfig& cfg);

// Task-I reaction to IM_ALIVE_CLEAR: broadcast TEIF and ask for a local
// revival when task D never set the flag during the elapsed period.
Actions taskI_step(AgentState& state, const FiredAlarm& fired, const ValidatedConfig& cfg);

// Role switch after winning an election.
Actions become_coordinator(AgentState& state, const ValidatedConfig& cfg);

// Restart of a crashed task D by task I: fresh assistant state; stale task-D
// clauses are canceled and the assistant clause set registered anew. The
// returning agent broadcasts one TAIA so every peer re-enters it in its list
// of operational assistants.
Actions revive_taskD(AgentState& state, const ValidatedConfig& cfg);

// Application event sent to the coordinator; the TAIA send alarm is renewed
// because the notification piggybacks the heartbeat.
Actions notify_event(AgentState& state, Tick now, const ValidatedConfig& cfg);

}  // namespace ams
