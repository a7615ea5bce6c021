#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "ams/agent.hpp"
#include "ams/alarm.hpp"
#include "ams/core.hpp"
#include "ams/faultrc.hpp"

namespace ams {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class TraceTask { D, I, A, NET };

std::string to_string(TraceTask t);

struct TraceEvent {
    std::uint64_t event_id;  // consecutive per node; verbose events count separately
    Tick at;
    NodeId node;
    TraceTask task;
    std::string text;
    bool verbose = false;
};

struct Trace {
    std::vector<TraceEvent> events;
    std::uint64_t tick_ns = 1000;
};

// "10.300000" — seconds with microsecond precision.
std::string format_time_s(Tick at, std::uint64_t tick_ns);

std::string render_trace_line_text(const TraceEvent& e, std::uint64_t tick_ns);
std::string render_trace_line_json(const TraceEvent& e, std::uint64_t tick_ns);

// Health report over the live agents: how many believe they coordinate,
// whether everyone agrees who the manager is, and whether some suspicion has
// outlived the whole suspicion period (a livelock indicator).
struct PredicateReport {
    std::size_t alive_agents = 0;
    std::size_t self_coordinators = 0;
    bool identity_agreement = false;
    std::optional<NodeId> agreed_coordinator;
    struct StuckSuspicion {
        NodeId node;
        NodeId subject;
        Tick since;
    };
    std::vector<StuckSuspicion> stuck;

    bool holds() const {
        return alive_agents > 0 && self_coordinators == 1 && identity_agreement && stuck.empty();
    }
    std::string summary() const;
};

struct SimOptions {
    bool record_trace = true;
    bool verbose_trace = false;  // include heartbeat-level events
};

// Deterministic discrete-event run of n agents: virtual clock in ticks,
// per-task mailboxes with bounded pseudo-random latency (FIFO per channel),
// crash/slowdown/revive/reboot lifecycle driven by a fault list. The whole
// run is a pure function of (cfg, faults, horizon, seed).
class Simulation {
  public:
    Simulation(const ValidatedConfig& cfg, std::vector<FaultSpec> faults, std::uint64_t seed,
               SimOptions opts = {});

    // Processes every event up to and including `horizon` ticks.
    void run_until(Tick horizon);

    Tick now() const { return now_; }
    const Trace& trace() const { return trace_; }
    PredicateReport predicate() const;

    const AgentState& agent(NodeId k) const { return slot(k).agent; }
    const AlarmManager& alarms(NodeId k) const { return slot(k).alarms; }
    bool node_up(NodeId k) const { return slot(k).node_up; }
    bool taskD_up(NodeId k) const { return slot(k).taskD_up; }
    bool taskI_up(NodeId k) const { return slot(k).taskI_up; }
    bool agent_alive(NodeId k) const { return slot(k).node_up && slot(k).taskD_up; }

  private:
    struct Event {
        enum class Kind { Deliver, AlarmCheck, FaultTrigger, ReviveComplete, RebootComplete };
        Tick at = 0;
        std::uint64_t seq = 0;
        Kind kind = Kind::AlarmCheck;
        NodeId node = 0;  // AlarmCheck / ReviveComplete / RebootComplete / Deliver target
        Message msg;      // Deliver
        TaskKind to_task = TaskKind::D;
        FaultSpec fault;  // FaultTrigger
    };
    struct EventAfter {
        bool operator()(const Event& a, const Event& b) const {
            return a.at != b.at ? a.at > b.at : a.seq > b.seq;
        }
    };

    struct NodeSlot {
        AgentState agent;
        AlarmManager alarms;
        bool node_up = true;
        bool taskD_up = true;
        bool taskI_up = true;
        Tick slow_until = 0;
        std::uint64_t slow_factor = 1;
        bool revive_pending = false;
        bool reboot_pending = false;
        bool killed_marked = false;
        std::optional<Tick> scheduled_check;
    };

    struct ChannelKey {
        NodeId from;
        TaskKind from_task;
        NodeId to;
        auto operator<=>(const ChannelKey&) const = default;
    };

    NodeSlot& slot(NodeId k);
    const NodeSlot& slot(NodeId k) const;

    void push(Event e);
    void schedule_alarm_check(NodeId k);
    void boot_node(NodeId k);
    void process(const Event& e);
    void apply_fault(const FaultSpec& f);
    void interpret(NodeId k, TraceTask task, const Actions& actions);
    void send_message(NodeId from, Message msg, NodeId to);
    void record(NodeId node, TraceTask task, std::string text, bool verbose = false);

    ValidatedConfig cfg_;
    SimOptions opts_;
    std::vector<NodeSlot> slots_;
    std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
    std::map<ChannelKey, Tick> channel_floor_;  // earliest next delivery per channel
    std::mt19937_64 rng_;
    std::uint64_t next_seq_ = 0;
    Tick now_ = 0;
    Trace trace_;
    std::vector<std::uint64_t> event_ids_;
    std::vector<std::uint64_t> verbose_event_ids_;
};

// Convenience wrapper: simulate and hand back the trace.
Trace run(const ValidatedConfig& cfg, const std::vector<FaultSpec>& faults, Tick horizon,
          std::uint64_t seed, SimOptions opts = {});

}  // namespace ams
