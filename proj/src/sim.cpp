#include "ams/sim.hpp"

#include <cinttypes>
#include <cstdio>

namespace ams {

std::string to_string(TraceTask t) {
    switch (t) {
        case TraceTask::D: return "D";
        case TraceTask::I: return "I";
        case TraceTask::A: return "A";
        case TraceTask::NET: return "NET";
    }
    return "?";
}

std::string format_time_s(Tick at, std::uint64_t tick_ns) {
    const std::uint64_t total_ns = at * tick_ns;
    const std::uint64_t secs = total_ns / 1000000000ull;
    const std::uint64_t micros = (total_ns % 1000000000ull) / 1000ull;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%" PRIu64 ".%06" PRIu64, secs, micros);
    return buf;
}

std::string render_trace_line_text(const TraceEvent& e, std::uint64_t tick_ns) {
    std::string out;
    out += std::to_string(e.event_id);
    out += '\t';
    out += format_time_s(e.at, tick_ns);
    out += '\t';
    out += std::to_string(e.node);
    out += '\t';
    out += to_string(e.task);
    out += '\t';
    out += e.text;
    return out;
}

namespace {

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

}  // namespace

std::string render_trace_line_json(const TraceEvent& e, std::uint64_t tick_ns) {
    std::string out = "{\"event_id\":";
    out += std::to_string(e.event_id);
    out += ",\"time_s\":";
    out += format_time_s(e.at, tick_ns);
    out += ",\"node\":";
    out += std::to_string(e.node);
    out += ",\"task\":\"";
    out += to_string(e.task);
    out += "\",\"text\":\"";
    out += json_escape(e.text);
    out += "\"}";
    return out;
}

std::string PredicateReport::summary() const {
    if (alive_agents == 0) {
        return "no operational agents";
    }
    std::string out = "alive=" + std::to_string(alive_agents) +
                      " coordinators=" + std::to_string(self_coordinators) +
                      " agreement=" + (identity_agreement ? "yes" : "no");
    if (agreed_coordinator) {
        out += " coordinator=" + std::to_string(*agreed_coordinator);
    }
    out += " stuck_suspicions=" + std::to_string(stuck.size());
    return out;
}

Simulation::Simulation(const ValidatedConfig& cfg, std::vector<FaultSpec> faults,
                       std::uint64_t seed, SimOptions opts)
    : cfg_(cfg), opts_(opts), rng_(seed) {
    slots_.resize(cfg_->n);
    event_ids_.assign(cfg_->n, 0);
    verbose_event_ids_.assign(cfg_->n, 0);
    trace_.tick_ns = cfg_->tick_ns;
    for (const FaultSpec& f : faults) {
        if (f.target >= cfg_->n) {
            throw SimError("fault targets unknown node/component " + std::to_string(f.target));
        }
        Event e;
        e.at = f.at;
        e.kind = Event::Kind::FaultTrigger;
        e.node = f.target;
        e.fault = f;
        push(std::move(e));
    }
    for (NodeId k = 0; k < cfg_->n; ++k) {
        boot_node(k);
    }
}

Simulation::NodeSlot& Simulation::slot(NodeId k) {
    if (k >= slots_.size()) {
        throw SimError("node id out of range: " + std::to_string(k));
    }
    return slots_[k];
}

const Simulation::NodeSlot& Simulation::slot(NodeId k) const {
    if (k >= slots_.size()) {
        throw SimError("node id out of range: " + std::to_string(k));
    }
    return slots_[k];
}

void Simulation::push(Event e) {
    e.seq = next_seq_++;
    queue_.push(std::move(e));
}

void Simulation::record(NodeId node, TraceTask task, std::string text, bool verbose) {
    if (!opts_.record_trace || (verbose && !opts_.verbose_trace)) {
        return;
    }
    auto& counter = verbose ? verbose_event_ids_[node] : event_ids_[node];
    trace_.events.push_back(TraceEvent{counter++, now_, node, task, std::move(text), verbose});
}

void Simulation::schedule_alarm_check(NodeId k) {
    NodeSlot& s = slot(k);
    auto nd = s.alarms.next_deadline();
    if (!nd) {
        return;
    }
    if (!s.scheduled_check || *nd < *s.scheduled_check) {
        s.scheduled_check = *nd;
        Event e;
        e.at = *nd;
        e.kind = Event::Kind::AlarmCheck;
        e.node = k;
        push(std::move(e));
    }
}

void Simulation::boot_node(NodeId k) {
    NodeSlot& s = slot(k);
    s.alarms = AlarmManager{};
    s.node_up = s.taskD_up = s.taskI_up = true;
    s.slow_until = 0;
    s.slow_factor = 1;
    s.revive_pending = false;
    s.reboot_pending = false;
    s.killed_marked = false;
    s.scheduled_check.reset();
    auto [state, actions] = init_agent(k, cfg_);
    s.agent = std::move(state);
    if (s.agent.role == Role::Coordinator) {
        record(k, TraceTask::D, "INIT role=coordinator epoch=0");
    } else {
        record(k, TraceTask::D,
               "INIT role=assistant coordinator=" + std::to_string(s.agent.coordinator) +
                   " epoch=0");
    }
    interpret(k, TraceTask::D, actions);
}

void Simulation::send_message(NodeId from, Message msg, NodeId to) {
    msg.sent_at = now_;
    const NodeSlot& s = slot(from);
    const std::uint64_t factor = (now_ < s.slow_until) ? s.slow_factor : 1;
    const Tick draw = 1 + static_cast<Tick>(rng_() % cfg_->max_latency);
    Tick arrival = now_ + draw * factor;
    Tick& floor = channel_floor_[ChannelKey{from, msg.from_task, to}];
    if (arrival < floor) {
        arrival = floor;  // per-channel FIFO
    }
    floor = arrival;
    record(from, msg.from_task == TaskKind::I ? TraceTask::I : TraceTask::D,
           "SEND " + to_string(msg.kind) + " to=" + std::to_string(to) +
               " epoch=" + std::to_string(msg.epoch),
           true);
    Event e;
    e.at = arrival;
    e.kind = Event::Kind::Deliver;
    e.node = to;
    e.msg = msg;
    e.to_task = TaskKind::D;
    push(std::move(e));
}

void Simulation::interpret(NodeId k, TraceTask task, const Actions& actions) {
    NodeSlot& s = slot(k);
    for (const Action& a : actions) {
        if (const auto* send = std::get_if<act::Send>(&a)) {
            send_message(k, send->msg, send->to);
        } else if (const auto* bc = std::get_if<act::Broadcast>(&a)) {
            if (bc->msg.kind == MessageKind::TEIF) {
                record(k, TraceTask::I, "TEIF broadcast");
            }
            for (NodeId to = 0; to < cfg_->n; ++to) {
                if (to != k) {
                    send_message(k, bc->msg, to);
                }
            }
        } else if (const auto* reg = std::get_if<act::RegisterAlarm>(&a)) {
            s.alarms.register_alarm(reg->spec, now_);
            record(k, TraceTask::A, "REGISTER " + to_string(reg->spec.clause), true);
            schedule_alarm_check(k);
        } else if (const auto* cancel = std::get_if<act::CancelAlarm>(&a)) {
            // A one-shot expiry that was dropped while its task was down has
            // already left the list; recalling it is a no-op.
            if (s.alarms.contains(cancel->id)) {
                s.alarms.cancel(cancel->id);
                record(k, TraceTask::A, "CANCEL " + to_string(cancel->clause), true);
            } else {
                record(k, TraceTask::A, "CANCEL_GONE " + to_string(cancel->clause), true);
            }
        } else if (const auto* restart = std::get_if<act::RestartAlarm>(&a)) {
            s.alarms.restart(restart->id, now_);
            record(k, TraceTask::A, "RESTART " + to_string(restart->clause), true);
            schedule_alarm_check(k);
        } else if (const auto* ded = std::get_if<act::Deduce>(&a)) {
            const Deduction& d = ded->deduction;
            record(k, task, "DEDUCE " + to_string(d.kind) + " " + std::to_string(d.subject));
            if (d.kind == DeductionKind::NodeCrashed) {
                NodeSlot& target = slot(d.subject);
                if (!target.node_up && !target.reboot_pending && !target.killed_marked) {
                    target.killed_marked = true;
                    record(d.subject, TraceTask::NET, "KILLED");
                }
            }
        } else if (std::get_if<act::ReviveLocalD>(&a)) {
            if (cfg_->revive_delay > 0 && s.node_up && !s.taskD_up && !s.revive_pending) {
                s.revive_pending = true;
                Event e;
                e.at = now_ + cfg_->revive_delay;
                e.kind = Event::Kind::ReviveComplete;
                e.node = k;
                push(std::move(e));
                record(k, TraceTask::I, "REVIVE_SCHEDULED", true);
            }
        } else if (const auto* hook = std::get_if<act::RecoveryHook>(&a)) {
            record(k, task, "RECOVERY_HOOK " + hook->description);
        } else if (const auto* n = std::get_if<act::TraceNote>(&a)) {
            record(k, task, n->text);
        }
    }
}

void Simulation::apply_fault(const FaultSpec& f) {
    NodeSlot& s = slot(f.target);
    switch (f.kind) {
        case FaultKind::CrashComponent:
            record(f.target, TraceTask::NET,
                   std::string("FAULT crash task=") + to_string(f.component_task));
            if (!s.node_up) {
                break;
            }
            if (f.component_task == TaskKind::D) {
                s.taskD_up = false;
                s.agent.crashed = true;
            } else {
                s.taskI_up = false;
            }
            break;
        case FaultKind::CrashNode:
        case FaultKind::RebootNode: {
            record(f.target, TraceTask::NET,
                   f.kind == FaultKind::CrashNode ? "FAULT crash node" : "FAULT reboot node");
            s.node_up = s.taskD_up = s.taskI_up = false;
            s.agent.crashed = true;
            s.revive_pending = false;
            Tick delay = cfg_->node_reboot_delay;
            if (f.kind == FaultKind::RebootNode && delay == 0) {
                delay = 1;  // an explicit reboot fault always reboots
            }
            if ((f.kind == FaultKind::RebootNode || cfg_->node_reboot_delay > 0) &&
                !s.reboot_pending) {
                s.reboot_pending = true;
                Event e;
                e.at = now_ + delay;
                e.kind = Event::Kind::RebootComplete;
                e.node = f.target;
                push(std::move(e));
            }
            break;
        }
        case FaultKind::Slowdown:
            record(f.target, TraceTask::NET,
                   "FAULT slowdown factor=" + std::to_string(f.factor) +
                       " duration=" + std::to_string(f.duration));
            s.slow_factor = f.factor;
            s.slow_until = now_ + f.duration;
            break;
    }
}

void Simulation::process(const Event& e) {
    switch (e.kind) {
        case Event::Kind::FaultTrigger:
            apply_fault(e.fault);
            break;
        case Event::Kind::AlarmCheck: {
            NodeSlot& s = slot(e.node);
            if (s.scheduled_check && *s.scheduled_check == e.at) {
                s.scheduled_check.reset();
            }
            if (!s.node_up) {
                break;
            }
            // One expiry at a time: a handler canceling another alarm due at
            // the same tick recalls its expiry message.
            while (auto fired = s.alarms.advance_one(e.at)) {
                if (fired->target_task == TaskKind::D) {
                    if (!s.taskD_up) {
                        record(e.node, TraceTask::A, "DROPPED " + to_string(fired->clause), true);
                        continue;
                    }
                    interpret(e.node, TraceTask::D, on_alarm(s.agent, *fired, cfg_));
                } else {
                    if (!s.taskI_up) {
                        record(e.node, TraceTask::A, "DROPPED " + to_string(fired->clause), true);
                        continue;
                    }
                    interpret(e.node, TraceTask::I, taskI_step(s.agent, *fired, cfg_));
                }
            }
            schedule_alarm_check(e.node);
            break;
        }
        case Event::Kind::Deliver: {
            NodeSlot& s = slot(e.node);
            if (!s.node_up) {
                record(e.node, TraceTask::NET,
                       "DROP " + to_string(e.msg.kind) + " from=" + std::to_string(e.msg.from) +
                           " reason=node_down",
                       true);
                break;
            }
            if (e.to_task == TaskKind::D && !s.taskD_up) {
                record(e.node, TraceTask::NET,
                       "DROP " + to_string(e.msg.kind) + " from=" + std::to_string(e.msg.from) +
                           " reason=task_down",
                       true);
                break;
            }
            record(e.node, TraceTask::D,
                   "RECV " + to_string(e.msg.kind) + " from=" + std::to_string(e.msg.from) +
                       " sent_at=" + std::to_string(e.msg.sent_at),
                   true);
            interpret(e.node, TraceTask::D, on_message(s.agent, e.msg, now_, cfg_));
            break;
        }
        case Event::Kind::ReviveComplete: {
            NodeSlot& s = slot(e.node);
            if (!s.revive_pending) {
                break;
            }
            s.revive_pending = false;
            if (!s.node_up) {
                break;  // the node died while the revival was under way
            }
            s.taskD_up = true;
            interpret(e.node, TraceTask::D, revive_taskD(s.agent, cfg_));
            schedule_alarm_check(e.node);
            break;
        }
        case Event::Kind::RebootComplete: {
            NodeSlot& s = slot(e.node);
            if (!s.reboot_pending || s.node_up) {
                break;
            }
            record(e.node, TraceTask::NET, "REBOOT");
            boot_node(e.node);
            // A rebooted assistant announces itself so that peers that wrote
            // it off re-enter it in their operational lists right away; the
            // rebooted manager's own MIA broadcast serves the same purpose.
            if (cfg_.ams_enabled && s.agent.role == Role::Assistant) {
                Message hello = Message{MessageKind::TAIA, e.node, TaskKind::D, s.agent.epoch, 0,
                                        s.agent.coordinator};
                for (NodeId to = 0; to < cfg_->n; ++to) {
                    if (to != e.node) {
                        send_message(e.node, hello, to);
                    }
                }
            }
            break;
        }
    }
}

void Simulation::run_until(Tick horizon) {
    while (!queue_.empty() && queue_.top().at <= horizon) {
        Event e = queue_.top();
        queue_.pop();
        now_ = e.at;
        process(e);
    }
    if (horizon > now_) {
        now_ = horizon;
    }
}

PredicateReport Simulation::predicate() const {
    PredicateReport report;
    std::optional<NodeId> believed;
    bool all_agree = true;
    for (NodeId k = 0; k < cfg_->n; ++k) {
        const NodeSlot& s = slot(k);
        if (!s.node_up || !s.taskD_up) {
            continue;
        }
        ++report.alive_agents;
        if (s.agent.role == Role::Coordinator) {
            ++report.self_coordinators;
        }
        if (!believed) {
            believed = s.agent.coordinator;
        } else if (*believed != s.agent.coordinator) {
            all_agree = false;
        }
        for (const auto& [subject, since] : s.agent.suspected) {
            if (now_ - since > cfg_->teif_recv + cfg_->max_latency) {
                report.stuck.push_back(PredicateReport::StuckSuspicion{k, subject, since});
            }
        }
    }
    if (report.alive_agents > 0 && all_agree && believed) {
        const NodeSlot& c = slot(*believed);
        if (c.node_up && c.taskD_up && c.agent.role == Role::Coordinator) {
            report.identity_agreement = true;
            report.agreed_coordinator = believed;
        }
    }
    return report;
}

Trace run(const ValidatedConfig& cfg, const std::vector<FaultSpec>& faults, Tick horizon,
          std::uint64_t seed, SimOptions opts) {
    Simulation sim(cfg, faults, seed, opts);
    sim.run_until(horizon);
    return sim.trace();
}

}  // namespace ams
