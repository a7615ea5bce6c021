#include "ams/agent.hpp"

#include <algorithm>

namespace ams {

namespace {

Message make_message(const AgentState& s, MessageKind kind, TaskKind from_task = TaskKind::D) {
    Message m;
    m.kind = kind;
    m.from = s.me;
    m.from_task = from_task;
    m.epoch = s.epoch;
    m.coordinator = s.coordinator;
    return m;
}

void register_clause(AgentState& s, Actions& out, Clause clause, Tick deadline_in, bool cyclic,
                     TaskKind target) {
    AlarmId id = s.next_alarm_id++;
    s.alarm_ids[clause] = id;
    out.push_back(act::RegisterAlarm{AlarmSpec{id, clause, deadline_in, cyclic, target}});
}

// No-op when the clause is not held; removals and role swaps make that normal.
void cancel_clause(AgentState& s, Actions& out, Clause clause) {
    auto it = s.alarm_ids.find(clause);
    if (it == s.alarm_ids.end()) {
        return;
    }
    out.push_back(act::CancelAlarm{clause, it->second});
    s.alarm_ids.erase(it);
}

void restart_clause(AgentState& s, Actions& out, Clause clause) {
    auto it = s.alarm_ids.find(clause);
    if (it == s.alarm_ids.end()) {
        return;
    }
    out.push_back(act::RestartAlarm{clause, it->second});
}

// The clause through which this agent watches node j, if any: the coordinator
// holds TAIA_RECV/j for each assistant, an assistant holds MIA_RECV/m only.
Clause receive_clause_for(const AgentState& s, NodeId j) {
    if (s.role == Role::Coordinator) {
        return Clause{ClauseKind::TAIA_RECV, j};
    }
    return Clause{ClauseKind::MIA_RECV, j};
}

void register_assistant_clauses(AgentState& s, Actions& out, const ValidatedConfig& cfg) {
    register_clause(s, out, Clause{ClauseKind::TAIA_SEND, s.coordinator}, cfg->taia_send, true,
                    TaskKind::D);
    register_clause(s, out, Clause{ClauseKind::MIA_RECV, s.coordinator}, cfg->mia_recv, true,
                    TaskKind::D);
}

void cancel_kinds(AgentState& s, Actions& out, std::initializer_list<ClauseKind> kinds) {
    std::vector<Clause> doomed;
    for (const auto& [clause, id] : s.alarm_ids) {
        if (std::find(kinds.begin(), kinds.end(), clause.kind) != kinds.end()) {
            doomed.push_back(clause);
        }
    }
    for (const Clause& c : doomed) {
        cancel_clause(s, out, c);
    }
}

void note(Actions& out, std::string text) {
    out.push_back(act::TraceNote{std::move(text)});
}

void register_coordinator_clauses(AgentState& s, Actions& out, const ValidatedConfig& cfg) {
    for (NodeId j : s.operational) {
        if (j != s.me) {
            register_clause(s, out, Clause{ClauseKind::MIA_SEND, j}, cfg->mia_send, true,
                            TaskKind::D);
        }
    }
    for (NodeId j : s.operational) {
        if (j != s.me) {
            register_clause(s, out, Clause{ClauseKind::TAIA_RECV, j}, cfg->taia_recv, true,
                            TaskKind::D);
        }
    }
}

Actions do_become_coordinator(AgentState& s, const ValidatedConfig& cfg) {
    Actions out;
    cancel_kinds(s, out, {ClauseKind::TAIA_SEND, ClauseKind::MIA_RECV});
    s.role = Role::Coordinator;
    s.coordinator = s.me;
    s.epoch += 1;
    register_coordinator_clauses(s, out, cfg);
    note(out, "ELECTED epoch=" + std::to_string(s.epoch));
    return out;
}

// The believed coordinator is gone from the operational set: pick and adopt
// the successor, possibly this agent itself.
void handle_coordinator_loss(AgentState& s, Actions& out, NodeId failed,
                             const ValidatedConfig& cfg) {
    NodeId successor;
    if (cfg->election == ElectionPolicy::Naive) {
        successor = (failed + 1) % cfg->n;
    } else {
        successor = elect_successor(s.operational, failed, cfg->n);
    }
    if (successor == s.me) {
        Actions sub = do_become_coordinator(s, cfg);
        out.insert(out.end(), sub.begin(), sub.end());
        return;
    }
    s.epoch += 1;
    cancel_kinds(s, out, {ClauseKind::TAIA_SEND, ClauseKind::MIA_RECV});
    s.coordinator = successor;
    register_assistant_clauses(s, out, cfg);
    // Tell the successor it has been elected. Normally it reaches the same
    // conclusion on its own clock; if it restarted in between and lost that
    // context, this is what promotes it.
    out.push_back(act::Send{successor, make_message(s, MessageKind::HELLO_BACK)});
    note(out, "ADOPT coordinator=" + std::to_string(successor) + " epoch=" +
                  std::to_string(s.epoch));
}

// Accept (claimed_epoch, claimed_coordinator) as the current regime. Covers
// demotion of a stale coordinator, coordinator changes learned via HELLO_BACK
// or a newer MIA, and the epoch re-sync of a coordinator nobody saw reboot.
void adopt_regime(AgentState& s, Actions& out, NodeId claimed_c, Epoch claimed_e,
                  const ValidatedConfig& cfg) {
    if (claimed_c == s.me) {
        s.epoch = claimed_e;
        s.coordinator = s.me;
        if (s.role != Role::Coordinator) {
            cancel_kinds(s, out, {ClauseKind::TAIA_SEND, ClauseKind::MIA_RECV});
            s.role = Role::Coordinator;
            register_coordinator_clauses(s, out, cfg);
        }
        note(out, "RESUMED epoch=" + std::to_string(claimed_e));
        return;
    }
    if (s.role == Role::Coordinator) {
        // Demotion dissolves the whole monitoring regime; pending suspicions
        // are abandoned without a deduction.
        cancel_kinds(s, out,
                     {ClauseKind::MIA_SEND, ClauseKind::TAIA_RECV, ClauseKind::TEIF_RECV});
        for (const auto& [k, since] : s.suspected) {
            note(out, "SUSPICION_ABANDONED " + std::to_string(k));
        }
        s.suspected.clear();
        s.role = Role::Assistant;
        s.coordinator = claimed_c;
        s.epoch = claimed_e;
        register_assistant_clauses(s, out, cfg);
        note(out, "DEMOTED epoch=" + std::to_string(claimed_e));
        return;
    }
    if (claimed_c != s.coordinator) {
        // A pending suspicion on the old coordinator keeps running to its
        // natural resolution; only the send/receive clauses move over.
        cancel_kinds(s, out, {ClauseKind::TAIA_SEND, ClauseKind::MIA_RECV});
        s.coordinator = claimed_c;
        s.epoch = claimed_e;
        register_assistant_clauses(s, out, cfg);
        note(out, "ADOPT coordinator=" + std::to_string(claimed_c) + " epoch=" +
                      std::to_string(claimed_e));
        return;
    }
    s.epoch = claimed_e;
}

// Newer election generation wins; between equal generations the lower node id
// does. Used to order coordinator claims deterministically.
bool beats(Epoch e1, NodeId c1, Epoch e2, NodeId c2) {
    return e1 > e2 || (e1 == e2 && c1 < c2);
}

}  // namespace

NodeId elect_successor(const std::set<NodeId>& operational, NodeId failed_coordinator, NodeId n) {
    for (NodeId off = 1; off <= n; ++off) {
        NodeId cand = (failed_coordinator + off) % n;
        if (operational.contains(cand)) {
            return cand;
        }
    }
    throw AgentError("elect_successor: no operational candidate");
}

std::pair<AgentState, Actions> init_agent(NodeId me, const ValidatedConfig& cfg) {
    if (me >= cfg->n) {
        throw AgentError("init_agent: node id " + std::to_string(me) + " out of range");
    }
    AgentState s;
    s.me = me;
    s.coordinator = cfg->m;
    s.role = (me == cfg->m) ? Role::Coordinator : Role::Assistant;
    for (NodeId j = 0; j < cfg->n; ++j) {
        s.operational.insert(j);
    }
    Actions out;
    if (!cfg.ams_enabled) {
        return {std::move(s), std::move(out)};  // inert coordinator
    }
    if (s.role == Role::Coordinator) {
        register_coordinator_clauses(s, out, cfg);
    } else {
        register_assistant_clauses(s, out, cfg);
    }
    register_clause(s, out, Clause{ClauseKind::IM_ALIVE_SET, me}, cfg->im_alive_set, true,
                    TaskKind::D);
    register_clause(s, out, Clause{ClauseKind::IM_ALIVE_CLEAR, me}, cfg->im_alive_clear, true,
                    TaskKind::I);
    return {std::move(s), std::move(out)};
}

Actions on_alarm(AgentState& s, const FiredAlarm& fired, const ValidatedConfig& cfg) {
    if (s.crashed) {
        throw AgentError("on_alarm: task D is crashed");
    }
    if (fired.target_task != TaskKind::D) {
        throw AgentError("on_alarm: alarm targets task I");
    }
    auto held = s.alarm_ids.find(fired.clause);
    if (held == s.alarm_ids.end() || held->second != fired.id) {
        throw AgentError("on_alarm: fired clause " + to_string(fired.clause) +
                         " unknown to this agent");
    }
    Actions out;
    const NodeId subject = fired.clause.subject;
    switch (fired.clause.kind) {
        case ClauseKind::MIA_SEND:
            out.push_back(act::Send{subject, make_message(s, MessageKind::MIA)});
            break;
        case ClauseKind::TAIA_SEND:
            out.push_back(act::Send{s.coordinator, make_message(s, MessageKind::TAIA)});
            break;
        case ClauseKind::IM_ALIVE_SET:
            s.im_alive_flag = true;
            break;
        case ClauseKind::TAIA_RECV:
        case ClauseKind::MIA_RECV:
            // Silence throughout the period just elapsed: open a suspicion.
            // The cyclic alarm keeps firing while the silence lasts; an
            // already-open suspicion is left alone.
            if (!s.suspects(subject)) {
                s.suspected[subject] = fired.fired_at;
                register_clause(s, out, Clause{ClauseKind::TEIF_RECV, subject}, cfg->teif_recv,
                                false, TaskKind::D);
                note(out, "SUSPECT " + std::to_string(subject));
            }
            break;
        case ClauseKind::TEIF_RECV: {
            // Total silence for the whole suspicion period: node crash.
            s.alarm_ids.erase(held);  // one-shot, no longer live
            s.suspected.erase(subject);
            s.operational.erase(subject);
            cancel_clause(s, out, Clause{ClauseKind::MIA_SEND, subject});
            cancel_clause(s, out, Clause{ClauseKind::TAIA_RECV, subject});
            cancel_clause(s, out, Clause{ClauseKind::MIA_RECV, subject});
            out.push_back(act::Deduce{Deduction{DeductionKind::NodeCrashed, subject}});
            out.push_back(act::RecoveryHook{"recover node " + std::to_string(subject)});
            if (subject == s.coordinator) {
                handle_coordinator_loss(s, out, subject, cfg);
            }
            break;
        }
        case ClauseKind::IM_ALIVE_CLEAR:
            throw AgentError("on_alarm: IM_ALIVE_CLEAR belongs to task I");
    }
    return out;
}

Actions on_message(AgentState& s, const Message& msg, Tick now, const ValidatedConfig& cfg) {
    (void)now;
    if (s.crashed) {
        throw AgentError("on_message: task D is crashed");
    }
    Actions out;
    const NodeId j = msg.from;
    if (j == s.me) {
        return out;
    }

    if (msg.kind == MessageKind::TEIF) {
        // Self-report from task I[j]: task D[j] is dead but node j runs.
        // Authoritative whether or not a suspicion is pending; duplicates
        // for an already-removed agent are ignored.
        if (!s.operational.contains(j)) {
            return out;
        }
        s.suspected.erase(j);
        cancel_clause(s, out, Clause{ClauseKind::TEIF_RECV, j});
        cancel_clause(s, out, Clause{ClauseKind::MIA_SEND, j});
        cancel_clause(s, out, Clause{ClauseKind::TAIA_RECV, j});
        cancel_clause(s, out, Clause{ClauseKind::MIA_RECV, j});
        s.operational.erase(j);
        out.push_back(act::Deduce{Deduction{DeductionKind::AgentCrashedNodeAlive, j}});
        if (j == s.coordinator) {
            handle_coordinator_loss(s, out, j, cfg);
        }
        return out;
    }

    // Every task-D message is a sign of life.
    bool replied_hello = false;
    if (!s.operational.contains(j)) {
        // Reintegration: the agent is back in operation.
        s.operational.insert(j);
        note(out, "REINTEGRATE " + std::to_string(j));
        if (s.role == Role::Coordinator) {
            register_clause(s, out, Clause{ClauseKind::MIA_SEND, j}, cfg->mia_send, true,
                            TaskKind::D);
            register_clause(s, out, Clause{ClauseKind::TAIA_RECV, j}, cfg->taia_recv, true,
                            TaskKind::D);
        }
        out.push_back(act::Send{j, make_message(s, MessageKind::HELLO_BACK)});
        replied_hello = true;
    } else if (s.suspects(j)) {
        // Late sign of life inside the suspicion period: the agent was only
        // slowed down.
        s.suspected.erase(j);
        cancel_clause(s, out, Clause{ClauseKind::TEIF_RECV, j});
        out.push_back(act::Deduce{Deduction{DeductionKind::AgentSlowedDown, j}});
        restart_clause(s, out, receive_clause_for(s, j));
    } else {
        restart_clause(s, out, receive_clause_for(s, j));
    }

    if (msg.kind == MessageKind::MIA || msg.kind == MessageKind::HELLO_BACK) {
        const NodeId claimed_c = (msg.kind == MessageKind::MIA) ? j : msg.coordinator;
        if (beats(msg.epoch, claimed_c, s.epoch, s.coordinator)) {
            adopt_regime(s, out, claimed_c, msg.epoch, cfg);
        } else if (msg.kind == MessageKind::MIA && msg.epoch < s.epoch && !replied_hello &&
                   (s.role == Role::Coordinator || j == s.coordinator)) {
            // Stale manager heartbeat: answer so the sender demotes itself
            // (or re-syncs, if the stale sender is the manager we follow).
            out.push_back(act::Send{j, make_message(s, MessageKind::HELLO_BACK)});
        }
    }
    return out;
}

Actions taskI_step(AgentState& s, const FiredAlarm& fired, const ValidatedConfig& cfg) {
    (void)cfg;
    if (fired.clause.kind != ClauseKind::IM_ALIVE_CLEAR || fired.clause.subject != s.me ||
        fired.target_task != TaskKind::I) {
        throw AgentError("taskI_step: expected this node's IM_ALIVE_CLEAR");
    }
    Actions out;
    if (!s.im_alive_flag) {
        // Task D never set the flag during the period just elapsed.
        out.push_back(act::Broadcast{make_message(s, MessageKind::TEIF, TaskKind::I)});
        out.push_back(act::ReviveLocalD{});
    } else {
        s.im_alive_flag = false;
    }
    return out;
}

Actions become_coordinator(AgentState& s, const ValidatedConfig& cfg) {
    return do_become_coordinator(s, cfg);
}

Actions revive_taskD(AgentState& s, const ValidatedConfig& cfg) {
    Actions out;
    // Drop whatever task-D clauses survived the crash; the task-I clear alarm
    // stays untouched.
    std::vector<Clause> stale;
    for (const auto& [clause, id] : s.alarm_ids) {
        if (clause.kind != ClauseKind::IM_ALIVE_CLEAR) {
            stale.push_back(clause);
        }
    }
    for (const Clause& c : stale) {
        cancel_clause(s, out, c);
    }
    s.crashed = false;
    s.im_alive_flag = false;
    s.epoch = 0;
    s.suspected.clear();
    s.operational.clear();
    for (NodeId j = 0; j < cfg->n; ++j) {
        s.operational.insert(j);
    }
    if (!cfg.ams_enabled) {
        s.role = Role::Coordinator;
        s.coordinator = s.me;
        return out;
    }
    // A restarted agent always comes back as an assistant. Its best guess for
    // the manager is the initial one, or the deterministic successor when the
    // restarted agent is the initial manager itself; the HELLO_BACK answering
    // the broadcast below corrects a wrong guess.
    s.role = Role::Assistant;
    if (s.me == cfg->m) {
        std::set<NodeId> others = s.operational;
        others.erase(s.me);
        s.coordinator = elect_successor(others, cfg->m, cfg->n);
    } else {
        s.coordinator = cfg->m;
    }
    register_assistant_clauses(s, out, cfg);
    register_clause(s, out, Clause{ClauseKind::IM_ALIVE_SET, s.me}, cfg->im_alive_set, true,
                    TaskKind::D);
    out.push_back(act::Broadcast{make_message(s, MessageKind::TAIA)});
    note(out, "REVIVED role=assistant coordinator=" + std::to_string(s.coordinator));
    return out;
}

Actions notify_event(AgentState& s, Tick now, const ValidatedConfig& cfg) {
    (void)now;
    (void)cfg;
    Actions out;
    if (s.crashed) {
        throw AgentError("notify_event: task D is crashed");
    }
    if (s.role == Role::Coordinator) {
        return out;  // the manager's own database already has the event
    }
    out.push_back(act::Send{s.coordinator, make_message(s, MessageKind::EVENT_NOTIFY)});
    restart_clause(s, out, Clause{ClauseKind::TAIA_SEND, s.coordinator});
    return out;
}

}  // namespace ams
