#include "ams/alarm.hpp"

namespace ams {

std::string to_string(ClauseKind k) {
    switch (k) {
        case ClauseKind::MIA_SEND: return "MIA_SEND";
        case ClauseKind::MIA_RECV: return "MIA_RECV";
        case ClauseKind::TAIA_SEND: return "TAIA_SEND";
        case ClauseKind::TAIA_RECV: return "TAIA_RECV";
        case ClauseKind::IM_ALIVE_SET: return "IM_ALIVE_SET";
        case ClauseKind::IM_ALIVE_CLEAR: return "IM_ALIVE_CLEAR";
        case ClauseKind::TEIF_RECV: return "TEIF_RECV";
    }
    return "?";
}

std::string to_string(const Clause& c) {
    return to_string(c.kind) + "/" + std::to_string(c.subject);
}

AlarmId AlarmManager::register_alarm(const AlarmSpec& spec, Tick now) {
    if (spec.deadline_in == 0) {
        throw AlarmError("alarm " + std::to_string(spec.id) + ": deadline_in must be > 0");
    }
    if (entries_.contains(spec.id)) {
        throw AlarmError("alarm id " + std::to_string(spec.id) + " already live");
    }
    entries_[spec.id] = Entry{spec, now + spec.deadline_in, next_seq_++, false};
    return spec.id;
}

const AlarmManager::Entry* AlarmManager::find_due(Tick now) const {
    const Entry* best = nullptr;
    for (const auto& [id, e] : entries_) {
        if (e.suspended || e.deadline > now) {
            continue;
        }
        if (!best || e.deadline < best->deadline ||
            (e.deadline == best->deadline && e.seq < best->seq)) {
            best = &e;
        }
    }
    return best;
}

std::vector<FiredAlarm> AlarmManager::advance(Tick now) {
    std::vector<FiredAlarm> fired;
    while (auto f = advance_one(now)) {
        fired.push_back(*f);
    }
    return fired;
}

std::optional<FiredAlarm> AlarmManager::advance_one(Tick now) {
    if (now < last_advance_) {
        throw AlarmError("advance time went backwards");
    }
    last_advance_ = now;
    const Entry* due = find_due(now);
    if (!due) {
        return std::nullopt;
    }
    const AlarmSpec spec = due->spec;
    const Tick at = due->deadline;
    auto it = entries_.find(spec.id);
    if (spec.cyclic) {
        it->second.deadline = at + spec.deadline_in;
        it->second.seq = next_seq_++;
    } else {
        entries_.erase(it);
    }
    return FiredAlarm{spec.id, spec.clause, at, spec.target_task};
}

void AlarmManager::restart(AlarmId id, Tick now) {
    auto it = entries_.find(id);
    if (it == entries_.end()) {
        throw AlarmError("restart: unknown alarm id " + std::to_string(id));
    }
    it->second.deadline = now + it->second.spec.deadline_in;
    it->second.seq = next_seq_++;
    it->second.suspended = false;
}

void AlarmManager::suspend(AlarmId id) {
    auto it = entries_.find(id);
    if (it == entries_.end()) {
        throw AlarmError("suspend: unknown alarm id " + std::to_string(id));
    }
    if (it->second.suspended) {
        throw AlarmError("suspend: alarm " + std::to_string(id) + " already suspended");
    }
    it->second.suspended = true;
}

void AlarmManager::resume(AlarmId id, Tick now) {
    auto it = entries_.find(id);
    if (it == entries_.end()) {
        throw AlarmError("resume: unknown alarm id " + std::to_string(id));
    }
    if (!it->second.suspended) {
        throw AlarmError("resume: alarm " + std::to_string(id) + " is active");
    }
    it->second.suspended = false;
    it->second.deadline = now + it->second.spec.deadline_in;
    it->second.seq = next_seq_++;
}

void AlarmManager::cancel(AlarmId id) {
    if (entries_.erase(id) == 0) {
        throw AlarmError("cancel: unknown alarm id " + std::to_string(id));
    }
}

std::optional<Tick> AlarmManager::next_deadline() const {
    std::optional<Tick> best;
    for (const auto& [id, e] : entries_) {
        if (!e.suspended && (!best || e.deadline < *best)) {
            best = e.deadline;
        }
    }
    return best;
}

}  // namespace ams
