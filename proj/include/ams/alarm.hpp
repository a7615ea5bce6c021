#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ams/core.hpp"

namespace ams {

using AlarmId = std::uint64_t;

enum class ClauseKind {
    MIA_SEND,
    MIA_RECV,
    TAIA_SEND,
    TAIA_RECV,
    IM_ALIVE_SET,
    IM_ALIVE_CLEAR,
    TEIF_RECV,
};

std::string to_string(ClauseKind k);

// A time clause: kind plus the node the clause is about (e.g. TAIA_RECV/2 =
// "a TAIA from node 2 is due").
struct Clause {
    ClauseKind kind;
    NodeId subject = 0;

    auto operator<=>(const Clause&) const = default;
};

std::string to_string(const Clause& c);

struct AlarmSpec {
    AlarmId id = 0;
    Clause clause;
    Tick deadline_in = 0;  // ticks from (re-)entry to expiry; > 0
    bool cyclic = false;   // renewed automatically at each expiry
    TaskKind target_task = TaskKind::D;

    bool operator==(const AlarmSpec&) const = default;
};

// The expiry message "clause c has elapsed".
struct FiredAlarm {
    AlarmId id = 0;
    Clause clause;
    Tick fired_at = 0;
    TaskKind target_task = TaskKind::D;

    bool operator==(const FiredAlarm&) const = default;
};

struct AlarmError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An ordered list of alarms keyed by absolute deadline. Expiries are
// delivered by advance() in (deadline, entry-order) order; entry order is
// refreshed whenever an alarm is (re-)entered, so ties between a renewal and
// an older registration resolve in favor of the older one. Cyclic alarms
// catch up: if advance() jumps several periods, one FiredAlarm per missed
// period is produced.
class AlarmManager {
  public:
    // Enters the alarm with absolute deadline now + spec.deadline_in.
    AlarmId register_alarm(const AlarmSpec& spec, Tick now);

    // Returns everything expired up to and including `now`. `now` must be
    // non-decreasing across calls.
    std::vector<FiredAlarm> advance(Tick now);

    // Fires just the earliest due alarm, so a caller can apply its effects
    // (e.g. cancellations) before the next one of the same tick is taken.
    std::optional<FiredAlarm> advance_one(Tick now);

    // Deletes and re-enters the alarm: fresh deadline now + deadline_in.
    // A suspended alarm becomes active again.
    void restart(AlarmId id, Tick now);

    // A suspended alarm never fires until resumed.
    void suspend(AlarmId id);

    // Re-entry with a fresh full deadline; no catch-up for missed periods.
    void resume(AlarmId id, Tick now);

    void cancel(AlarmId id);

    bool contains(AlarmId id) const { return entries_.contains(id); }
    std::size_t size() const { return entries_.size(); }

    // Earliest deadline among active alarms, if any. Used by event-driven
    // clients to schedule the next poll.
    std::optional<Tick> next_deadline() const;

  private:
    struct Entry {
        AlarmSpec spec;
        Tick deadline = 0;
        std::uint64_t seq = 0;
        bool suspended = false;
    };

    const Entry* find_due(Tick now) const;

    std::map<AlarmId, Entry> entries_;
    std::uint64_t next_seq_ = 0;
    Tick last_advance_ = 0;
};

}  // namespace ams
