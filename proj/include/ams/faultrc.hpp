#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ams/core.hpp"

namespace ams {

enum class FaultKind {
    CrashComponent,  // crash task D (or task I) of one node
    CrashNode,       // crash the whole node; reboots only if configured
    Slowdown,        // multiply a node's outgoing latency for a while
    RebootNode,      // crash now, reboot after the configured delay
};

struct FaultSpec {
    FaultKind kind;
    NodeId target = 0;
    TaskKind component_task = TaskKind::D;  // CrashComponent only
    Tick at = 0;
    Tick duration = 0;         // Slowdown only
    std::uint64_t factor = 1;  // Slowdown only

    bool operator==(const FaultSpec&) const = default;
};

std::string to_string(const FaultSpec& f);

struct FaultScript {
    std::vector<FaultSpec> faults;  // source order; not necessarily sorted by `at`

    bool operator==(const FaultScript&) const = default;
};

struct ParseError : std::runtime_error {
    ParseError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
    int line;
};

// Accepts statements of the form
//
//   INJECT CRASH    ON COMPONENT  <n> AFTER <t> TICKS
//   INJECT CRASH    ON ICOMPONENT <n> AFTER <t> TICKS
//   INJECT CRASH    ON NODE       <n> AFTER <t> TICKS
//   INJECT REBOOT   ON NODE       <n> AFTER <t> TICKS
//   INJECT SLOWDOWN ON COMPONENT  <n> AFTER <t> TICKS FOR <d> TICKS FACTOR <f>
//
// COMPONENT n names task D of node n, ICOMPONENT its task I. Keywords are
// case-insensitive, statements may span lines, '#' starts a comment.
FaultScript parse_faultrc(const std::string& text);

// One statement per line, canonical keyword casing.
// parse(render(parse(x))) == parse(x).
std::string render_faultrc(const FaultScript& script);

}  // namespace ams
