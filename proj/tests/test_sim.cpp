#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <string>

#include "ams/sim.hpp"

using namespace ams;

namespace {

ValidatedConfig vcfg(NodeId n = 4, NodeId m = 0, Tick reboot_delay = 0) {
    Config c;
    c.n = n;
    c.m = m;
    c.node_reboot_delay = reboot_delay;
    return validate_config(c);
}

std::vector<const TraceEvent*> events_with(const Trace& t, const std::string& prefix,
                                           int node = -1) {
    std::vector<const TraceEvent*> out;
    for (const TraceEvent& e : t.events) {
        if (e.text.rfind(prefix, 0) == 0 && (node < 0 || e.node == NodeId(node))) {
            out.push_back(&e);
        }
    }
    return out;
}

std::string render_all(const Trace& t) {
    std::string out;
    for (const TraceEvent& e : t.events) {
        out += render_trace_line_text(e, t.tick_ns);
        out += '\n';
    }
    return out;
}

}  // namespace

TEST_CASE("fault-free run stays silent") {
    auto cfg = vcfg();
    Simulation sim(cfg, {}, 42);
    sim.run_until(5000000);
    const Trace& t = sim.trace();
    CHECK(events_with(t, "SUSPECT").empty());
    CHECK(events_with(t, "TEIF").empty());
    CHECK(events_with(t, "ELECTED").empty());
    CHECK(events_with(t, "DEDUCE").empty());
    CHECK(events_with(t, "INIT").size() == 4);
    auto report = sim.predicate();
    CHECK(report.holds());
    CHECK(report.agreed_coordinator == NodeId{0});
    for (NodeId k = 0; k < 4; ++k) {
        CHECK(sim.agent(k).operational == std::set<NodeId>{0, 1, 2, 3});
        CHECK_FALSE(sim.agent(k).im_alive_flag == sim.agent(k).crashed);  // crashed stays false
    }
}

TEST_CASE("same seed, same trace, byte for byte") {
    auto cfg = vcfg();
    std::vector<FaultSpec> faults{
        FaultSpec{FaultKind::CrashComponent, 1, TaskKind::D, 2000000, 0, 1},
        FaultSpec{FaultKind::CrashNode, 3, TaskKind::D, 2500000, 0, 1}};
    Trace a = run(cfg, faults, 6000000, 7);
    Trace b = run(cfg, faults, 6000000, 7);
    CHECK(render_all(a) == render_all(b));
    Trace c = run(cfg, faults, 6000000, 8);
    CHECK(render_all(a) != render_all(c));  // the seed actually matters
}

TEST_CASE("node crash: suspicion, node-crash deduction, election, KILLED") {
    auto cfg = vcfg();
    std::vector<FaultSpec> faults{FaultSpec{FaultKind::CrashNode, 0, TaskKind::D, 10000000, 0, 1}};
    Simulation sim(cfg, faults, 3);
    sim.run_until(12000000);
    const Trace& t = sim.trace();

    for (NodeId k : {NodeId{1}, NodeId{2}, NodeId{3}}) {
        auto suspects = events_with(t, "SUSPECT 0", int(k));
        REQUIRE(suspects.size() == 1);
        // shortly after the last heartbeat's receive deadline ran out
        CHECK(suspects[0]->at > 10100000);
        CHECK(suspects[0]->at < 10350000);
        auto deduces = events_with(t, "DEDUCE node_crashed 0", int(k));
        REQUIRE(deduces.size() == 1);
        CHECK(deduces[0]->at == suspects[0]->at + cfg->teif_recv);
    }
    CHECK(events_with(t, "ELECTED epoch=1", 1).size() == 1);
    CHECK(events_with(t, "ELECTED").size() == 1);
    CHECK(events_with(t, "ADOPT coordinator=1 epoch=1", 2).size() == 1);
    CHECK(events_with(t, "ADOPT coordinator=1 epoch=1", 3).size() == 1);
    CHECK(events_with(t, "KILLED", 0).size() == 1);
    CHECK(events_with(t, "RECOVERY_HOOK").size() == 3);

    auto report = sim.predicate();
    CHECK(report.holds());
    CHECK(report.agreed_coordinator == NodeId{1});
    CHECK(report.alive_agents == 3);
    for (NodeId k : {NodeId{1}, NodeId{2}, NodeId{3}}) {
        CHECK(sim.agent(k).operational == std::set<NodeId>{1, 2, 3});
        CHECK(sim.agent(k).epoch == 1);
    }
}

TEST_CASE("component crash: TEIF beats the suspicion deadline, revival reintegrates") {
    auto cfg = vcfg();
    std::vector<FaultSpec> faults{
        FaultSpec{FaultKind::CrashComponent, 1, TaskKind::D, 5000000, 0, 1}};
    Simulation sim(cfg, faults, 5);
    sim.run_until(7000000);
    const Trace& t = sim.trace();

    auto suspects = events_with(t, "SUSPECT 1", 0);
    REQUIRE(suspects.size() == 1);
    // the clear period (150 ms) elapses again before the 200 ms revival is
    // done, so task I may self-report more than once; remotes ignore repeats
    auto teifs = events_with(t, "TEIF broadcast", 1);
    REQUIRE(!teifs.empty());
    CHECK(teifs.size() <= 2);
    CHECK(teifs[0]->task == TraceTask::I);
    CHECK(suspects[0]->at < teifs[0]->at);  // suspicion first, self-report second
    auto deduces = events_with(t, "DEDUCE agent_crashed_node_alive 1", 0);
    REQUIRE(deduces.size() == 1);
    CHECK(deduces[0]->at < suspects[0]->at + cfg->teif_recv);  // before the deadline
    CHECK(events_with(t, "DEDUCE node_crashed").empty());
    CHECK(events_with(t, "ELECTED").empty());
    CHECK(events_with(t, "KILLED").empty());

    auto revived = events_with(t, "REVIVED", 1);
    REQUIRE(revived.size() == 1);
    CHECK(events_with(t, "REINTEGRATE 1", 0).size() == 1);
    CHECK(events_with(t, "REINTEGRATE 1", 2).size() == 1);
    CHECK(events_with(t, "REINTEGRATE 1", 3).size() == 1);

    // the manager watches node 1 again
    CHECK(sim.agent(0).alarm_ids.contains(Clause{ClauseKind::MIA_SEND, 1}));
    CHECK(sim.agent(0).alarm_ids.contains(Clause{ClauseKind::TAIA_RECV, 1}));
    for (NodeId k = 0; k < 4; ++k) {
        CHECK(sim.agent_alive(k));
        CHECK(sim.agent(k).operational == std::set<NodeId>{0, 1, 2, 3});
    }
    CHECK(sim.predicate().holds());
    CHECK(sim.predicate().agreed_coordinator == NodeId{0});
}

TEST_CASE("component crash with revival disabled keeps broadcasting TEIF") {
    Config c;
    c.n = 4;
    c.revive_delay = 0;
    auto cfg = validate_config(c);
    std::vector<FaultSpec> faults{
        FaultSpec{FaultKind::CrashComponent, 1, TaskKind::D, 1000000, 0, 1}};
    Simulation sim(cfg, faults, 5);
    sim.run_until(3000000);
    const Trace& t = sim.trace();
    CHECK(events_with(t, "TEIF broadcast", 1).size() > 3);  // one per clear period
    CHECK(events_with(t, "REVIVED").empty());
    // remote agents deduce the agent crash exactly once
    CHECK(events_with(t, "DEDUCE agent_crashed_node_alive 1", 0).size() == 1);
    CHECK(events_with(t, "DEDUCE agent_crashed_node_alive 1", 2).size() == 1);
    CHECK(events_with(t, "DEDUCE agent_crashed_node_alive 1", 3).size() == 1);
    auto report = sim.predicate();
    CHECK(report.holds());
    CHECK(report.alive_agents == 3);
}

TEST_CASE("slowdown: suspected, then readmitted as merely slow") {
    auto cfg = vcfg();
    std::vector<FaultSpec> faults{
        FaultSpec{FaultKind::Slowdown, 2, TaskKind::D, 2000000, 1500000, 40}};
    Simulation sim(cfg, faults, 1);
    sim.run_until(6000000);
    const Trace& t = sim.trace();
    auto suspects = events_with(t, "SUSPECT 2", 0);
    REQUIRE(!suspects.empty());
    auto slowed = events_with(t, "DEDUCE agent_slowed_down 2", 0);
    REQUIRE(!slowed.empty());
    CHECK(suspects[0]->at < slowed[0]->at);
    CHECK(events_with(t, "ELECTED").empty());
    CHECK(events_with(t, "DEDUCE node_crashed").empty());
    CHECK(sim.agent(0).operational == std::set<NodeId>{0, 1, 2, 3});
    CHECK(sim.predicate().holds());
}

TEST_CASE("reboot: the stale manager comes back and demotes itself") {
    auto cfg = vcfg(4, 0, 2500000);
    std::vector<FaultSpec> faults{FaultSpec{FaultKind::CrashNode, 0, TaskKind::D, 1000000, 0, 1}};
    Simulation sim(cfg, faults, 13);
    sim.run_until(6000000);
    const Trace& t = sim.trace();

    CHECK(events_with(t, "ELECTED epoch=1", 1).size() == 1);
    CHECK(events_with(t, "KILLED").empty());  // a reboot is pending, the node is not lost
    auto reboots = events_with(t, "REBOOT", 0);
    REQUIRE(reboots.size() == 1);
    CHECK(reboots[0]->at == 3500000);
    auto demoted = events_with(t, "DEMOTED epoch=1", 0);
    REQUIRE(demoted.size() == 1);
    CHECK(demoted[0]->at > reboots[0]->at);
    CHECK(events_with(t, "REINTEGRATE 0", 1).size() == 1);

    CHECK(sim.agent(0).role == Role::Assistant);
    CHECK(sim.agent(0).coordinator == 1);
    CHECK(sim.agent(0).epoch == 1);
    CHECK(sim.agent(1).role == Role::Coordinator);
    auto report = sim.predicate();
    CHECK(report.holds());
    CHECK(report.agreed_coordinator == NodeId{1});
    CHECK(report.alive_agents == 4);
    for (NodeId k = 0; k < 4; ++k) {
        CHECK(sim.agent(k).operational == std::set<NodeId>{0, 1, 2, 3});
    }
}

TEST_CASE("explicit reboot fault works without a configured reboot delay") {
    auto cfg = vcfg();  // node_reboot_delay = 0
    std::vector<FaultSpec> faults{FaultSpec{FaultKind::RebootNode, 2, TaskKind::D, 1000000, 0, 1}};
    Simulation sim(cfg, faults, 17);
    sim.run_until(3000000);
    // instant reboot: nobody even notices the blip
    CHECK(events_with(sim.trace(), "REBOOT", 2).size() == 1);
    CHECK(sim.predicate().holds());
    CHECK(sim.predicate().alive_agents == 4);
}

TEST_CASE("per-channel FIFO and bounded delay, observed through the verbose trace") {
    auto cfg = vcfg();
    SimOptions opts;
    opts.verbose_trace = true;
    Simulation sim(cfg, {}, 99, opts);
    sim.run_until(2000000);
    std::map<std::pair<std::string, NodeId>, Tick> last_sent;
    int recv_count = 0;
    for (const TraceEvent& e : sim.trace().events) {
        if (e.text.rfind("RECV ", 0) != 0) {
            continue;
        }
        ++recv_count;
        auto fpos = e.text.find("from=");
        auto spos = e.text.find("sent_at=");
        REQUIRE(fpos != std::string::npos);
        REQUIRE(spos != std::string::npos);
        std::string from = e.text.substr(fpos + 5, e.text.find(' ', fpos + 5) - fpos - 5);
        Tick sent = std::stoull(e.text.substr(spos + 8));
        auto key = std::make_pair(from, e.node);
        auto it = last_sent.find(key);
        if (it != last_sent.end()) {
            CHECK(sent >= it->second);  // FIFO per channel
        }
        last_sent[key] = sent;
        CHECK(e.at > sent);
        CHECK(e.at - sent <= cfg->max_latency);
    }
    CHECK(recv_count > 100);
}

TEST_CASE("verbose mode leaves the regular event ids untouched") {
    auto cfg = vcfg();
    std::vector<FaultSpec> faults{FaultSpec{FaultKind::CrashNode, 0, TaskKind::D, 1000000, 0, 1}};
    SimOptions verbose;
    verbose.verbose_trace = true;
    Trace plain = run(cfg, faults, 3000000, 21);
    Trace chatty = run(cfg, faults, 3000000, 21, verbose);
    std::string plain_lines = render_all(plain);
    std::string filtered;
    for (const TraceEvent& e : chatty.events) {
        if (!e.verbose) {
            filtered += render_trace_line_text(e, chatty.tick_ns);
            filtered += '\n';
        }
    }
    CHECK(filtered == plain_lines);
}

TEST_CASE("trace ids are consecutive per node and time never goes backwards") {
    auto cfg = vcfg(4, 0, 2500000);
    std::vector<FaultSpec> faults{
        FaultSpec{FaultKind::CrashComponent, 1, TaskKind::D, 1000000, 0, 1},
        FaultSpec{FaultKind::CrashNode, 0, TaskKind::D, 1500000, 0, 1}};
    Trace t = run(cfg, faults, 8000000, 23);
    std::map<NodeId, std::uint64_t> next_id;
    Tick prev = 0;
    for (const TraceEvent& e : t.events) {
        CHECK(e.at >= prev);
        prev = e.at;
        CHECK(e.event_id == next_id[e.node]);
        ++next_id[e.node];
    }
}

TEST_CASE("single node: an inert coordinator satisfies the predicate") {
    auto cfg = vcfg(1, 0);
    Simulation sim(cfg, {}, 1);
    sim.run_until(10000000);
    CHECK(sim.trace().events.size() == 1);  // just the INIT line
    auto report = sim.predicate();
    CHECK(report.holds());
    CHECK(report.alive_agents == 1);
}

TEST_CASE("crashing every node leaves no operational agents") {
    auto cfg = vcfg();
    std::vector<FaultSpec> faults;
    for (NodeId k = 0; k < 4; ++k) {
        faults.push_back(FaultSpec{FaultKind::CrashNode, k, TaskKind::D, 1000000 + 100000 * k, 0, 1});
    }
    Simulation sim(cfg, faults, 9);
    sim.run_until(3000000);
    auto report = sim.predicate();
    CHECK_FALSE(report.holds());
    CHECK(report.alive_agents == 0);
    CHECK(report.summary() == "no operational agents");
}

TEST_CASE("faults must target configured nodes") {
    auto cfg = vcfg();
    std::vector<FaultSpec> faults{FaultSpec{FaultKind::CrashNode, 9, TaskKind::D, 1000, 0, 1}};
    CHECK_THROWS_AS(Simulation(cfg, faults, 1), SimError);
}

TEST_CASE("predicate agreement matches the pure election function") {
    auto cfg = vcfg();
    std::vector<FaultSpec> faults{FaultSpec{FaultKind::CrashNode, 0, TaskKind::D, 1000000, 0, 1}};
    Simulation sim(cfg, faults, 31);
    sim.run_until(4000000);
    auto report = sim.predicate();
    REQUIRE(report.holds());
    CHECK(*report.agreed_coordinator == elect_successor({1, 2, 3}, 0, 4));
}
