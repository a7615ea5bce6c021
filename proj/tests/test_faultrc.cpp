#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ams/faultrc.hpp"

using namespace ams;

TEST_CASE("the documented two-statement script") {
    FaultScript s = parse_faultrc(
        "INJECT CRASH ON COMPONENT 1\n"
        "      AFTER 5000000 TICKS\n"
        "INJECT CRASH ON NODE 0\n"
        "      AFTER 10000000 TICKS");
    REQUIRE(s.faults.size() == 2);
    CHECK(s.faults[0] == FaultSpec{FaultKind::CrashComponent, 1, TaskKind::D, 5000000, 0, 1});
    CHECK(s.faults[1] == FaultSpec{FaultKind::CrashNode, 0, TaskKind::D, 10000000, 0, 1});
}

TEST_CASE("a trailing sentence period after TICKS is tolerated") {
    FaultScript s = parse_faultrc("INJECT CRASH ON NODE 0\n AFTER 10000000 TICKS.");
    REQUIRE(s.faults.size() == 1);
    CHECK(s.faults[0].at == 10000000);
}

TEST_CASE("empty input, comments and case-insensitive keywords") {
    CHECK(parse_faultrc("").faults.empty());
    CHECK(parse_faultrc("# nothing here\n\n   \n").faults.empty());
    FaultScript s = parse_faultrc("inject crash on node 2 after 1000 ticks  # boom");
    REQUIRE(s.faults.size() == 1);
    CHECK(s.faults[0].kind == FaultKind::CrashNode);
    CHECK(s.faults[0].target == 2);
}

TEST_CASE("slowdown with duration and factor") {
    FaultScript s = parse_faultrc(
        "INJECT SLOWDOWN ON COMPONENT 2 AFTER 1000000 TICKS FOR 2000000 TICKS FACTOR 10");
    REQUIRE(s.faults.size() == 1);
    CHECK(s.faults[0] == FaultSpec{FaultKind::Slowdown, 2, TaskKind::D, 1000000, 2000000, 10});
}

TEST_CASE("ICOMPONENT targets task I; REBOOT targets nodes") {
    FaultScript s = parse_faultrc(
        "INJECT CRASH ON ICOMPONENT 3 AFTER 100 TICKS\n"
        "INJECT REBOOT ON NODE 1 AFTER 200 TICKS");
    REQUIRE(s.faults.size() == 2);
    CHECK(s.faults[0].kind == FaultKind::CrashComponent);
    CHECK(s.faults[0].component_task == TaskKind::I);
    CHECK(s.faults[1].kind == FaultKind::RebootNode);
}

TEST_CASE("syntax errors carry line numbers") {
    try {
        parse_faultrc("INJECT CRASH ON COMPONENT 1 AFTER 100 TICKS\nINJECT FLOOD ON NODE 2");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
        CHECK(std::string(e.what()).find("FLOOD") != std::string::npos);
    }
}

TEST_CASE("rejected statements") {
    CHECK_THROWS_WITH_AS(parse_faultrc("INJECT SLOWDOWN ON NODE 1 AFTER 100 TICKS FOR 10 TICKS FACTOR 2"),
                         doctest::Contains("SLOWDOWN supports only ON COMPONENT"), ParseError);
    CHECK_THROWS_WITH_AS(parse_faultrc("INJECT CRASH ON COMPONENT 1"),
                         doctest::Contains("AFTER"), ParseError);
    CHECK_THROWS_WITH_AS(parse_faultrc("INJECT CRASH ON COMPONENT 1 AFTER 0 TICKS"),
                         doctest::Contains("> 0"), ParseError);
    CHECK_THROWS_WITH_AS(parse_faultrc("INJECT REBOOT ON COMPONENT 1 AFTER 10 TICKS"),
                         doctest::Contains("REBOOT supports only ON NODE"), ParseError);
    CHECK_THROWS_WITH_AS(
        parse_faultrc("INJECT SLOWDOWN ON COMPONENT 1 AFTER 10 TICKS"),
        doctest::Contains("SLOWDOWN requires FOR"), ParseError);
    CHECK_THROWS_WITH_AS(
        parse_faultrc("INJECT SLOWDOWN ON COMPONENT 1 AFTER 10 TICKS FOR 5 TICKS FACTOR 0"),
        doctest::Contains("factor"), ParseError);
    CHECK_THROWS_WITH_AS(parse_faultrc("INJECT CRASH ON COMPONENT x AFTER 10 TICKS"),
                         doctest::Contains("target id"), ParseError);
}

TEST_CASE("render normalizes to one statement per line; parse is idempotent over it") {
    const std::string messy =
        "inject crash on component 1\n after 5000000 ticks\n"
        "INJECT SLOWDOWN ON ICOMPONENT 2 AFTER 1 TICKS\n FOR 2 TICKS\n FACTOR 3\n"
        "INJECT REBOOT ON NODE 0 AFTER 7 TICKS.";
    FaultScript once = parse_faultrc(messy);
    std::string rendered = render_faultrc(once);
    CHECK(rendered ==
          "INJECT CRASH ON COMPONENT 1 AFTER 5000000 TICKS\n"
          "INJECT SLOWDOWN ON ICOMPONENT 2 AFTER 1 TICKS FOR 2 TICKS FACTOR 3\n"
          "INJECT REBOOT ON NODE 0 AFTER 7 TICKS\n");
    CHECK(parse_faultrc(rendered) == once);
    CHECK(render_faultrc(parse_faultrc(rendered)) == rendered);
}
