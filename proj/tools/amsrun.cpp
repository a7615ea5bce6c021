#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ams/sim.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

ams::Tick seconds_to_ticks(double seconds, std::uint64_t tick_ns) {
    return static_cast<ams::Tick>(std::llround(seconds * 1e9 / static_cast<double>(tick_ns)));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scenario runner: heartbeat-based crash detection and coordinator failover "
                 "under injected faults"};

    std::string config_path;
    std::string faultrc_path;
    double horizon_s = 60.0;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string format = "text";
    bool verbose = false;
    std::vector<double> predicate_at;

    app.add_option("--config", config_path, "configuration script")->required();
    app.add_option("--faultrc", faultrc_path, "fault injection script (.faultrc)");
    app.add_option("--horizon-s", horizon_s, "simulated horizon in seconds")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "override the configured SEED")
        ->each([&](const std::string&) { seed_given = true; });
    app.add_option("--format", format, "trace format")
        ->check(CLI::IsMember({"text", "json"}));
    app.add_flag("--verbose", verbose, "include heartbeat-level events");
    app.add_option("--predicate-at", predicate_at,
                   "evaluate the health predicate at extra instants (seconds)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const ams::Config cfg = ams::parse_config(slurp(config_path));
        const ams::ValidatedConfig vcfg = ams::validate_config(cfg);

        ams::FaultScript script;
        if (!faultrc_path.empty()) {
            script = ams::parse_faultrc(slurp(faultrc_path));
        }
        for (const ams::FaultSpec& f : script.faults) {
            if (f.target >= cfg.n) {
                throw std::runtime_error("fault targets unknown node/component " +
                                         std::to_string(f.target));
            }
        }

        ams::SimOptions opts;
        opts.verbose_trace = verbose;
        ams::Simulation sim(vcfg, script.faults, seed_given ? seed : cfg.seed, opts);

        const bool json = format == "json";
        std::sort(predicate_at.begin(), predicate_at.end());
        std::size_t printed = 0;
        auto flush_trace = [&]() {
            const auto& events = sim.trace().events;
            for (; printed < events.size(); ++printed) {
                const ams::TraceEvent& e = events[printed];
                std::cout << (json ? ams::render_trace_line_json(e, cfg.tick_ns)
                                   : ams::render_trace_line_text(e, cfg.tick_ns))
                          << '\n';
            }
        };
        auto print_predicate = [&]() {
            const ams::PredicateReport report = sim.predicate();
            if (json) {
                std::cout << "{\"predicate_at\":" << ams::format_time_s(sim.now(), cfg.tick_ns)
                          << ",\"holds\":" << (report.holds() ? "true" : "false")
                          << ",\"summary\":\"" << report.summary() << "\"}\n";
            } else {
                std::cout << "# predicate t=" << ams::format_time_s(sim.now(), cfg.tick_ns) << " "
                          << (report.holds() ? "holds" : "violated") << ": " << report.summary()
                          << '\n';
            }
            return report;
        };

        for (double at : predicate_at) {
            if (at >= horizon_s) {
                continue;
            }
            sim.run_until(seconds_to_ticks(at, cfg.tick_ns));
            flush_trace();
            print_predicate();
        }

        sim.run_until(seconds_to_ticks(horizon_s, cfg.tick_ns));
        flush_trace();
        const ams::PredicateReport report = print_predicate();
        return report.holds() ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
