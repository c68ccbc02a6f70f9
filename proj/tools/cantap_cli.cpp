// cantap command-line front end.
//
//   cantap run <scenario.scn> [--seed N] [--ticks N] [--mode off|detect|prevent]
//              [--trace FILE] [--alerts FILE] [--metrics FILE]
//   cantap learn <scenario.scn> --out <allowlist.txt> [--seed N] [--ticks N]
//   cantap cdf <scenario.scn> --out <cdf.csv> [--seed N] [--ticks N]
//   cantap sweep-coverage <scenario.scn> [--seed N]
//   cantap demo-sensor [--seed N] [--out FILE]
//
// Configuration errors exit nonzero with a diagnostic on stderr.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <cantap/cantap.hpp>

namespace {

using namespace cantap;

struct CommonOpts {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> ticks;
    std::optional<std::string> mode;
    std::string trace_path;
    std::string alerts_path;
    std::string metrics_path;
    std::string out_path;
};

ScenarioConfig load_cfg(const CommonOpts& o) {
    ScenarioConfig cfg = ScenarioConfig::from_file(o.scenario);
    if (o.seed) {
        cfg.seed = *o.seed;
    }
    if (o.ticks) {
        cfg.ticks = static_cast<Tick>(*o.ticks);
    }
    if (o.mode) {
        if (*o.mode == "off") {
            cfg.officer.mode = OfficerMode::Off;
        } else if (*o.mode == "detect") {
            cfg.officer.mode = OfficerMode::Detect;
        } else if (*o.mode == "prevent") {
            cfg.officer.mode = OfficerMode::Prevent;
        } else {
            throw std::runtime_error("bad --mode value: " + *o.mode
                                     + " (expected off|detect|prevent)");
        }
    }
    return cfg;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) {
        throw std::runtime_error("cannot open output file: " + path);
    }
    return f;
}

int cmd_run(const CommonOpts& o) {
    const ScenarioConfig cfg = load_cfg(o);
    const std::string base = cantap::detail::dir_of(o.scenario);
    const RunOutput out = run_scenario(cfg, base);

    std::vector<std::string> names;
    for (const NodeSpec& n : cfg.nodes) {
        names.push_back(n.name);
    }
    names.push_back("officer");

    if (!o.trace_path.empty()) {
        auto f = open_out(o.trace_path);
        write_trace(f, out, names);
    }
    if (!o.alerts_path.empty()) {
        auto f = open_out(o.alerts_path);
        write_alerts(f, out);
    }
    if (!o.metrics_path.empty()) {
        auto f = open_out(o.metrics_path);
        write_metrics(f, out.metrics);
    } else {
        write_metrics(std::cout, out.metrics);
    }
    return 0;
}

int cmd_learn(const CommonOpts& o) {
    ScenarioConfig cfg = load_cfg(o);
    if (o.ticks) {
        cfg.officer.learn_ticks = static_cast<Tick>(*o.ticks);
    }
    const AllowlistTable t = learn_allowlist(cfg, cantap::detail::dir_of(o.scenario));
    auto f = open_out(o.out_path);
    t.save(f);
    std::cout << "learned " << t.by_tap.size() << " tap(s), " << t.unattributed.size()
              << " unattributed id(s), " << t.ambiguous.size() << " ambiguous id(s)\n";
    return 0;
}

int cmd_cdf(const CommonOpts& o) {
    ScenarioConfig cfg = load_cfg(o);
    cfg.officer.instrument_delay = true;
    if (cfg.officer.mode == OfficerMode::Off) {
        cfg.officer.mode = OfficerMode::Detect;
    }
    const RunOutput out = run_scenario(cfg, cantap::detail::dir_of(o.scenario));
    auto f = open_out(o.out_path);
    write_cdf_csv(f, out.metrics.delay_histogram, out.metrics.delay_frames);
    std::cout << "measured " << out.metrics.delay_frames << " frames\n";
    return 0;
}

int cmd_sweep(const CommonOpts& o) {
    ScenarioConfig cfg = load_cfg(o); // validates the file; seed may override
    const CoverageMatrices m = coverage_sweep(cfg.seed);
    write_coverage(std::cout, m);
    return 0;
}

int cmd_demo(std::uint64_t seed, const std::string& out_path) {
    const SensorDemo demo = demo_sensor(seed);
    if (!out_path.empty()) {
        auto f = open_out(out_path);
        write_sensor_csv(f, demo);
    }
    std::size_t legit = 0;
    std::size_t spoofed = 0;
    std::size_t spoofed_after_guard = 0;
    for (const auto& row : demo.rows) {
        (row.spoofed ? spoofed : legit)++;
        if (row.spoofed && row.tick >= demo.t2) {
            ++spoofed_after_guard;
        }
    }
    std::cout << "sensor readings delivered: " << legit << " legit, " << spoofed
              << " spoofed\n";
    std::cout << "spoofed readings at/after guardian activation (t=" << demo.t2
              << "): " << spoofed_after_guard << "\n";
    if (demo.attacker_busoff_tick) {
        std::cout << "attacker forced bus-off at tick " << *demo.attacker_busoff_tick << "\n";
    } else {
        std::cout << "attacker never reached bus-off\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cantap: CAN bus simulator with a transmit-line guardian"};
    app.require_subcommand(1);

    CommonOpts o;
    std::uint64_t demo_seed = 1;

    auto add_common = [&](CLI::App* sub, bool needs_scn) {
        if (needs_scn) {
            sub->add_option("scenario", o.scenario, "scenario file")->required();
        }
        sub->add_option("--seed", o.seed, "override [sim] seed");
        sub->add_option("--ticks", o.ticks, "override [sim] ticks");
    };

    CLI::App* run = app.add_subcommand("run", "run a scenario and report metrics");
    add_common(run, true);
    run->add_option("--mode", o.mode, "override guardian mode (off|detect|prevent)");
    run->add_option("--trace", o.trace_path, "write transmit trace to FILE");
    run->add_option("--alerts", o.alerts_path, "write alert log to FILE");
    run->add_option("--metrics", o.metrics_path, "write metrics JSON to FILE (default stdout)");

    CLI::App* learn = app.add_subcommand("learn", "run the learning phase, save the id table");
    add_common(learn, true);
    learn->add_option("--out", o.out_path, "allowlist output file")->required();

    CLI::App* cdf = app.add_subcommand("cdf", "measure the detection-delay distribution");
    add_common(cdf, true);
    cdf->add_option("--out", o.out_path, "CSV output file")->required();

    CLI::App* sweep = app.add_subcommand("sweep-coverage",
                                         "detection coverage matrices over tap placements");
    add_common(sweep, true);

    CLI::App* demo = app.add_subcommand("demo-sensor", "sensor spoofing walkthrough");
    demo->add_option("--seed", demo_seed, "demo seed");
    demo->add_option("--out", o.out_path, "write dashboard readings CSV to FILE");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return cmd_run(o);
        }
        if (learn->parsed()) {
            return cmd_learn(o);
        }
        if (cdf->parsed()) {
            return cmd_cdf(o);
        }
        if (sweep->parsed()) {
            return cmd_sweep(o);
        }
        if (demo->parsed()) {
            return cmd_demo(demo_seed, o.out_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
