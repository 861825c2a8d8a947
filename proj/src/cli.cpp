// Copyright 2026 The taskpower Authors.
//
//    Licensed under the Apache License, Version 2.0 (the "License");
//    you may not use this file except in compliance with the License.
//    You may obtain a copy of the License at
//
//         http://www.apache.org/licenses/LICENSE-2.0
//
//    Unless required by applicable law or agreed to in writing, software
//    distributed under the License is distributed on an "AS IS" BASIS,
//    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//    See the License for the specific language governing permissions and
//    limitations under the License.
#include "taskpower/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "taskpower/analysis.hpp"
#include "taskpower/error.hpp"
#include "taskpower/extractor.hpp"
#include "taskpower/flowgraph.hpp"
#include "taskpower/oracle.hpp"
#include "taskpower/scheduler.hpp"

namespace taskpower {

namespace {

struct RunConfig {
    std::string ir, fu, flow, levels, out;
    std::optional<double> deadline, confidence;
    std::size_t support_cap = kDefaultSupportCap;
    std::uint64_t trials = 100'000;
    std::uint64_t seed = 1;
    std::size_t max_procs = 8;
    bool corrupt_analysis = false;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw InputError("cannot read '" + path + "'");
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw InputError("cannot write '" + path + "'");
    o << text;
    if (!o) throw InputError("cannot write '" + path + "'");
}

FlowGraph load_flow(const RunConfig& c) {
    FlowGraph g = parse_flow_file(read_file(c.flow));
    if (c.deadline) g.deadline = c.deadline;
    if (c.confidence) g.confidence = c.confidence;
    require_valid(g);
    return g;
}

double required_deadline(const FlowGraph& g) {
    if (!g.deadline) throw InputError("no deadline: declare one in the flow file or pass --deadline");
    return *g.deadline;
}

int cmd_extract(const RunConfig& c, std::ostream& out) {
    IrProgram ir = parse_ir(read_file(c.ir));
    FuLibrary lib = parse_fu_library(read_file(c.fu));
    FlowGraph g = extract_flow(ir, lib);
    if (c.deadline) g.deadline = c.deadline;
    if (c.confidence) g.confidence = c.confidence;
    write_file(c.out, serialize_flow_file(g));
    out << "wrote " << c.out << "\n";
    return kExitOk;
}

int cmd_estimate(const RunConfig& c, std::ostream& out) {
    FlowGraph g = load_flow(c);
    AnalysisReport r = analyze(g, {c.support_cap});
    std::string report = format_report(r);
    write_file(c.out + ".report.txt", report);
    write_file(c.out + ".time.csv", pmf_to_csv(r.time));
    write_file(c.out + ".power.csv", pmf_to_csv(r.power));
    out << report;
    return kExitOk;
}

int cmd_schedule(const RunConfig& c, std::ostream& out) {
    FlowGraph g = load_flow(c);
    double deadline = required_deadline(g);
    auto levels = parse_levels(read_file(c.levels));
    AssignmentOptions opts;
    opts.analysis.support_cap = c.support_cap;
    AssignmentResult r = enumerate_assignments(g, levels, deadline, g.confidence.value_or(1.0), opts);
    std::string report = format_assignment_report(r);
    write_file(c.out + ".report.txt", report);
    write_file(c.out + ".best.power.csv", pmf_to_csv(r.best_report.power));
    write_file(c.out + ".worst.power.csv", pmf_to_csv(r.worst_report.power));
    out << report;
    return kExitOk;
}

int cmd_multiproc(const RunConfig& c, std::ostream& out) {
    FlowGraph g = load_flow(c);
    double deadline = required_deadline(g);
    auto levels = parse_levels(read_file(c.levels));
    MultiprocOptions opts;
    opts.max_processors = c.max_procs;
    opts.assignment.analysis.support_cap = c.support_cap;
    MultiprocSchedule s = multiproc_schedule(g, levels, deadline, g.confidence.value_or(1.0), opts);
    std::string report = format_multiproc_report(s);
    write_file(c.out + ".report.txt", report);
    for (std::size_t i = 0; i < s.per_lane_power.size(); ++i)
        write_file(c.out + ".lane" + std::to_string(i) + ".power.csv", pmf_to_csv(s.per_lane_power[i]));
    out << report;
    return kExitOk;
}

int cmd_verify(const RunConfig& c, std::ostream& out) {
    FlowGraph g = load_flow(c);
    FlowNode root = flatten(g);
    AnalysisOptions aopts{c.support_cap};
    Pmf time = time_pmf(root, aopts);
    Pmf power = power_pmf(root, aopts);
    if (c.corrupt_analysis) power = scale(power, 1.5);

    std::ostringstream rep;
    bool ok = true;
    auto line = [&rep](const std::string& k, const std::string& v) { rep << k << '=' << v << '\n'; };
    line("analysis.mean_time", format_number(expectation(time)));
    line("analysis.mean_power", format_number(expectation(power)));

    std::uint64_t outcomes = oracle::outcome_count(root);
    if (outcomes <= oracle::kDefaultOutcomeCap) {
        auto exact = oracle::enumerate_exact(root);
        line("exact.mean_time", format_number(expectation(exact.time)));
        line("exact.mean_power", format_number(expectation(exact.power)));
        if (exact.time.size() <= c.support_cap && exact.power.size() <= c.support_cap) {
            double dt = max_point_deviation(time, exact.time);
            double dp = max_point_deviation(power, exact.power);
            line("exact.max_deviation_time", format_number(dt));
            line("exact.max_deviation_power", format_number(dp));
            bool pass = dt <= 1e-9 && dp <= 1e-9;
            line("exact.status", pass ? "pass" : "fail");
            ok = ok && pass;
        } else {
            line("exact.status", "skipped (support above cap)");
        }
    } else {
        line("exact.status", "skipped (" + std::to_string(outcomes) + " outcomes)");
    }

    auto sim = oracle::monte_carlo(root, c.trials, c.seed);
    double root_n = std::sqrt(static_cast<double>(c.trials));
    auto check = [&](const char* name, const Pmf& analytic, const Pmf& empirical) {
        double mean = expectation(analytic);
        double bound = 4.0 * std_dev(analytic) / root_n + 1e-9 * std::max(1.0, std::fabs(mean));
        double diff = std::fabs(expectation(empirical) - mean);
        line(std::string("mc.mean_") + name, format_number(expectation(empirical)));
        line(std::string("mc.bound_") + name, format_number(bound));
        return diff <= bound;
    };
    bool mc_ok = check("time", time, sim.empirical_time);
    mc_ok = check("power", power, sim.empirical_power) && mc_ok;
    line("mc.trials", std::to_string(c.trials));
    line("mc.seed", std::to_string(c.seed));
    line("mc.status", mc_ok ? "pass" : "fail");
    ok = ok && mc_ok;
    line("status", ok ? "pass" : "fail");

    if (!c.out.empty()) {
        write_file(c.out + ".mc.time.csv", pmf_to_csv(sim.empirical_time));
        write_file(c.out + ".mc.power.csv", pmf_to_csv(sim.empirical_power));
    }
    out << rep.str();
    return ok ? kExitOk : kExitVerify;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stochastic power estimation and voltage scheduling for task flow graphs", "taskpower"};
    app.require_subcommand(1);
    RunConfig c;

    auto positive_cap = CLI::Range(std::size_t{2}, std::size_t{1} << 24);
    auto* extract = app.add_subcommand("extract", "Build a flow file from IR and a functional-unit library");
    extract->add_option("--ir", c.ir, "IR text file")->required();
    extract->add_option("--fu", c.fu, "functional-unit library file")->required();
    extract->add_option("--out", c.out, "output flow file")->required();
    extract->add_option("--deadline", c.deadline, "deadline recorded in the flow file");
    extract->add_option("--confidence", c.confidence, "confidence recorded in the flow file");

    auto* estimate = app.add_subcommand("estimate", "Time and power distributions of a flow graph");
    auto* schedule = app.add_subcommand("schedule", "Best and worst voltage assignments");
    auto* multiproc = app.add_subcommand("multiproc", "Multiprocessor schedule with per-lane voltages");
    auto* verify = app.add_subcommand("verify", "Cross-check analysis against exact enumeration and simulation");
    for (auto* sub : {estimate, schedule, multiproc, verify}) {
        sub->add_option("--flow", c.flow, "flow file")->required();
        sub->add_option("--deadline", c.deadline, "deadline override (cycles)");
        sub->add_option("--confidence", c.confidence, "confidence override");
        sub->add_option("--support-cap", c.support_cap, "maximum support points per distribution")
            ->check(positive_cap);
    }
    estimate->add_option("--out", c.out, "output prefix")->required();
    for (auto* sub : {schedule, multiproc}) {
        sub->add_option("--levels", c.levels, "voltage level file")->required();
        sub->add_option("--out", c.out, "output prefix")->required();
    }
    multiproc->add_option("--max-procs", c.max_procs, "largest processor count to try")
        ->check(CLI::Range(std::size_t{1}, std::size_t{1024}));
    verify->add_option("--trials", c.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
    verify->add_option("--seed", c.seed, "Monte Carlo seed");
    verify->add_option("--out", c.out, "optional prefix for simulated CSVs");
    verify->add_flag("--corrupt-analysis", c.corrupt_analysis)->group("");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*extract) return cmd_extract(c, out);
        if (*estimate) return cmd_estimate(c, out);
        if (*schedule) return cmd_schedule(c, out);
        if (*multiproc) return cmd_multiproc(c, out);
        return cmd_verify(c, out);
    } catch (const InfeasibleError& e) {
        err << "taskpower: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const InputError& e) {
        err << "taskpower: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        err << "taskpower: " << e.what() << "\n";
        return kExitInput;
    } catch (const Error& e) {
        err << "taskpower: " << e.what() << "\n";
        return kExitInput;
    }
}

}  // namespace taskpower
