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
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <sys/wait.h>

#include "fixtures.hpp"
#include "taskpower/cli.hpp"
#include "taskpower/extractor.hpp"
#include "taskpower/flowgraph.hpp"

using namespace taskpower;
using fixtures::read_text;
using fixtures::write_text;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

const std::string kData = TASKPOWER_TEST_DATA;

double csv_mass(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    REQUIRE(line == "value,probability");
    double total = 0.0;
    while (std::getline(in, line)) total += std::stod(line.substr(line.find(',') + 1));
    return total;
}

std::string single_task_flow(const std::string& extra_header = "") {
    return "flowgraph entry=main" + extra_header + "\nflow main { task t time={10:1} power={5:1} cycles=10 scalable }\n";
}

}  // namespace

TEST_CASE("extract writes a flow file equal to the library result") {
    std::string dir = fixtures::temp_dir("extract");
    Run r = run({"extract", "--ir", kData + "/sample.ir", "--fu", kData + "/sample.fu", "--out", dir + "/out.flow"});
    REQUIRE(r.code == 0);
    FlowGraph written = parse_flow_file(read_text(dir + "/out.flow"));
    FlowGraph direct = extract_flow(parse_ir(read_text(kData + "/sample.ir")),
                                    parse_fu_library(read_text(kData + "/sample.fu")));
    CHECK(structurally_equal(written, direct));
}

TEST_CASE("extract input errors exit 2") {
    std::string dir = fixtures::temp_dir("extract_err");
    write_text(dir + "/bad.ir", "block A\n op fdiv @0\n");
    Run missing = run({"extract", "--ir", dir + "/bad.ir", "--fu", kData + "/sample.fu", "--out", dir + "/o.flow"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("fdiv") != std::string::npos);
    Run unreadable = run({"extract", "--ir", dir + "/nope.ir", "--fu", kData + "/sample.fu", "--out", dir + "/o.flow"});
    CHECK(unreadable.code == 2);
    CHECK(unreadable.err.find("nope.ir") != std::string::npos);
}

TEST_CASE("estimate reports and plot data") {
    std::string dir = fixtures::temp_dir("estimate");
    write_text(dir + "/one.flow", single_task_flow());
    Run r = run({"estimate", "--flow", dir + "/one.flow", "--out", dir + "/one"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("mean_time=10\n") != std::string::npos);
    CHECK(r.out.find("mean_power=5\n") != std::string::npos);
    CHECK(r.out.find("confidence_at_deadline") == std::string::npos);
    CHECK(read_text(dir + "/one.report.txt") == r.out);

    Run d = run({"estimate", "--flow", dir + "/one.flow", "--out", dir + "/one", "--deadline", "9"});
    CHECK(d.out.find("confidence_at_deadline=0\n") != std::string::npos);

    Run b = run({"estimate", "--flow", kData + "/branch.flow", "--out", dir + "/b"});
    REQUIRE(b.code == 0);
    CHECK(b.out.find("deadline=40\n") != std::string::npos);
    CHECK(b.out.find("confidence_at_deadline=") != std::string::npos);
    CHECK(csv_mass(read_text(dir + "/b.power.csv")) == doctest::Approx(1.0));
    CHECK(csv_mass(read_text(dir + "/b.time.csv")) == doctest::Approx(1.0));
}

TEST_CASE("command-line overrides beat file attributes") {
    std::string dir = fixtures::temp_dir("override");
    Run r = run({"estimate", "--flow", kData + "/branch.flow", "--out", dir + "/b", "--deadline", "12"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("deadline=12\n") != std::string::npos);
}

TEST_CASE("schedule outputs and failures") {
    std::string dir = fixtures::temp_dir("schedule");
    Run r = run({"schedule", "--flow", kData + "/branch.flow", "--levels", kData + "/levels.txt", "--out", dir + "/s"});
    REQUIRE(r.code == 0);
    for (const char* key : {"slowdown_cycles=", "savings_estimated=", "savings_theoretical="})
        CHECK(r.out.find(key) != std::string::npos);
    CHECK(std::filesystem::exists(dir + "/s.best.power.csv"));
    CHECK(std::filesystem::exists(dir + "/s.worst.power.csv"));

    Run tight = run({"schedule", "--flow", kData + "/branch.flow", "--levels", kData + "/levels.txt", "--out",
                     dir + "/s", "--deadline", "5"});
    CHECK(tight.code == 3);

    write_text(dir + "/nodeadline.flow", single_task_flow());
    Run none = run({"schedule", "--flow", dir + "/nodeadline.flow", "--levels", kData + "/levels.txt", "--out", dir + "/n"});
    CHECK(none.code == 2);
    CHECK(none.err.find("deadline") != std::string::npos);

    std::string big = "flowgraph entry=main deadline=1000\nflow main {\n";
    for (int i = 0; i < 25; ++i) big += "  task t" + std::to_string(i) + " time={1:1} power={1:1} cycles=1 scalable\n";
    write_text(dir + "/big.flow", big + "}\n");
    Run over = run({"schedule", "--flow", dir + "/big.flow", "--levels", kData + "/levels.txt", "--out", dir + "/o"});
    CHECK(over.code == 2);
    CHECK(over.err.find("cap") != std::string::npos);
}

TEST_CASE("multiproc lanes and plot data") {
    std::string dir = fixtures::temp_dir("multiproc");
    Run r = run({"multiproc", "--flow", kData + "/decode.flow", "--levels", kData + "/levels.txt", "--out", dir + "/m"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("processors=2\n") != std::string::npos);
    CHECK(std::filesystem::exists(dir + "/m.lane0.power.csv"));
    CHECK(std::filesystem::exists(dir + "/m.lane1.power.csv"));
    CHECK_FALSE(std::filesystem::exists(dir + "/m.lane2.power.csv"));

    write_text(dir + "/chain.flow",
               "flowgraph entry=main deadline=100\nflow main {\n"
               "  task a time={10:1} power={1:1} cycles=1 scalable\n"
               "  task b time={20:1} power={1:1} cycles=1 scalable\n"
               "  task c time={30:1} power={1:1} cycles=1 scalable\n}\n");
    Run chain = run({"multiproc", "--flow", dir + "/chain.flow", "--levels", kData + "/levels.txt", "--out",
                     dir + "/c", "--max-procs", "6"});
    REQUIRE(chain.code == 0);
    CHECK(chain.out.find("processors=1\n") != std::string::npos);

    write_text(dir + "/coin.flow",
               "flowgraph entry=main deadline=50 confidence=1\n"
               "flow main { task t time={10:0.5, 100:0.5} power={1:1} }\n");
    Run impossible = run({"multiproc", "--flow", dir + "/coin.flow", "--levels", kData + "/levels.txt", "--out",
                          dir + "/x"});
    CHECK(impossible.code == 3);
}

TEST_CASE("verify passes, fails on a corrupted analysis and is repeatable") {
    std::vector<std::string> args{"verify", "--flow", kData + "/branch.flow", "--trials", "20000", "--seed", "9"};
    Run a = run(args);
    CHECK(a.code == 0);
    CHECK(a.out.find("exact.status=pass") != std::string::npos);
    CHECK(a.out.find("\nstatus=pass") != std::string::npos);
    Run b = run(args);
    CHECK(a.out == b.out);
    args.push_back("--corrupt-analysis");
    Run bad = run(args);
    CHECK(bad.code == 4);
    CHECK(bad.out.find("\nstatus=fail") != std::string::npos);
}

TEST_CASE("verify writes simulated distributions") {
    std::string dir = fixtures::temp_dir("verify");
    Run r = run({"verify", "--flow", kData + "/decode.flow", "--trials", "500", "--out", dir + "/v"});
    REQUIRE(r.code == 0);
    CHECK(read_text(dir + "/v.mc.time.csv") == "value,probability\n375,1\n");
}

TEST_CASE("usage errors") {
    CHECK(run({}).code == 2);
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({"estimate", "--flow", kData + "/branch.flow"}).code == 2);
    CHECK(run({"verify", "--flow", kData + "/branch.flow", "--trials", "0"}).code == 2);
    CHECK(run({"estimate", "--flow", kData + "/branch.flow", "--out", "x", "--support-cap", "1"}).code == 2);
    Run help = run({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("estimate") != std::string::npos);
}

TEST_CASE("the installed binary reports exit codes") {
    std::string dir = fixtures::temp_dir("binary");
    auto status = [](const std::string& cmd) {
        int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    std::string bin = TASKPOWER_BINARY;
    CHECK(status(bin + " estimate --flow " + kData + "/branch.flow --out " + dir + "/e") == 0);
    CHECK(status(bin + " estimate --flow " + dir + "/missing.flow --out " + dir + "/e") == 2);
    CHECK(status(bin + " schedule --flow " + kData + "/branch.flow --levels " + kData + "/levels.txt --out " + dir +
                 "/s --deadline 5") == 3);
    CHECK(status(bin + " verify --flow " + kData + "/branch.flow --trials 2000 --corrupt-analysis") == 4);
}
