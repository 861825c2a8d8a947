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
#include "fixtures.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "taskpower/oracle.hpp"

namespace fixtures {

using namespace taskpower;

Pmf cycles(const std::string& text) { return parse_pmf(text, Unit::Cycles); }
Pmf microwatts(const std::string& text) { return parse_pmf(text, Unit::Microwatts); }

FlowNode task(const std::string& id, const std::string& time, const std::string& power, std::uint64_t cycle_count,
              bool scalable) {
    TaskNode t;
    t.id = id;
    t.time = cycles(time);
    t.power = microwatts(power);
    t.cycles = cycle_count;
    t.scalable = scalable;
    return t;
}

FlowGraph graph_of(FlowNode root, std::optional<double> deadline, std::optional<double> confidence) {
    FlowGraph g;
    g.flows.emplace("main", std::move(root));
    g.deadline = deadline;
    g.confidence = confidence;
    return g;
}

std::vector<VoltageLevel> two_levels() { return {{"low", 0.9, 0.5, 0.5}, {"high", 1.8, 1.0, 1.0}}; }

namespace {

Pmf random_pmf(std::mt19937_64& rng, std::size_t max_points, bool integer, Unit unit) {
    std::uniform_int_distribution<std::size_t> count(1, max_points);
    std::uniform_int_distribution<int> value(1, 20), weight(1, 9);
    std::vector<PmfPoint> pts;
    std::size_t n = count(rng);
    for (std::size_t i = 0; i < n; ++i) {
        double v = integer ? value(rng) : value(rng) + 0.25 * weight(rng);
        pts.push_back({v, static_cast<double>(weight(rng))});
    }
    return Pmf::make(std::move(pts), unit);
}

struct TreeGen {
    std::mt19937_64& rng;
    const RandomTreeOptions& opts;
    int next_id = 0;

    FlowNode leaf() {
        TaskNode t;
        t.id = "t" + std::to_string(next_id++);
        t.time = random_pmf(rng, opts.max_points, true, Unit::Cycles);
        t.power = random_pmf(rng, opts.max_points, false, Unit::Microwatts);
        t.cycles = std::uniform_int_distribution<int>(1, 9)(rng);
        t.scalable = opts.scalable;
        return t;
    }

    FlowNode node(int depth) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        if (depth >= opts.max_depth || (depth > 0 && u(rng) < 0.3)) return leaf();
        std::vector<int> kinds = {0, 1};
        if (opts.allow_branch) kinds.push_back(2);
        if (opts.allow_race) kinds.push_back(3);
        int kind = kinds[std::uniform_int_distribution<std::size_t>(0, kinds.size() - 1)(rng)];
        std::size_t arity = std::uniform_int_distribution<std::size_t>(2, opts.max_arity)(rng);
        std::vector<FlowNode> children;
        for (std::size_t i = 0; i < arity; ++i) children.push_back(node(depth + 1));
        switch (kind) {
            case 0: return Sequence{std::move(children)};
            case 1: return AndGroup{std::move(children)};
            case 2: {
                std::vector<double> w;
                double total = 0.0;
                for (std::size_t i = 0; i < arity; ++i) {
                    w.push_back(std::uniform_int_distribution<int>(1, 9)(rng));
                    total += w.back();
                }
                for (double& x : w) x /= total;
                return Branch{std::move(w), std::move(children)};
            }
            default: return Race{std::move(children)};
        }
    }
};

}  // namespace

FlowNode random_tree(std::mt19937_64& rng, const RandomTreeOptions& opts) {
    for (;;) {
        TreeGen gen{rng, opts};
        FlowNode root = gen.node(0);
        if (oracle::outcome_count(root) <= opts.max_outcomes) return root;
    }
}

namespace {

struct BudgetGen {
    std::mt19937_64& rng;
    int next_id = 0;

    FlowNode leaf() {
        std::uniform_int_distribution<int> value(1, 12), weight(1, 9);
        auto two_or_one = [&](int percent_two, Unit unit, double offset) {
            std::vector<PmfPoint> pts{{value(rng) + offset, 1.0}};
            if (static_cast<int>(rng() % 100) < percent_two) pts.push_back({value(rng) + offset, weight(rng) / 10.0});
            return Pmf::make(std::move(pts), unit);
        };
        TaskNode t;
        t.id = "s" + std::to_string(next_id++);
        t.time = two_or_one(50, Unit::Cycles, 0.0);
        t.power = two_or_one(20, Unit::Microwatts, 0.5);
        t.cycles = 1 + rng() % 9;
        t.scalable = true;
        return t;
    }

    // A tree holding exactly `n` tasks.
    FlowNode node(std::size_t n) {
        if (n == 1) return leaf();
        std::size_t parts = std::min<std::size_t>(n, 2 + rng() % 2);
        std::vector<std::size_t> sizes(parts, 1);
        for (std::size_t extra = n - parts; extra > 0; --extra) ++sizes[rng() % parts];
        std::vector<FlowNode> children;
        for (auto k : sizes) children.push_back(node(k));
        switch (rng() % 4) {
            case 0: return Sequence{std::move(children)};
            case 1: return AndGroup{std::move(children)};
            case 2: {
                std::vector<double> w;
                double total = 0.0;
                for (std::size_t i = 0; i < parts; ++i) {
                    w.push_back(static_cast<double>(1 + rng() % 9));
                    total += w.back();
                }
                for (double& x : w) x /= total;
                return Branch{std::move(w), std::move(children)};
            }
            default: return Race{std::move(children)};
        }
    }
};

}  // namespace

FlowNode random_scalable_tree(std::mt19937_64& rng, std::size_t n) {
    for (;;) {
        BudgetGen gen{rng};
        FlowNode root = gen.node(n);
        if (oracle::outcome_count(root) <= 4'096) return root;
    }
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path);
}

std::string temp_dir(const std::string& tag) {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path() /
               ("taskpower_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace fixtures
