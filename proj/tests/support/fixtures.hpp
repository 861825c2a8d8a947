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
#pragma once

// Shared builders and random fixture generators for the test binaries.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "taskpower/flowgraph.hpp"
#include "taskpower/pmf.hpp"
#include "taskpower/scheduler.hpp"

namespace fixtures {

using taskpower::FlowGraph;
using taskpower::FlowNode;
using taskpower::Pmf;

Pmf cycles(const std::string& text);
Pmf microwatts(const std::string& text);

FlowNode task(const std::string& id, const std::string& time, const std::string& power, std::uint64_t cycle_count = 0,
              bool scalable = false);

FlowGraph graph_of(FlowNode root, std::optional<double> deadline = std::nullopt,
                   std::optional<double> confidence = std::nullopt);

/// Two levels: "low" (0.9 V, v=0.5, f=0.5) and "high" (1.8 V reference).
std::vector<taskpower::VoltageLevel> two_levels();

struct RandomTreeOptions {
    int max_depth = 3;
    std::size_t max_arity = 3;
    std::size_t max_points = 4;
    std::uint64_t max_outcomes = 100'000;
    bool allow_branch = true;
    bool allow_race = true;
    bool scalable = false;
};

/// Random tree with integer-valued times (ties are common) and fractional
/// powers, regenerated until its exact outcome count is within the limit.
FlowNode random_tree(std::mt19937_64& rng, const RandomTreeOptions& opts = {});

/// Random tree with exactly `n` scalable tasks and point-mass or small
/// distributions, suitable for voltage search cross-checks.
FlowNode random_scalable_tree(std::mt19937_64& rng, std::size_t n);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

/// Fresh directory under the system temp dir.
std::string temp_dir(const std::string& tag);

}  // namespace fixtures
