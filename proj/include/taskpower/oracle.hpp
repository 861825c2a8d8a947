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

// Independent verification engines. Nothing on the analytical path calls
// into this header.

#include <cstddef>
#include <cstdint>
#include <span>

#include "taskpower/flowgraph.hpp"
#include "taskpower/pmf.hpp"
#include "taskpower/scheduler.hpp"

namespace taskpower::oracle {

inline constexpr std::uint64_t kDefaultOutcomeCap = 1'000'000;

struct ExactResult {
    Pmf time;
    Pmf power;
};

/// Number of joint outcomes enumerate_exact would walk for this tree.
/// Saturates at UINT64_MAX.
std::uint64_t outcome_count(const FlowNode& root);

/// Exact time and power laws by walking every combination of branch choices
/// and support values of a flattened tree, applying the composition rules to
/// realized values. Throws InputError when outcome_count exceeds `cap`.
ExactResult enumerate_exact(const FlowNode& root, std::uint64_t cap = kDefaultOutcomeCap);

struct SimResult {
    Pmf empirical_time;
    Pmf empirical_power;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
};

/// Samples the flattened graph `trials` times. Trials are taken in blocks of
/// 1024; block b draws from a mt19937_64 seeded with splitmix64(seed + b), and
/// uniforms are built from the top 53 bits of each draw, so results are
/// identical on every platform and for any worker count.
SimResult monte_carlo(const FlowGraph& g, std::uint64_t trials, std::uint64_t seed);
SimResult monte_carlo(const FlowNode& root, std::uint64_t trials, std::uint64_t seed);

/// Nested-loop re-implementation of exhaustive voltage assignment. Distributions
/// come from enumerate_exact; shares no search code with the scheduler.
/// Throws InputError above 16 scalable tasks and InfeasibleError when nothing
/// meets the deadline.
AssignmentResult brute_force_voltage(const FlowNode& root, std::span<const VoltageLevel> levels, double deadline,
                                     double confidence = 1.0);
AssignmentResult brute_force_voltage(const FlowGraph& g, std::span<const VoltageLevel> levels, double deadline,
                                     double confidence = 1.0);

/// Smallest processor count for which some mapping of the tasks of a
/// deterministic-time tree onto processors meets the deadline. Every mapping is
/// tried; tasks on one processor run in a fixed topological order and wait for
/// their predecessors. Throws InputError if a task time is not a point mass,
/// the tree holds a branch or race, or tasks^processors exceeds 10^7.
std::size_t brute_force_min_processors(const FlowNode& root, double deadline, std::size_t max_processors);

}  // namespace taskpower::oracle
