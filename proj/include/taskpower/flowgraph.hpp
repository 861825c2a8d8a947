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

// Hierarchical concurrent flow graph: task nodes composed by sequence,
// AND-concurrency, probabilistic branch and OR-race, plus named subflows.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "taskpower/pmf.hpp"

namespace taskpower {

struct TaskNode {
    std::string id;
    std::string label;
    Pmf time = Pmf::delta(0.0, Unit::Cycles);
    Pmf power = Pmf::delta(0.0, Unit::Microwatts);
    std::uint64_t cycles = 0;  // nominal count, frequency independent
    bool scalable = false;
};

struct FlowNode;

struct Sequence {
    std::vector<FlowNode> children;
};

/// All children run concurrently; completion waits for the slowest.
struct AndGroup {
    std::vector<FlowNode> children;
};

/// Exactly one arm runs, chosen with the arm's probability.
struct Branch {
    std::vector<double> probs;
    std::vector<FlowNode> arms;
};

/// All children start together; the first to finish releases the successor.
struct Race {
    std::vector<FlowNode> children;
};

struct SubflowRef {
    std::string flow;
};

struct FlowNode {
    using Variant = std::variant<TaskNode, Sequence, AndGroup, Branch, Race, SubflowRef>;
    Variant node;

    FlowNode() = default;
    template <typename T>
        requires std::is_constructible_v<Variant, T&&> && (!std::is_same_v<std::remove_cvref_t<T>, FlowNode>)
    FlowNode(T&& alt) : node(std::forward<T>(alt)) {}

    template <typename T>
    bool is() const {
        return std::holds_alternative<T>(node);
    }
    template <typename T>
    const T& as() const {
        return std::get<T>(node);
    }
    template <typename T>
    T& as() {
        return std::get<T>(node);
    }
};

struct FlowGraph {
    std::map<std::string, FlowNode> flows;
    std::string entry = "main";
    std::optional<double> deadline;    // cycles
    std::optional<double> confidence;  // in (0, 1]
};

struct Diagnostic {
    std::string path;  // e.g. "main/seq[1]/branch"
    std::string message;

    bool operator==(const Diagnostic&) const = default;
};

/// One diagnostic per invariant violation; empty means the graph is well formed.
std::vector<Diagnostic> validate(const FlowGraph& g);

/// Throws InputError carrying every diagnostic when validate() is not empty.
void require_valid(const FlowGraph& g);

/// Inlines every subflow reference reachable from the entry flow. Tasks of an
/// inlined flow get ids of the form `<id>@<flow>.<k>[/<flow>.<k>...]`, where k
/// counts the references to subflows inside the referencing flow in document
/// order. Tasks of the entry flow keep their ids.
FlowNode flatten(const FlowGraph& g);

/// Tree equality; probabilities compared within `prob_tol`, values and ids exactly.
bool structurally_equal(const FlowNode& a, const FlowNode& b, double prob_tol = 1e-9);
bool structurally_equal(const FlowGraph& a, const FlowGraph& b, double prob_tol = 1e-9);

/// Pre-order walk over every task of a tree (no subflow resolution).
void for_each_task(const FlowNode& root, const std::function<void(const TaskNode&)>& fn);
std::vector<const TaskNode*> collect_tasks(const FlowNode& root);

struct ConstructCounts {
    std::size_t tasks = 0;
    std::size_t sequences = 0;
    std::size_t and_groups = 0;
    std::size_t branches = 0;
    std::size_t races = 0;
    std::size_t subflow_refs = 0;

    bool operator==(const ConstructCounts&) const = default;
};

/// Construct counts reachable from the entry flow, following subflow references.
ConstructCounts count_reachable(const FlowGraph& g);
ConstructCounts count_constructs(const FlowNode& root);

// Flow file text format.

/// Parses a flow file; the result passes validate(). Throws ParseError on
/// syntax errors and InputError on duplicate flows or invariant violations.
FlowGraph parse_flow_file(std::string_view text);

/// Canonical text: sorted flow names, two-space indentation, probabilities
/// with 9 significant digits. Throws InputError on an invalid graph.
std::string serialize_flow_file(const FlowGraph& g);

}  // namespace taskpower
