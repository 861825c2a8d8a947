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

// Flow-graph extraction from a scheduled block-level IR.
//
// IR file:
//
//   block BB1
//     op ialu @0
//     op imul @1
//     succ BB2:30 BB3:70
//
// Functional-unit library:
//
//   fu ialu delay=1 energy={38:0.2, 41:0.6, 45:0.2}
//
// Every block becomes a flow named after it. Its ops are grouped by schedule
// time; groups run in ascending time order and ops sharing a time step form an
// AND group. A block with one successor continues into the successor's flow; a
// block with several successors ends in a branch weighted by the profile counts.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "taskpower/flowgraph.hpp"
#include "taskpower/pmf.hpp"

namespace taskpower {

struct IrOp {
    std::string fu_type;
    std::uint64_t schedule_time = 0;
};

struct IrBlock {
    std::string id;
    std::vector<IrOp> ops;
};

struct IrEdge {
    std::string from;
    std::string to;
    std::uint64_t count = 0;
};

struct IrProgram {
    std::vector<IrBlock> blocks;  // the first block is the entry
    std::vector<IrEdge> edges;
};

struct FuEntry {
    Pmf energy = Pmf::delta(0.0, Unit::MicrowattCycles);  // per operation
    std::uint64_t delay = 1;                              // cycles
};

struct FuLibrary {
    std::map<std::string, FuEntry> entries;
};

/// Throws ParseError on syntax errors, duplicate blocks, dangling edges,
/// empty blocks and negative schedule times.
IrProgram parse_ir(std::string_view text);

/// Throws ParseError on syntax errors, duplicate types and zero delays.
FuLibrary parse_fu_library(std::string_view text);

/// Throws InputError when the library misses a referenced type, a branching
/// block has zero total successor count, or the block graph has a cycle.
FlowGraph extract_flow(const IrProgram& ir, const FuLibrary& lib);

enum class NodeKind { Sequential, Concurrent };

/// Per-node weight used when combining power: 1/n for n sequential nodes of
/// equal duration, 1 for concurrent nodes. Throws std::invalid_argument if n < 1.
double transition_probability(NodeKind kind, std::uint64_t n);

}  // namespace taskpower
