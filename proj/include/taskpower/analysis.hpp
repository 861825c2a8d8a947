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

// Analytical time and power distributions of a flow graph.
//
// Composition rules over a flattened tree:
//
//   construct   time                 power
//   ---------   ------------------   ------------------------------------------
//   task        own                  own
//   seq         sum (convolution)    sum of child powers, each scaled by
//                                    E[t_child] / sum E[t_j]
//   and         max                  sum (concurrent units all draw power)
//   branch      mixture              mixture
//   race        min                  mixture over arms weighted by P(arm wins),
//                                    ties split equally; each arm contributes
//                                    its power law conditioned on winning
//
// Children are independent. Supports are rebinned to the configured cap after
// every composition step.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "taskpower/flowgraph.hpp"
#include "taskpower/pmf.hpp"

namespace taskpower {

struct AnalysisOptions {
    std::size_t support_cap = kDefaultSupportCap;
};

struct AnalysisReport {
    Pmf time = Pmf::delta(0.0, Unit::Cycles);
    Pmf power = Pmf::delta(0.0, Unit::Microwatts);
    double mean_power = 0.0;
    double std_power = 0.0;
    double most_probable_power = 0.0;
    double mean_time = 0.0;
    std::optional<double> deadline;
    std::optional<double> confidence_at_deadline;
};

Pmf time_pmf(const FlowNode& root, const AnalysisOptions& opts = {});

/// Throws InputError when a sequence has zero total expected duration.
Pmf power_pmf(const FlowNode& root, const AnalysisOptions& opts = {});

/// Summary over an already flattened tree. `deadline` fills the confidence field.
AnalysisReport analyze_tree(const FlowNode& root, std::optional<double> deadline, const AnalysisOptions& opts = {});

/// Validates, flattens and summarizes the graph; the graph deadline, when
/// present, yields confidence_at_deadline.
AnalysisReport analyze(const FlowGraph& g, const AnalysisOptions& opts = {});

/// Branch arm probabilities from profile counts: count_k / sum(counts).
/// Throws std::invalid_argument when every count is zero or the list is empty.
std::vector<double> branch_probs_from_profile(std::span<const std::uint64_t> counts);

/// Flat `key=value` text block.
std::string format_report(const AnalysisReport& r);

}  // namespace taskpower
