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

// Voltage selection and time-constrained multiprocessor scheduling.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taskpower/analysis.hpp"
#include "taskpower/flowgraph.hpp"
#include "taskpower/pmf.hpp"

namespace taskpower {

struct VoltageLevel {
    std::string name;
    double voltage = 0.0;  // volts
    double v_scale = 1.0;  // in (0, 1]
    double f_scale = 1.0;  // in (0, 1]

    bool is_reference() const { return v_scale == 1.0 && f_scale == 1.0; }
};

/// Parses `level <name> voltage=<V> v_scale=<s> f_scale=<s>` lines. Requires
/// at least two levels, exactly one of which is the reference (1, 1) level.
std::vector<VoltageLevel> parse_levels(std::string_view text);

/// Checks the same constraints as parse_levels; throws InputError.
void check_levels(std::span<const VoltageLevel> levels);

const VoltageLevel& reference_level(std::span<const VoltageLevel> levels);

/// Task id -> level name, covering every task of the tree.
using VoltageAssignment = std::map<std::string, std::string>;

/// Energy values scale by v_scale^2 * f_scale and delays by f_scale / v_scale.
/// Throws InputError when a non-scalable task is moved off the reference level.
TaskNode scale_task(const TaskNode& t, const VoltageLevel& level);

/// The tree with every task scaled by its assigned level (missing ids stay at
/// the reference level).
FlowNode apply_assignment(const FlowNode& root, const VoltageAssignment& va,
                          std::span<const VoltageLevel> levels);

struct AssignmentOptions {
    std::size_t max_scalable_tasks = 24;
    AnalysisOptions analysis;
};

struct AssignmentResult {
    VoltageAssignment best;
    VoltageAssignment worst;
    AnalysisReport best_report;
    AnalysisReport worst_report;
    std::uint64_t slowdown_cycles = 0;
    double savings_estimated = 0.0;    // worst mean power - best mean power
    double savings_theoretical = 0.0;  // SN * (V_h^2 - V_l^2)
    std::uint64_t feasible_count = 0;
    std::uint64_t assignment_count = 0;
};

/// Feasibility test shared by every assignment search: P(T <= deadline) is
/// at least `confidence`, allowing 1e-9 of rounding slack.
bool meets_confidence(double cdf, double confidence);

/// Exhaustive voltage assignment over the scalable tasks of an already
/// flattened tree.
///
/// best:  feasible assignment with the lowest mean power.
/// worst: feasible assignment with the lowest mean completion time; among
///        equal times the highest mean power.
/// Remaining ties (relative 1e-9) go to the lexicographically smallest
/// assignment, ordering tasks by id and levels by ascending voltage.
///
/// Throws InfeasibleError when nothing meets the deadline and InputError
/// when the scalable task count exceeds opts.max_scalable_tasks.
AssignmentResult enumerate_assignments(const FlowNode& root, std::span<const VoltageLevel> levels, double deadline,
                                       double confidence = 1.0, const AssignmentOptions& opts = {});

/// Flattens `g` and runs the search above.
AssignmentResult enumerate_assignments(const FlowGraph& g, std::span<const VoltageLevel> levels, double deadline,
                                       double confidence = 1.0, const AssignmentOptions& opts = {});

/// Sum of nominal cycles over tasks whose level in `best` has a lower voltage
/// than their level in `worst`. Throws InputError on mismatched task sets.
std::uint64_t slowdown_cycles(const VoltageAssignment& best, const VoltageAssignment& worst, const FlowNode& root,
                              std::span<const VoltageLevel> levels);

/// SN * (v_high^2 - v_low^2). Throws std::invalid_argument unless v_high > v_low > 0.
double energy_savings_theoretical(std::uint64_t sn, double v_high, double v_low);

/// ceil(total_time / deadline), at least 1.
std::size_t min_processors(double total_time, double deadline);

/// Latest finish time per task: exit tasks get the deadline, earlier tasks the
/// deadline minus the expected time of everything after them.
std::map<std::string, double> latest_finish_times(const FlowNode& root, double deadline,
                                                  const AnalysisOptions& opts = {});

struct DeadlineEntry {
    std::string id;
    double deadline;
};

/// Ascending deadline, ties by id.
std::vector<std::string> edf_order(std::vector<DeadlineEntry> tasks);

// Multiprocessor scheduling.

/// Unit of multiprocessor scheduling: a task, or a whole branch or race
/// construct kept on one processor.
struct ScheduleUnit {
    std::string id;  // task id, or "branch:<first task>" / "race:<first task>"
    FlowNode body;
    Pmf time = Pmf::delta(0.0, Unit::Cycles);
    double expected_time = 0.0;
    std::vector<std::size_t> preds;
};

/// Precedence DAG of scheduling units: sequence order becomes edges from every
/// exit of a child to every entry of the next; AND children are independent.
std::vector<ScheduleUnit> build_units(const FlowNode& root, const AnalysisOptions& opts = {});

struct LaneSlot {
    std::string unit;
    double start = 0.0;   // nominal, from expected times
    double finish = 0.0;
};

/// Priority list scheduling: repeatedly takes the ready unit with the smallest
/// (latest finish time, id) and places it on the processor where it can start
/// earliest, lowest index on ties.
std::vector<std::vector<LaneSlot>> list_schedule(const std::vector<ScheduleUnit>& units, std::size_t processors,
                                                 double deadline);

/// Makespan law of a lane structure: each unit finishes at the max of its
/// predecessors' (precedence and lane order) finish times plus its own time,
/// assuming independence.
Pmf lane_makespan(const std::vector<ScheduleUnit>& units, const std::vector<std::vector<LaneSlot>>& lanes,
                  const AnalysisOptions& opts = {});

struct MultiprocSchedule {
    std::size_t processor_count = 0;
    std::size_t first_tried = 0;
    std::vector<std::vector<LaneSlot>> lanes;
    std::vector<VoltageAssignment> lane_assignment;
    std::vector<AssignmentResult> lane_results;  // empty lanes carry a default result
    std::vector<Pmf> per_lane_power;
    Pmf makespan = Pmf::delta(0.0, Unit::Cycles);
    double confidence = 0.0;
    double deadline = 0.0;
};

struct MultiprocOptions {
    std::size_t max_processors = 8;
    AssignmentOptions assignment;
};

/// Starts at min_processors(sum of expected unit times, deadline) and adds
/// processors until the makespan meets the deadline at `confidence`; then
/// picks a voltage assignment per lane against the overall deadline.
/// Throws InfeasibleError when max_processors is not enough.
MultiprocSchedule multiproc_schedule(const FlowGraph& g, std::span<const VoltageLevel> levels, double deadline,
                                     double confidence, const MultiprocOptions& opts = {});

std::string format_assignment_report(const AssignmentResult& r);
std::string format_multiproc_report(const MultiprocSchedule& s);

}  // namespace taskpower
