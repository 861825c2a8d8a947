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
#include <algorithm>
#include <limits>
#include <set>

#include "taskpower/error.hpp"
#include "taskpower/scheduler.hpp"

namespace taskpower {

namespace {

struct Frontier {
    std::vector<std::size_t> entries;
    std::vector<std::size_t> exits;
};

std::string first_task_id(const FlowNode& n) {
    auto tasks = collect_tasks(n);
    return tasks.empty() ? std::string("?") : tasks.front()->id;
}

class UnitBuilder {
  public:
    explicit UnitBuilder(const AnalysisOptions& opts) : opts_(opts) {}

    Frontier build(const FlowNode& n) {
        if (const auto* t = std::get_if<TaskNode>(&n.node)) return leaf(t->id, n);
        if (n.is<Branch>()) return leaf("branch:" + first_task_id(n), n);
        if (n.is<Race>()) return leaf("race:" + first_task_id(n), n);
        if (const auto* a = std::get_if<AndGroup>(&n.node)) {
            Frontier out;
            for (const auto& c : a->children) {
                Frontier f = build(c);
                out.entries.insert(out.entries.end(), f.entries.begin(), f.entries.end());
                out.exits.insert(out.exits.end(), f.exits.begin(), f.exits.end());
            }
            return out;
        }
        if (const auto* s = std::get_if<Sequence>(&n.node)) {
            Frontier out;
            std::vector<std::size_t> prev_exits;
            for (std::size_t i = 0; i < s->children.size(); ++i) {
                Frontier f = build(s->children[i]);
                if (i == 0) out.entries = f.entries;
                for (auto e : f.entries)
                    for (auto x : prev_exits) units_[e].preds.push_back(x);
                prev_exits = f.exits;
            }
            out.exits = prev_exits;
            return out;
        }
        throw InputError("multiprocessor scheduling requires a flattened tree");
    }

    std::vector<ScheduleUnit> take() {
        for (auto& u : units_) {
            std::sort(u.preds.begin(), u.preds.end());
            u.preds.erase(std::unique(u.preds.begin(), u.preds.end()), u.preds.end());
        }
        return std::move(units_);
    }

  private:
    Frontier leaf(std::string id, const FlowNode& n) {
        ScheduleUnit u;
        u.id = std::move(id);
        u.body = n;
        u.time = time_pmf(n, opts_);
        u.expected_time = expectation(u.time);
        units_.push_back(std::move(u));
        std::size_t idx = units_.size() - 1;
        return {{idx}, {idx}};
    }

    const AnalysisOptions& opts_;
    std::vector<ScheduleUnit> units_;
};

// Units are created in topological order, so a reverse index scan suffices.
std::vector<double> unit_lft(const std::vector<ScheduleUnit>& units, double deadline) {
    std::vector<std::vector<std::size_t>> succs(units.size());
    for (std::size_t v = 0; v < units.size(); ++v)
        for (auto u : units[v].preds) succs[u].push_back(v);
    std::vector<double> lft(units.size(), deadline);
    for (std::size_t u = units.size(); u-- > 0;)
        for (auto s : succs[u]) lft[u] = std::min(lft[u], lft[s] - units[s].expected_time);
    return lft;
}

void check_topological(const std::vector<ScheduleUnit>& units) {
    for (std::size_t v = 0; v < units.size(); ++v)
        for (auto u : units[v].preds)
            if (u >= v) throw InputError("schedule units have cyclic or out-of-order dependencies");
}

}  // namespace

std::vector<ScheduleUnit> build_units(const FlowNode& root, const AnalysisOptions& opts) {
    UnitBuilder b(opts);
    b.build(root);
    return b.take();
}

std::vector<std::vector<LaneSlot>> list_schedule(const std::vector<ScheduleUnit>& units, std::size_t processors,
                                                 double deadline) {
    if (processors == 0) throw InputError("processor count must be positive");
    check_topological(units);
    auto lft = unit_lft(units, deadline);

    std::vector<std::vector<LaneSlot>> lanes(processors);
    std::vector<double> avail(processors, 0.0);
    std::vector<double> finish(units.size(), 0.0);
    std::vector<bool> done(units.size(), false);

    for (std::size_t placed = 0; placed < units.size(); ++placed) {
        std::size_t pick = units.size();
        for (std::size_t v = 0; v < units.size(); ++v) {
            if (done[v]) continue;
            bool ready = std::all_of(units[v].preds.begin(), units[v].preds.end(), [&](auto u) { return done[u]; });
            if (!ready) continue;
            if (pick == units.size() || lft[v] < lft[pick] || (lft[v] == lft[pick] && units[v].id < units[pick].id))
                pick = v;
        }
        double ready_at = 0.0;
        for (auto u : units[pick].preds) ready_at = std::max(ready_at, finish[u]);
        std::size_t lane = 0;
        double start = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < processors; ++p) {
            double s = std::max(ready_at, avail[p]);
            if (s < start) {
                start = s;
                lane = p;
            }
        }
        finish[pick] = start + units[pick].expected_time;
        avail[lane] = finish[pick];
        done[pick] = true;
        lanes[lane].push_back({units[pick].id, start, finish[pick]});
    }
    return lanes;
}

Pmf lane_makespan(const std::vector<ScheduleUnit>& units, const std::vector<std::vector<LaneSlot>>& lanes,
                  const AnalysisOptions& opts) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < units.size(); ++i) index[units[i].id] = i;

    // Combined dependency graph: precedence plus lane order.
    std::vector<std::vector<std::size_t>> preds(units.size());
    for (std::size_t v = 0; v < units.size(); ++v) preds[v] = units[v].preds;
    std::vector<bool> has_succ(units.size(), false);
    for (const auto& lane : lanes)
        for (std::size_t i = 1; i < lane.size(); ++i) preds[index.at(lane[i].unit)].push_back(index.at(lane[i - 1].unit));
    for (const auto& ps : preds)
        for (auto u : ps) has_succ[u] = true;

    // Kahn's algorithm, smallest index first.
    std::vector<std::size_t> indegree(units.size(), 0);
    std::vector<std::vector<std::size_t>> succs(units.size());
    for (std::size_t v = 0; v < units.size(); ++v)
        for (auto u : preds[v]) {
            succs[u].push_back(v);
            ++indegree[v];
        }
    std::set<std::size_t> ready;
    for (std::size_t v = 0; v < units.size(); ++v)
        if (indegree[v] == 0) ready.insert(v);

    std::vector<std::optional<Pmf>> finish(units.size());
    std::size_t processed = 0;
    while (!ready.empty()) {
        std::size_t v = *ready.begin();
        ready.erase(ready.begin());
        ++processed;
        std::optional<Pmf> start;
        for (auto u : preds[v]) start = start ? rebin(max_pmf(*start, *finish[u]), opts.support_cap) : *finish[u];
        finish[v] = start ? convolve_sum(*start, units[v].time, opts.support_cap) : units[v].time;
        for (auto s : succs[v])
            if (--indegree[s] == 0) ready.insert(s);
    }
    if (processed != units.size()) throw InputError("lane order conflicts with precedence constraints");

    std::optional<Pmf> makespan;
    for (std::size_t v = 0; v < units.size(); ++v) {
        if (has_succ[v]) continue;
        makespan = makespan ? rebin(max_pmf(*makespan, *finish[v]), opts.support_cap) : *finish[v];
    }
    return makespan ? *makespan : Pmf::delta(0.0, Unit::Cycles);
}

MultiprocSchedule multiproc_schedule(const FlowGraph& g, std::span<const VoltageLevel> levels, double deadline,
                                     double confidence, const MultiprocOptions& opts) {
    check_levels(levels);
    if (!(deadline > 0.0)) throw InputError("deadline must be positive");
    if (!(confidence > 0.0 && confidence <= 1.0)) throw InputError("confidence must lie in (0, 1]");
    if (opts.max_processors == 0) throw InputError("max processors must be positive");

    const auto& aopts = opts.assignment.analysis;
    FlowNode root = flatten(g);
    auto units = build_units(root, aopts);
    double total = 0.0;
    for (const auto& u : units) total += u.expected_time;

    MultiprocSchedule out;
    out.deadline = deadline;
    out.first_tried = total > 0.0 ? min_processors(total, deadline) : 1;
    if (out.first_tried > opts.max_processors)
        throw InfeasibleError("infeasible: at least " + std::to_string(out.first_tried) +
                              " processors needed, maximum is " + std::to_string(opts.max_processors));

    bool found = false;
    for (std::size_t p = out.first_tried; p <= opts.max_processors; ++p) {
        auto lanes = list_schedule(units, p, deadline);
        Pmf makespan = lane_makespan(units, lanes, aopts);
        double conf = cdf_at(makespan, deadline);
        if (meets_confidence(conf, confidence)) {
            out.processor_count = p;
            out.lanes = std::move(lanes);
            out.makespan = std::move(makespan);
            out.confidence = conf;
            found = true;
            break;
        }
    }
    if (!found)
        throw InfeasibleError("infeasible: no schedule on up to " + std::to_string(opts.max_processors) +
                              " processors meets deadline " + format_number(deadline) + " at confidence " +
                              format_number(confidence));

    std::map<std::string, const ScheduleUnit*> by_id;
    for (const auto& u : units) by_id[u.id] = &u;
    for (const auto& lane : out.lanes) {
        if (lane.empty()) {
            out.lane_assignment.emplace_back();
            out.lane_results.emplace_back();
            out.per_lane_power.push_back(Pmf::delta(0.0, Unit::Microwatts));
            continue;
        }
        Sequence seq;
        for (const auto& slot : lane) seq.children.push_back(by_id.at(slot.unit)->body);
        FlowNode lane_tree = seq.children.size() == 1 ? seq.children.front() : FlowNode(std::move(seq));
        AssignmentResult r = enumerate_assignments(lane_tree, levels, deadline, confidence, opts.assignment);
        out.lane_assignment.push_back(r.best);
        out.per_lane_power.push_back(r.best_report.power);
        out.lane_results.push_back(std::move(r));
    }
    return out;
}

std::string format_multiproc_report(const MultiprocSchedule& s) {
    std::string out;
    auto line = [&out](const std::string& key, const std::string& value) { out += key + "=" + value + "\n"; };
    line("processors", std::to_string(s.processor_count));
    line("first_tried", std::to_string(s.first_tried));
    line("deadline", format_number(s.deadline));
    line("makespan_mean", format_number(expectation(s.makespan)));
    line("confidence", format_number(s.confidence));
    double total_power = 0.0;
    for (std::size_t i = 0; i < s.lanes.size(); ++i) {
        std::string lane = "lane" + std::to_string(i);
        double mean = expectation(s.per_lane_power[i]);
        total_power += mean;
        line(lane + ".mean_power", format_number(mean));
        if (!s.lanes[i].empty()) {
            const auto& r = s.lane_results[i];
            line(lane + ".slowdown_cycles", std::to_string(r.slowdown_cycles));
            line(lane + ".savings_estimated", format_number(r.savings_estimated));
            line(lane + ".savings_theoretical", format_number(r.savings_theoretical));
        }
        for (const auto& slot : s.lanes[i])
            out += lane + " " + slot.unit + " start=" + format_number(slot.start) +
                   " finish=" + format_number(slot.finish) + "\n";
        for (const auto& [task, level] : s.lane_assignment[i]) out += lane + " assign " + task + "=" + level + "\n";
    }
    line("total_mean_power", format_number(total_power));
    return out;
}

}  // namespace taskpower
