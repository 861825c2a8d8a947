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
#include "taskpower/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "taskpower/error.hpp"

namespace taskpower::oracle {

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

std::uint64_t mul_sat(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > kSaturated / a) return kSaturated;
    return a * b;
}

std::uint64_t add_sat(std::uint64_t a, std::uint64_t b) { return b > kSaturated - a ? kSaturated : a + b; }

// Realized outcomes keyed by exact (time, power); merging is lossless.
using Outcomes = std::map<std::pair<double, double>, double>;

double mean_time(const Outcomes& o) {
    double m = 0.0;
    for (const auto& [key, prob] : o) m += prob * key.first;
    return m;
}

Outcomes walk(const FlowNode& n);

template <typename Combine>
Outcomes cross(const std::vector<Outcomes>& parts, Combine&& combine) {
    // Odometer over every combination of child outcomes.
    std::vector<std::vector<std::pair<std::pair<double, double>, double>>> lists;
    for (const auto& p : parts) lists.emplace_back(p.begin(), p.end());
    Outcomes out;
    std::vector<std::size_t> idx(lists.size(), 0);
    std::vector<std::pair<double, double>> realized(lists.size());
    for (;;) {
        double prob = 1.0;
        for (std::size_t i = 0; i < lists.size(); ++i) {
            realized[i] = lists[i][idx[i]].first;
            prob *= lists[i][idx[i]].second;
        }
        combine(realized, prob, out);
        std::size_t pos = lists.size();
        while (pos > 0) {
            --pos;
            if (++idx[pos] < lists[pos].size()) break;
            idx[pos] = 0;
            if (pos == 0) return out;
        }
        if (lists.empty()) return out;
    }
}

Outcomes walk(const FlowNode& n) {
    if (const auto* t = std::get_if<TaskNode>(&n.node)) {
        Outcomes out;
        for (const auto& tp : t->time.points())
            for (const auto& pp : t->power.points()) out[{tp.value, pp.value}] += tp.prob * pp.prob;
        return out;
    }
    if (const auto* b = std::get_if<Branch>(&n.node)) {
        Outcomes out;
        for (std::size_t i = 0; i < b->arms.size(); ++i) {
            if (b->probs[i] == 0.0) continue;
            for (const auto& [key, prob] : walk(b->arms[i])) out[key] += b->probs[i] * prob;
        }
        return out;
    }

    const std::vector<FlowNode>* children = nullptr;
    if (const auto* s = std::get_if<Sequence>(&n.node)) children = &s->children;
    else if (const auto* a = std::get_if<AndGroup>(&n.node)) children = &a->children;
    else if (const auto* r = std::get_if<Race>(&n.node)) children = &r->children;
    else throw InputError("oracle requires a flattened tree");

    std::vector<Outcomes> parts;
    for (const auto& c : *children) parts.push_back(walk(c));

    if (n.is<Sequence>()) {
        std::vector<double> w;
        double total = 0.0;
        for (const auto& p : parts) {
            w.push_back(mean_time(p));
            total += w.back();
        }
        if (!(total > 0.0)) throw InputError("sequence has zero total expected duration");
        for (double& x : w) x /= total;
        return cross(parts, [&w](const auto& r, double prob, Outcomes& out) {
            double t = 0.0, p = 0.0;
            for (std::size_t i = 0; i < r.size(); ++i) {
                t += r[i].first;
                p += w[i] * r[i].second;
            }
            out[{t, p}] += prob;
        });
    }
    if (n.is<AndGroup>()) {
        return cross(parts, [](const auto& r, double prob, Outcomes& out) {
            double t = 0.0, p = 0.0;
            for (const auto& x : r) {
                t = std::max(t, x.first);
                p += x.second;
            }
            out[{t, p}] += prob;
        });
    }
    return cross(parts, [](const auto& r, double prob, Outcomes& out) {
        double t = r.front().first;
        for (const auto& x : r) t = std::min(t, x.first);
        std::vector<double> winners;
        for (const auto& x : r)
            if (same_value(x.first, t)) winners.push_back(x.second);
        for (double p : winners) out[{t, p}] += prob / static_cast<double>(winners.size());
    });
}

}  // namespace

std::uint64_t outcome_count(const FlowNode& n) {
    if (const auto* t = std::get_if<TaskNode>(&n.node)) return mul_sat(t->time.size(), t->power.size());
    if (const auto* b = std::get_if<Branch>(&n.node)) {
        std::uint64_t sum = 0;
        for (const auto& a : b->arms) sum = add_sat(sum, outcome_count(a));
        return sum;
    }
    const std::vector<FlowNode>* children = nullptr;
    if (const auto* s = std::get_if<Sequence>(&n.node)) children = &s->children;
    else if (const auto* a = std::get_if<AndGroup>(&n.node)) children = &a->children;
    else if (const auto* r = std::get_if<Race>(&n.node)) children = &r->children;
    else throw InputError("oracle requires a flattened tree");
    std::uint64_t prod = 1;
    for (const auto& c : *children) prod = mul_sat(prod, outcome_count(c));
    return prod;
}

ExactResult enumerate_exact(const FlowNode& root, std::uint64_t cap) {
    std::uint64_t count = outcome_count(root);
    if (count > cap)
        throw InputError("exact enumeration needs " + std::to_string(count) + " outcomes, cap is " + std::to_string(cap));
    Outcomes o = walk(root);
    std::vector<PmfPoint> times, powers;
    for (const auto& [key, prob] : o) {
        times.push_back({key.first, prob});
        powers.push_back({key.second, prob});
    }
    return {Pmf::make(std::move(times), Unit::Cycles), Pmf::make(std::move(powers), Unit::Microwatts)};
}

// ---------------------------------------------------------------------------
// Brute-force voltage assignment.

namespace {

Pmf scaled_values(const Pmf& p, double factor) {
    std::vector<PmfPoint> pts;
    for (const auto& pt : p.points()) pts.push_back({pt.value * factor, pt.prob});
    return Pmf::make(std::move(pts), p.unit());
}

FlowNode with_levels(const FlowNode& n, const std::map<std::string, const VoltageLevel*>& pick) {
    if (const auto* t = std::get_if<TaskNode>(&n.node)) {
        auto it = pick.find(t->id);
        if (it == pick.end()) return *t;
        const VoltageLevel& lv = *it->second;
        TaskNode s = *t;
        s.power = scaled_values(t->power, lv.v_scale * lv.v_scale * lv.f_scale);
        s.time = scaled_values(t->time, lv.f_scale / lv.v_scale);
        return s;
    }
    auto each = [&](const std::vector<FlowNode>& cs) {
        std::vector<FlowNode> out;
        for (const auto& c : cs) out.push_back(with_levels(c, pick));
        return out;
    };
    if (const auto* s = std::get_if<Sequence>(&n.node)) return Sequence{each(s->children)};
    if (const auto* a = std::get_if<AndGroup>(&n.node)) return AndGroup{each(a->children)};
    if (const auto* r = std::get_if<Race>(&n.node)) return Race{each(r->children)};
    if (const auto* b = std::get_if<Branch>(&n.node)) return Branch{b->probs, each(b->arms)};
    throw InputError("oracle requires a flattened tree");
}

bool close(double a, double b) { return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)}); }

AnalysisReport report_from(const ExactResult& r, double deadline) {
    AnalysisReport rep;
    rep.time = r.time;
    rep.power = r.power;
    rep.mean_time = expectation(r.time);
    rep.mean_power = expectation(r.power);
    rep.std_power = std_dev(r.power);
    rep.most_probable_power = most_probable(r.power);
    rep.deadline = deadline;
    rep.confidence_at_deadline = cdf_at(r.time, deadline);
    return rep;
}

}  // namespace

AssignmentResult brute_force_voltage(const FlowNode& root, std::span<const VoltageLevel> levels, double deadline,
                                     double confidence) {
    check_levels(levels);
    if (!(deadline > 0.0)) throw InputError("deadline must be positive");
    std::vector<const VoltageLevel*> sorted;
    for (const auto& lv : levels) sorted.push_back(&lv);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) {
        return a->voltage < b->voltage || (a->voltage == b->voltage && a->name < b->name);
    });
    const VoltageLevel* high = nullptr;
    for (auto* lv : sorted)
        if (lv->v_scale == 1.0 && lv->f_scale == 1.0) high = lv;

    std::vector<const TaskNode*> all = collect_tasks(root);
    std::sort(all.begin(), all.end(), [](auto* a, auto* b) { return a->id < b->id; });
    std::vector<std::string> ids;
    for (auto* t : all)
        if (t->scalable) ids.push_back(t->id);
    if (ids.size() > 16) throw InputError("brute force voltage search is limited to 16 scalable tasks");

    struct Seen {
        std::vector<std::size_t> digits;
        double power;
        double time;
    };
    std::optional<Seen> best, worst;
    std::uint64_t feasible = 0, total = 0;

    std::vector<std::size_t> digits(ids.size(), 0);
    for (bool more = true; more;) {
        ++total;
        std::map<std::string, const VoltageLevel*> pick;
        for (std::size_t i = 0; i < ids.size(); ++i) pick[ids[i]] = sorted[digits[i]];
        ExactResult r = enumerate_exact(with_levels(root, pick));
        if (cdf_at(r.time, deadline) >= confidence - 1e-9) {
            ++feasible;
            Seen s{digits, expectation(r.power), expectation(r.time)};
            if (!best || (!close(s.power, best->power) && s.power < best->power)) best = s;
            if (!worst || (!close(s.time, worst->time) && s.time < worst->time) ||
                (close(s.time, worst->time) && !close(s.power, worst->power) && s.power > worst->power))
                worst = s;
        }
        // Last task varies fastest: lexicographic order over (task id, voltage).
        more = false;
        for (std::size_t i = ids.size(); i-- > 0;) {
            if (++digits[i] < sorted.size()) {
                more = true;
                break;
            }
            digits[i] = 0;
        }
    }
    if (!best) throw InfeasibleError("infeasible: no voltage assignment meets the deadline");

    auto to_assignment = [&](const std::vector<std::size_t>& d) {
        VoltageAssignment va;
        for (auto* t : all) va[t->id] = high->name;
        for (std::size_t i = 0; i < ids.size(); ++i) va[ids[i]] = sorted[d[i]]->name;
        return va;
    };
    auto pick_of = [&](const std::vector<std::size_t>& d) {
        std::map<std::string, const VoltageLevel*> pick;
        for (std::size_t i = 0; i < ids.size(); ++i) pick[ids[i]] = sorted[d[i]];
        return pick;
    };

    AssignmentResult out;
    out.assignment_count = total;
    out.feasible_count = feasible;
    out.best = to_assignment(best->digits);
    out.worst = to_assignment(worst->digits);
    out.best_report = report_from(enumerate_exact(with_levels(root, pick_of(best->digits))), deadline);
    out.worst_report = report_from(enumerate_exact(with_levels(root, pick_of(worst->digits))), deadline);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const TaskNode* t = *std::find_if(all.begin(), all.end(), [&](auto* x) { return x->id == ids[i]; });
        if (sorted[best->digits[i]]->voltage < sorted[worst->digits[i]]->voltage) out.slowdown_cycles += t->cycles;
    }
    out.savings_estimated = out.worst_report.mean_power - out.best_report.mean_power;
    double vh = high->voltage, vl = sorted.front()->voltage;
    out.savings_theoretical = static_cast<double>(out.slowdown_cycles) * (vh * vh - vl * vl);
    return out;
}

AssignmentResult brute_force_voltage(const FlowGraph& g, std::span<const VoltageLevel> levels, double deadline,
                                     double confidence) {
    return brute_force_voltage(flatten(g), levels, deadline, confidence);
}

// ---------------------------------------------------------------------------
// Brute-force processor count.

namespace {

struct Dag {
    std::vector<double> time;
    std::vector<std::vector<std::size_t>> preds;
};

// Returns (entries, exits) of the subtree.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> build_dag(const FlowNode& n, Dag& dag) {
    if (const auto* t = std::get_if<TaskNode>(&n.node)) {
        if (t->time.size() != 1) throw InputError("brute force scheduling needs point-mass task times");
        dag.time.push_back(t->time.min_value());
        dag.preds.emplace_back();
        std::size_t v = dag.time.size() - 1;
        return {{v}, {v}};
    }
    if (const auto* a = std::get_if<AndGroup>(&n.node)) {
        std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
        for (const auto& c : a->children) {
            auto [en, ex] = build_dag(c, dag);
            out.first.insert(out.first.end(), en.begin(), en.end());
            out.second.insert(out.second.end(), ex.begin(), ex.end());
        }
        return out;
    }
    if (const auto* s = std::get_if<Sequence>(&n.node)) {
        std::vector<std::size_t> entries, exits;
        for (std::size_t i = 0; i < s->children.size(); ++i) {
            auto [en, ex] = build_dag(s->children[i], dag);
            if (i == 0) entries = en;
            for (auto v : en)
                for (auto u : exits) dag.preds[v].push_back(u);
            exits = ex;
        }
        return {entries, exits};
    }
    throw InputError("brute force scheduling supports task, seq and and nodes only");
}

}  // namespace

std::size_t brute_force_min_processors(const FlowNode& root, double deadline, std::size_t max_processors) {
    Dag dag;
    build_dag(root, dag);
    const std::size_t n = dag.time.size();
    for (std::size_t p = 1; p <= max_processors; ++p) {
        std::uint64_t space = 1;
        for (std::size_t i = 0; i < n; ++i) {
            space = mul_sat(space, p);
            if (space > 10'000'000) throw InputError("brute force scheduling space too large");
        }
        std::vector<std::size_t> lane(n, 0);
        for (std::uint64_t k = 0; k < space; ++k) {
            std::uint64_t code = k;
            for (std::size_t i = 0; i < n; ++i) {
                lane[i] = static_cast<std::size_t>(code % p);
                code /= p;
            }
            std::vector<double> avail(p, 0.0), finish(n, 0.0);
            double makespan = 0.0;
            for (std::size_t v = 0; v < n; ++v) {  // creation order is topological
                double start = avail[lane[v]];
                for (auto u : dag.preds[v]) start = std::max(start, finish[u]);
                finish[v] = start + dag.time[v];
                avail[lane[v]] = finish[v];
                makespan = std::max(makespan, finish[v]);
            }
            if (makespan <= deadline || close(makespan, deadline)) return p;
        }
    }
    throw InfeasibleError("no mapping onto " + std::to_string(max_processors) + " processors meets the deadline");
}

}  // namespace taskpower::oracle
