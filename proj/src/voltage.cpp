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
#include <cmath>
#include <exception>
#include <limits>
#include <set>
#include <stdexcept>
#include <thread>

#include "taskpower/error.hpp"
#include "taskpower/scheduler.hpp"
#include "text_scan.hpp"

namespace taskpower {

std::vector<VoltageLevel> parse_levels(std::string_view text) {
    std::vector<VoltageLevel> levels;
    std::size_t line_no = 0;
    while (!text.empty() || line_no == 0) {
        ++line_no;
        auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

        detail::Lexer lex(line, line_no);
        if (lex.peek().kind == detail::Token::Kind::End) continue;
        auto kw = lex.expect_ident("'level'");
        if (kw.text != "level") lex.fail(kw, "expected 'level', found '" + kw.text + "'");
        VoltageLevel lv;
        auto name = lex.expect_ident("level name");
        lv.name = name.text;
        bool seen_voltage = false;
        while (lex.peek().kind != detail::Token::Kind::End) {
            auto key = lex.expect_ident("'voltage', 'v_scale' or 'f_scale'");
            lex.expect_punct('=');
            double v = lex.expect_number(key.text);
            if (key.text == "voltage") {
                lv.voltage = v;
                seen_voltage = true;
            } else if (key.text == "v_scale") {
                lv.v_scale = v;
            } else if (key.text == "f_scale") {
                lv.f_scale = v;
            } else {
                lex.fail(key, "unknown attribute '" + key.text + "'");
            }
        }
        if (!seen_voltage) lex.fail(name, "level '" + lv.name + "' has no voltage");
        levels.push_back(std::move(lv));
    }
    check_levels(levels);
    return levels;
}

void check_levels(std::span<const VoltageLevel> levels) {
    if (levels.size() < 2) throw InputError("at least two voltage levels are required");
    std::set<std::string> names;
    std::size_t refs = 0;
    for (const auto& lv : levels) {
        if (!names.insert(lv.name).second) throw InputError("duplicate voltage level '" + lv.name + "'");
        if (!(lv.voltage > 0.0)) throw InputError("level '" + lv.name + "': voltage must be positive");
        if (!(lv.v_scale > 0.0 && lv.v_scale <= 1.0) || !(lv.f_scale > 0.0 && lv.f_scale <= 1.0))
            throw InputError("level '" + lv.name + "': v_scale and f_scale must lie in (0, 1]");
        if (lv.is_reference()) ++refs;
    }
    if (refs != 1) throw InputError("exactly one level must have v_scale=1 and f_scale=1");
    const auto& ref = reference_level(levels);
    for (const auto& lv : levels)
        if (&lv != &ref && !(lv.voltage < ref.voltage))
            throw InputError("level '" + lv.name + "' must have a lower voltage than the reference level");
}

const VoltageLevel& reference_level(std::span<const VoltageLevel> levels) {
    for (const auto& lv : levels)
        if (lv.is_reference()) return lv;
    throw InputError("no reference voltage level (v_scale=1, f_scale=1)");
}

TaskNode scale_task(const TaskNode& t, const VoltageLevel& level) {
    if (level.is_reference()) return t;
    if (!t.scalable) throw InputError("task '" + t.id + "' is not scalable");
    TaskNode out = t;
    out.power = scale(t.power, level.v_scale * level.v_scale * level.f_scale);
    out.time = scale(t.time, (1.0 / level.v_scale) * level.f_scale);
    return out;
}

namespace {

const VoltageLevel& level_named(std::span<const VoltageLevel> levels, const std::string& name) {
    for (const auto& lv : levels)
        if (lv.name == name) return lv;
    throw InputError("unknown voltage level '" + name + "'");
}

template <typename TaskFn>
FlowNode rebuild(const FlowNode& n, TaskFn&& task_fn) {
    if (const auto* t = std::get_if<TaskNode>(&n.node)) return task_fn(*t);
    auto all = [&](const std::vector<FlowNode>& cs) {
        std::vector<FlowNode> out;
        out.reserve(cs.size());
        for (const auto& c : cs) out.push_back(rebuild(c, task_fn));
        return out;
    };
    if (const auto* s = std::get_if<Sequence>(&n.node)) return Sequence{all(s->children)};
    if (const auto* a = std::get_if<AndGroup>(&n.node)) return AndGroup{all(a->children)};
    if (const auto* r = std::get_if<Race>(&n.node)) return Race{all(r->children)};
    if (const auto* b = std::get_if<Branch>(&n.node)) return Branch{b->probs, all(b->arms)};
    throw InputError("voltage assignment requires a flattened tree");
}

struct Candidate {
    std::uint64_t index = 0;
    double mean_power = 0.0;
    double mean_time = 0.0;
    bool valid = false;
};

// Ascending-index scans only replace the incumbent on a strict improvement,
// so ties resolve to the lexicographically smallest assignment.
bool better_best(const Candidate& c, const Candidate& inc) {
    if (!inc.valid) return true;
    if (same_value(c.mean_power, inc.mean_power)) return false;
    return c.mean_power < inc.mean_power;
}

bool better_worst(const Candidate& c, const Candidate& inc) {
    if (!inc.valid) return true;
    if (!same_value(c.mean_time, inc.mean_time)) return c.mean_time < inc.mean_time;
    if (same_value(c.mean_power, inc.mean_power)) return false;
    return c.mean_power > inc.mean_power;
}

struct ChunkResult {
    Candidate best;
    Candidate worst;
    std::uint64_t feasible = 0;
    std::exception_ptr error;
};

constexpr std::uint64_t kChunk = 256;

}  // namespace

bool meets_confidence(double cdf, double confidence) { return cdf >= confidence - 1e-9; }

FlowNode apply_assignment(const FlowNode& root, const VoltageAssignment& va, std::span<const VoltageLevel> levels) {
    return rebuild(root, [&](const TaskNode& t) -> FlowNode {
        auto it = va.find(t.id);
        if (it == va.end()) return t;
        return scale_task(t, level_named(levels, it->second));
    });
}

AssignmentResult enumerate_assignments(const FlowNode& root, std::span<const VoltageLevel> levels, double deadline,
                                       double confidence, const AssignmentOptions& opts) {
    check_levels(levels);
    if (!(deadline > 0.0)) throw InputError("deadline must be positive");
    if (!(confidence > 0.0 && confidence <= 1.0)) throw InputError("confidence must lie in (0, 1]");

    std::vector<const VoltageLevel*> order;
    for (const auto& lv : levels) order.push_back(&lv);
    std::sort(order.begin(), order.end(), [](const VoltageLevel* a, const VoltageLevel* b) {
        return a->voltage < b->voltage || (a->voltage == b->voltage && a->name < b->name);
    });
    const VoltageLevel& ref = reference_level(levels);

    std::map<std::string, const TaskNode*> tasks;
    for (const TaskNode* t : collect_tasks(root))
        if (!tasks.emplace(t->id, t).second) throw InputError("duplicate task id '" + t->id + "' in tree");
    std::vector<std::string> scalable;
    for (const auto& [id, t] : tasks)
        if (t->scalable) scalable.push_back(id);
    if (scalable.size() > opts.max_scalable_tasks)
        throw InputError(std::to_string(scalable.size()) + " scalable tasks exceed the enumeration cap of " +
                         std::to_string(opts.max_scalable_tasks));

    const std::uint64_t radix = order.size();
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < scalable.size(); ++i) {
        if (total > std::numeric_limits<std::uint64_t>::max() / radix) throw InputError("assignment space overflows");
        total *= radix;
    }

    // Pre-scaled copies: scaled[task][level position].
    std::map<std::string, std::vector<TaskNode>> scaled;
    for (const auto& id : scalable)
        for (const auto* lv : order) scaled[id].push_back(scale_task(*tasks.at(id), *lv));

    auto digits_of = [&](std::uint64_t index) {
        std::vector<std::size_t> digits(scalable.size());
        for (std::size_t i = scalable.size(); i-- > 0;) {
            digits[i] = static_cast<std::size_t>(index % radix);
            index /= radix;
        }
        return digits;
    };
    auto tree_for = [&](const std::vector<std::size_t>& digits) {
        std::map<std::string, std::size_t> pick;
        for (std::size_t i = 0; i < scalable.size(); ++i) pick[scalable[i]] = digits[i];
        return rebuild(root, [&](const TaskNode& t) -> FlowNode {
            auto it = pick.find(t.id);
            return it == pick.end() ? FlowNode(t) : FlowNode(scaled.at(t.id)[it->second]);
        });
    };
    auto assignment_for = [&](const std::vector<std::size_t>& digits) {
        VoltageAssignment va;
        for (const auto& [id, t] : tasks) va[id] = ref.name;
        for (std::size_t i = 0; i < scalable.size(); ++i) va[scalable[i]] = order[digits[i]]->name;
        return va;
    };

    const std::uint64_t chunks = (total + kChunk - 1) / kChunk;
    std::vector<ChunkResult> results(chunks);
    auto run_chunk = [&](std::uint64_t c) {
        ChunkResult& res = results[c];
        try {
            for (std::uint64_t idx = c * kChunk; idx < std::min(total, (c + 1) * kChunk); ++idx) {
                FlowNode tree = tree_for(digits_of(idx));
                Pmf time = time_pmf(tree, opts.analysis);
                if (!meets_confidence(cdf_at(time, deadline), confidence)) continue;
                ++res.feasible;
                Candidate cand{idx, expectation(power_pmf(tree, opts.analysis)), expectation(time), true};
                if (better_best(cand, res.best)) res.best = cand;
                if (better_worst(cand, res.worst)) res.worst = cand;
            }
        } catch (...) {
            res.error = std::current_exception();
        }
    };

    // Fixed chunking keeps the reduction identical for any worker count.
    std::size_t workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    workers = static_cast<std::size_t>(std::min<std::uint64_t>(workers, chunks));
    if (workers <= 1) {
        for (std::uint64_t c = 0; c < chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::uint64_t c = w; c < chunks; c += workers) run_chunk(c);
            });
        for (auto& th : pool) th.join();
    }

    AssignmentResult out;
    out.assignment_count = total;
    Candidate best, worst;
    for (const auto& r : results) {
        if (r.error) std::rethrow_exception(r.error);
        out.feasible_count += r.feasible;
        if (r.best.valid && better_best(r.best, best)) best = r.best;
        if (r.worst.valid && better_worst(r.worst, worst)) worst = r.worst;
    }
    if (!best.valid)
        throw InfeasibleError("infeasible: no voltage assignment completes within deadline " + format_number(deadline) +
                              " at confidence " + format_number(confidence));

    auto best_digits = digits_of(best.index);
    auto worst_digits = digits_of(worst.index);
    out.best = assignment_for(best_digits);
    out.worst = assignment_for(worst_digits);
    out.best_report = analyze_tree(tree_for(best_digits), deadline, opts.analysis);
    out.worst_report = analyze_tree(tree_for(worst_digits), deadline, opts.analysis);
    out.slowdown_cycles = slowdown_cycles(out.best, out.worst, root, levels);
    out.savings_estimated = out.worst_report.mean_power - out.best_report.mean_power;
    out.savings_theoretical = energy_savings_theoretical(out.slowdown_cycles, ref.voltage, order.front()->voltage);
    return out;
}

AssignmentResult enumerate_assignments(const FlowGraph& g, std::span<const VoltageLevel> levels, double deadline,
                                       double confidence, const AssignmentOptions& opts) {
    return enumerate_assignments(flatten(g), levels, deadline, confidence, opts);
}

std::uint64_t slowdown_cycles(const VoltageAssignment& best, const VoltageAssignment& worst, const FlowNode& root,
                              std::span<const VoltageLevel> levels) {
    auto tasks = collect_tasks(root);
    if (best.size() != tasks.size() || worst.size() != tasks.size())
        throw InputError("slowdown cycles: assignments do not cover the same task set");
    std::uint64_t sn = 0;
    for (const TaskNode* t : tasks) {
        auto b = best.find(t->id);
        auto w = worst.find(t->id);
        if (b == best.end() || w == worst.end())
            throw InputError("slowdown cycles: task '" + t->id + "' missing from an assignment");
        if (level_named(levels, b->second).voltage < level_named(levels, w->second).voltage) sn += t->cycles;
    }
    return sn;
}

double energy_savings_theoretical(std::uint64_t sn, double v_high, double v_low) {
    if (!(v_low > 0.0) || !(v_high > v_low)) throw std::invalid_argument("energy savings: need v_high > v_low > 0");
    return static_cast<double>(sn) * (v_high * v_high - v_low * v_low);
}

std::size_t min_processors(double total_time, double deadline) {
    if (!(total_time > 0.0) || !(deadline > 0.0) || !std::isfinite(total_time) || !std::isfinite(deadline))
        throw std::invalid_argument("min_processors: total time and deadline must be positive");
    double ratio = total_time / deadline;
    auto p = static_cast<std::size_t>(std::ceil(ratio - 1e-9));
    return std::max<std::size_t>(p, 1);
}

namespace {

void assign_lft(const FlowNode& n, double bound, const AnalysisOptions& opts, std::map<std::string, double>& out) {
    if (const auto* t = std::get_if<TaskNode>(&n.node)) {
        out[t->id] = bound;
    } else if (const auto* s = std::get_if<Sequence>(&n.node)) {
        for (std::size_t i = s->children.size(); i-- > 0;) {
            assign_lft(s->children[i], bound, opts, out);
            bound -= expectation(time_pmf(s->children[i], opts));
        }
    } else if (const auto* a = std::get_if<AndGroup>(&n.node)) {
        for (const auto& c : a->children) assign_lft(c, bound, opts, out);
    } else if (const auto* r = std::get_if<Race>(&n.node)) {
        for (const auto& c : r->children) assign_lft(c, bound, opts, out);
    } else if (const auto* b = std::get_if<Branch>(&n.node)) {
        for (const auto& c : b->arms) assign_lft(c, bound, opts, out);
    } else {
        throw InputError("latest finish times require a flattened tree");
    }
}

}  // namespace

std::map<std::string, double> latest_finish_times(const FlowNode& root, double deadline, const AnalysisOptions& opts) {
    if (!(deadline > 0.0)) throw InputError("deadline must be positive");
    std::map<std::string, double> out;
    assign_lft(root, deadline, opts, out);
    return out;
}

std::vector<std::string> edf_order(std::vector<DeadlineEntry> tasks) {
    std::sort(tasks.begin(), tasks.end(), [](const DeadlineEntry& a, const DeadlineEntry& b) {
        return a.deadline < b.deadline || (a.deadline == b.deadline && a.id < b.id);
    });
    std::vector<std::string> out;
    out.reserve(tasks.size());
    for (auto& t : tasks) out.push_back(std::move(t.id));
    return out;
}

std::string format_assignment_report(const AssignmentResult& r) {
    std::string out;
    auto line = [&out](const std::string& key, const std::string& value) { out += key + "=" + value + "\n"; };
    line("assignments", std::to_string(r.assignment_count));
    line("feasible_assignments", std::to_string(r.feasible_count));
    line("slowdown_cycles", std::to_string(r.slowdown_cycles));
    line("savings_estimated", format_number(r.savings_estimated));
    line("savings_theoretical", format_number(r.savings_theoretical));
    for (const auto& [tag, rep] : {std::pair<const char*, const AnalysisReport*>{"best", &r.best_report},
                                   std::pair<const char*, const AnalysisReport*>{"worst", &r.worst_report}}) {
        std::string prefix = tag;
        line(prefix + ".mean_power", format_number(rep->mean_power));
        line(prefix + ".std_power", format_number(rep->std_power));
        line(prefix + ".most_probable_power", format_number(rep->most_probable_power));
        line(prefix + ".mean_time", format_number(rep->mean_time));
        if (rep->confidence_at_deadline)
            line(prefix + ".confidence_at_deadline", format_number(*rep->confidence_at_deadline));
    }
    for (const auto& [id, level] : r.best) {
        auto w = r.worst.find(id);
        out += "assign " + id + " best=" + level + " worst=" + (w == r.worst.end() ? "?" : w->second) + "\n";
    }
    return out;
}

}  // namespace taskpower
