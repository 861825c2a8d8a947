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
#include "taskpower/flowgraph.hpp"

#include <cmath>
#include <set>

#include "taskpower/error.hpp"

namespace taskpower {

namespace {

std::string_view kind_name(const FlowNode& n) {
    return std::visit(
        [](const auto& alt) -> std::string_view {
            using T = std::decay_t<decltype(alt)>;
            if constexpr (std::is_same_v<T, TaskNode>) return "task";
            else if constexpr (std::is_same_v<T, Sequence>) return "seq";
            else if constexpr (std::is_same_v<T, AndGroup>) return "and";
            else if constexpr (std::is_same_v<T, Branch>) return "branch";
            else if constexpr (std::is_same_v<T, Race>) return "race";
            else return "sub";
        },
        n.node);
}

std::string child_path(const std::string& parent, const FlowNode& child, std::size_t index) {
    std::string seg(kind_name(child));
    if (child.is<TaskNode>()) seg += " " + child.as<TaskNode>().id;
    return parent + "/" + seg + "[" + std::to_string(index) + "]";
}

class Validator {
  public:
    explicit Validator(const FlowGraph& g) : g_(g) {}

    std::vector<Diagnostic> run() {
        if (!g_.flows.contains(g_.entry)) add("", "entry flow '" + g_.entry + "' not defined");
        if (g_.deadline && !(*g_.deadline > 0.0 && std::isfinite(*g_.deadline)))
            add("", "deadline must be positive, got " + format_number(*g_.deadline));
        if (g_.confidence && !(*g_.confidence > 0.0 && *g_.confidence <= 1.0))
            add("", "confidence must lie in (0, 1], got " + format_number(*g_.confidence));

        for (const auto& [name, root] : g_.flows) {
            task_ids_.clear();
            check(root, name + "/" + std::string(kind_name(root)), name);
        }
        check_recursion();
        return std::move(diags_);
    }

  private:
    void add(std::string path, std::string msg) { diags_.push_back({std::move(path), std::move(msg)}); }

    void check_children(const std::vector<FlowNode>& children, const std::string& path, std::string_view kind,
                        const std::string& flow) {
        if (children.empty()) add(path, std::string(kind) + " has no children");
        for (std::size_t i = 0; i < children.size(); ++i)
            check(children[i], child_path(path, children[i], i), flow);
    }

    void check(const FlowNode& n, const std::string& path, const std::string& flow) {
        if (const auto* t = std::get_if<TaskNode>(&n.node)) {
            if (t->id.empty()) add(path, "task has an empty id");
            if (!task_ids_.insert(t->id).second) add(path, "duplicate task id '" + t->id + "' in flow '" + flow + "'");
            if (t->time.unit() != Unit::Cycles) add(path, "task time must be in cycles");
            if (t->power.unit() != Unit::Microwatts) add(path, "task power must be in microwatts");
        } else if (const auto* s = std::get_if<Sequence>(&n.node)) {
            check_children(s->children, path, "seq", flow);
        } else if (const auto* a = std::get_if<AndGroup>(&n.node)) {
            check_children(a->children, path, "and", flow);
        } else if (const auto* r = std::get_if<Race>(&n.node)) {
            check_children(r->children, path, "race", flow);
        } else if (const auto* b = std::get_if<Branch>(&n.node)) {
            if (b->arms.empty()) add(path, "branch has no arms");
            if (b->probs.size() != b->arms.size()) {
                add(path, "branch has " + std::to_string(b->arms.size()) + " arms but " +
                              std::to_string(b->probs.size()) + " probabilities");
            } else {
                double sum = 0.0;
                bool negative = false;
                for (double p : b->probs) {
                    if (!(p >= 0.0) || !std::isfinite(p)) negative = true;
                    sum += p;
                }
                if (negative) add(path, "branch probability must be finite and nonnegative");
                else if (!b->arms.empty() && std::fabs(sum - 1.0) > 1e-9)
                    add(path, "branch probabilities sum to " + format_probability(sum));
            }
            for (std::size_t i = 0; i < b->arms.size(); ++i) check(b->arms[i], child_path(path, b->arms[i], i), flow);
        } else {
            const auto& ref = n.as<SubflowRef>();
            if (!g_.flows.contains(ref.flow)) add(path, "unresolved subflow '" + ref.flow + "'");
            else refs_[flow].insert(ref.flow);
        }
    }

    void check_recursion() {
        std::map<std::string, int> color;  // 0 white, 1 on stack, 2 done
        for (const auto& [name, _] : g_.flows) visit(name, color);
    }

    void visit(const std::string& flow, std::map<std::string, int>& color) {
        if (color[flow] != 0) return;
        color[flow] = 1;
        for (const auto& target : refs_[flow]) {
            if (color[target] == 1) add(flow, "recursive subflow '" + target + "'");
            else visit(target, color);
        }
        color[flow] = 2;
    }

    const FlowGraph& g_;
    std::vector<Diagnostic> diags_;
    std::set<std::string> task_ids_;
    std::map<std::string, std::set<std::string>> refs_;
};

class Flattener {
  public:
    explicit Flattener(const FlowGraph& g) : g_(g) {}

    FlowNode run() {
        std::size_t counter = 0;
        return inline_node(g_.flows.at(g_.entry), "", counter);
    }

  private:
    std::vector<FlowNode> inline_all(const std::vector<FlowNode>& children, const std::string& suffix,
                                     std::size_t& counter) {
        std::vector<FlowNode> out;
        out.reserve(children.size());
        for (const auto& c : children) out.push_back(inline_node(c, suffix, counter));
        return out;
    }

    FlowNode inline_node(const FlowNode& n, const std::string& suffix, std::size_t& counter) {
        if (const auto* t = std::get_if<TaskNode>(&n.node)) {
            TaskNode copy = *t;
            copy.id += suffix;
            return copy;
        }
        if (const auto* s = std::get_if<Sequence>(&n.node)) return Sequence{inline_all(s->children, suffix, counter)};
        if (const auto* a = std::get_if<AndGroup>(&n.node)) return AndGroup{inline_all(a->children, suffix, counter)};
        if (const auto* r = std::get_if<Race>(&n.node)) return Race{inline_all(r->children, suffix, counter)};
        if (const auto* b = std::get_if<Branch>(&n.node)) return Branch{b->probs, inline_all(b->arms, suffix, counter)};

        const auto& ref = n.as<SubflowRef>();
        std::string step = ref.flow + "." + std::to_string(counter++);
        std::string inner = suffix.empty() ? "@" + step : suffix + "/" + step;
        std::size_t inner_counter = 0;
        return inline_node(g_.flows.at(ref.flow), inner, inner_counter);
    }

    const FlowGraph& g_;
};

void count_into(const FlowNode& n, ConstructCounts& c, const FlowGraph* g) {
    std::visit(
        [&](const auto& alt) {
            using T = std::decay_t<decltype(alt)>;
            if constexpr (std::is_same_v<T, TaskNode>) {
                ++c.tasks;
            } else if constexpr (std::is_same_v<T, SubflowRef>) {
                ++c.subflow_refs;
                if (g) count_into(g->flows.at(alt.flow), c, g);
            } else if constexpr (std::is_same_v<T, Branch>) {
                ++c.branches;
                for (const auto& a : alt.arms) count_into(a, c, g);
            } else {
                if constexpr (std::is_same_v<T, Sequence>) ++c.sequences;
                if constexpr (std::is_same_v<T, AndGroup>) ++c.and_groups;
                if constexpr (std::is_same_v<T, Race>) ++c.races;
                for (const auto& ch : alt.children) count_into(ch, c, g);
            }
        },
        n.node);
}

bool pmf_equal(const Pmf& a, const Pmf& b, double prob_tol) {
    if (a.unit() != b.unit() || a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.points()[i].value != b.points()[i].value) return false;
        if (std::fabs(a.points()[i].prob - b.points()[i].prob) > prob_tol) return false;
    }
    return true;
}

bool children_equal(const std::vector<FlowNode>& a, const std::vector<FlowNode>& b, double tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!structurally_equal(a[i], b[i], tol)) return false;
    return true;
}

}  // namespace

std::vector<Diagnostic> validate(const FlowGraph& g) { return Validator(g).run(); }

void require_valid(const FlowGraph& g) {
    auto diags = validate(g);
    if (diags.empty()) return;
    std::string msg = "invalid flow graph:";
    for (const auto& d : diags) msg += "\n  " + (d.path.empty() ? std::string("<graph>") : d.path) + ": " + d.message;
    throw InputError(msg);
}

FlowNode flatten(const FlowGraph& g) {
    require_valid(g);
    return Flattener(g).run();
}

bool structurally_equal(const FlowNode& a, const FlowNode& b, double tol) {
    if (a.node.index() != b.node.index()) return false;
    if (const auto* x = std::get_if<TaskNode>(&a.node)) {
        const auto& y = b.as<TaskNode>();
        return x->id == y.id && x->label == y.label && x->cycles == y.cycles && x->scalable == y.scalable &&
               pmf_equal(x->time, y.time, tol) && pmf_equal(x->power, y.power, tol);
    }
    if (const auto* x = std::get_if<Sequence>(&a.node)) return children_equal(x->children, b.as<Sequence>().children, tol);
    if (const auto* x = std::get_if<AndGroup>(&a.node)) return children_equal(x->children, b.as<AndGroup>().children, tol);
    if (const auto* x = std::get_if<Race>(&a.node)) return children_equal(x->children, b.as<Race>().children, tol);
    if (const auto* x = std::get_if<Branch>(&a.node)) {
        const auto& y = b.as<Branch>();
        if (x->probs.size() != y.probs.size()) return false;
        for (std::size_t i = 0; i < x->probs.size(); ++i)
            if (std::fabs(x->probs[i] - y.probs[i]) > tol) return false;
        return children_equal(x->arms, y.arms, tol);
    }
    return a.as<SubflowRef>().flow == b.as<SubflowRef>().flow;
}

bool structurally_equal(const FlowGraph& a, const FlowGraph& b, double tol) {
    if (a.entry != b.entry || a.deadline != b.deadline) return false;
    if (a.confidence.has_value() != b.confidence.has_value()) return false;
    if (a.confidence && std::fabs(*a.confidence - *b.confidence) > tol) return false;
    if (a.flows.size() != b.flows.size()) return false;
    for (auto ia = a.flows.begin(), ib = b.flows.begin(); ia != a.flows.end(); ++ia, ++ib)
        if (ia->first != ib->first || !structurally_equal(ia->second, ib->second, tol)) return false;
    return true;
}

void for_each_task(const FlowNode& root, const std::function<void(const TaskNode&)>& fn) {
    std::visit(
        [&](const auto& alt) {
            using T = std::decay_t<decltype(alt)>;
            if constexpr (std::is_same_v<T, TaskNode>) {
                fn(alt);
            } else if constexpr (std::is_same_v<T, Branch>) {
                for (const auto& a : alt.arms) for_each_task(a, fn);
            } else if constexpr (!std::is_same_v<T, SubflowRef>) {
                for (const auto& c : alt.children) for_each_task(c, fn);
            }
        },
        root.node);
}

std::vector<const TaskNode*> collect_tasks(const FlowNode& root) {
    std::vector<const TaskNode*> out;
    for_each_task(root, [&](const TaskNode& t) { out.push_back(&t); });
    return out;
}

ConstructCounts count_reachable(const FlowGraph& g) {
    require_valid(g);
    ConstructCounts c;
    count_into(g.flows.at(g.entry), c, &g);
    return c;
}

ConstructCounts count_constructs(const FlowNode& root) {
    ConstructCounts c;
    count_into(root, c, nullptr);
    return c;
}

}  // namespace taskpower
