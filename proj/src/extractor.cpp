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
#include "taskpower/extractor.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "taskpower/analysis.hpp"
#include "taskpower/error.hpp"
#include "text_scan.hpp"

namespace taskpower {

namespace {

using detail::Lexer;
using detail::Token;

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 1;
    while (!text.empty()) {
        auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        fn(line, line_no);
        if (nl == std::string_view::npos) break;
        text.remove_prefix(nl + 1);
        ++line_no;
    }
}

std::uint64_t expect_count(Lexer& lex, std::string_view what, bool allow_zero) {
    Token tok = lex.next();
    if (tok.kind != Token::Kind::Number) lex.fail(tok, "expected " + std::string(what));
    double v = detail::parse_number(tok);
    if (v < 0.0) lex.fail(tok, std::string(what) + " must be nonnegative");
    if (v != std::floor(v) || v > 1e18) lex.fail(tok, std::string(what) + " must be an integer");
    if (!allow_zero && v == 0.0) lex.fail(tok, std::string(what) + " must be at least 1");
    return static_cast<std::uint64_t>(v);
}

void expect_line_end(Lexer& lex) {
    const Token& tok = lex.peek();
    if (tok.kind != Token::Kind::End) lex.fail(tok, "unexpected '" + std::string(detail::describe(tok)) + "'");
}

struct PendingEdge {
    IrEdge edge;
    std::size_t line;
    std::size_t column;
};

}  // namespace

IrProgram parse_ir(std::string_view text) {
    IrProgram ir;
    std::map<std::string, std::size_t> block_line;
    std::vector<PendingEdge> pending;

    auto close_block = [&]() {
        if (!ir.blocks.empty() && ir.blocks.back().ops.empty())
            throw ParseError("block " + ir.blocks.back().id + " has no ops", block_line[ir.blocks.back().id]);
    };

    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        Lexer lex(line, line_no);
        const Token& first = lex.peek();
        if (first.kind == Token::Kind::End) return;
        Token kw = lex.expect_ident("'block', 'op' or 'succ'");
        if (kw.text == "block") {
            close_block();
            Token id = lex.expect_ident("block id");
            if (!block_line.emplace(id.text, line_no).second) lex.fail(id, "duplicate block id '" + id.text + "'");
            ir.blocks.push_back({id.text, {}});
        } else if (kw.text == "op") {
            if (ir.blocks.empty()) lex.fail(kw, "op outside of a block");
            Token fu = lex.expect_ident("functional unit type");
            lex.expect_punct('@');
            std::uint64_t when = expect_count(lex, "schedule time", true);
            ir.blocks.back().ops.push_back({fu.text, when});
        } else if (kw.text == "succ") {
            if (ir.blocks.empty()) lex.fail(kw, "succ outside of a block");
            while (lex.peek().kind != Token::Kind::End) {
                Token to = lex.expect_ident("successor block id");
                std::uint64_t count = 1;
                if (lex.peek().is_punct(':')) {
                    lex.next();
                    count = expect_count(lex, "execution count", true);
                }
                pending.push_back({{ir.blocks.back().id, to.text, count}, to.line, to.column});
            }
        } else {
            lex.fail(kw, "unknown directive '" + kw.text + "'");
        }
        expect_line_end(lex);
    });
    close_block();

    for (auto& p : pending) {
        if (!block_line.contains(p.edge.to))
            throw ParseError("edge to undefined block '" + p.edge.to + "'", p.line, p.column);
        ir.edges.push_back(std::move(p.edge));
    }
    return ir;
}

FuLibrary parse_fu_library(std::string_view text) {
    FuLibrary lib;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        Lexer lex(line, line_no);
        if (lex.peek().kind == Token::Kind::End) return;
        Token kw = lex.expect_ident("'fu'");
        if (kw.text != "fu") lex.fail(kw, "expected 'fu', found '" + kw.text + "'");
        Token name = lex.expect_ident("functional unit type");
        FuEntry entry;
        bool has_energy = false;
        while (lex.peek().kind != Token::Kind::End) {
            Token key = lex.expect_ident("'delay' or 'energy'");
            lex.expect_punct('=');
            if (key.text == "delay") {
                entry.delay = expect_count(lex, "delay", false);
            } else if (key.text == "energy") {
                entry.energy = lex.parse_pmf(Unit::MicrowattCycles);
                has_energy = true;
            } else {
                lex.fail(key, "unknown attribute '" + key.text + "'");
            }
        }
        if (!has_energy) lex.fail(name, "functional unit '" + name.text + "' has no energy distribution");
        if (!lib.entries.emplace(name.text, std::move(entry)).second)
            lex.fail(name, "duplicate functional unit '" + name.text + "'");
    });
    return lib;
}

namespace {

struct Successor {
    std::string block;
    std::uint64_t count;
};

void check_acyclic(const IrProgram& ir, const std::map<std::string, std::vector<Successor>>& succ) {
    std::map<std::string, int> color;
    // Iterative DFS keeps deep block chains off the call stack.
    for (const auto& b : ir.blocks) {
        if (color[b.id] != 0) continue;
        std::vector<std::pair<std::string, std::size_t>> stack{{b.id, 0}};
        color[b.id] = 1;
        while (!stack.empty()) {
            auto& [node, next] = stack.back();
            const auto& out = succ.at(node);
            if (next == out.size()) {
                color[node] = 2;
                stack.pop_back();
                continue;
            }
            const std::string& target = out[next++].block;
            if (color[target] == 1) throw InputError("block graph has a cycle through edge " + node + " -> " + target);
            if (color[target] == 0) {
                color[target] = 1;
                stack.emplace_back(target, 0);
            }
        }
    }
}

FlowNode block_body(const IrBlock& block, const FuLibrary& lib) {
    std::map<std::uint64_t, std::vector<std::size_t>> steps;
    for (std::size_t i = 0; i < block.ops.size(); ++i) steps[block.ops[i].schedule_time].push_back(i);

    auto make_task = [&](std::size_t i) {
        const auto& op = block.ops[i];
        const auto& fu = lib.entries.at(op.fu_type);
        TaskNode t;
        t.id = block.id + "_op" + std::to_string(i);
        t.label = op.fu_type;
        t.time = Pmf::delta(static_cast<double>(fu.delay), Unit::Cycles);
        t.power = fu.energy.with_unit(Unit::Microwatts);
        t.cycles = fu.delay;
        t.scalable = true;
        return FlowNode(std::move(t));
    };

    Sequence body;
    for (const auto& [when, ops] : steps) {
        if (ops.size() == 1) {
            body.children.push_back(make_task(ops.front()));
        } else {
            AndGroup group;
            for (auto i : ops) group.children.push_back(make_task(i));
            body.children.emplace_back(std::move(group));
        }
    }
    return body;
}

}  // namespace

FlowGraph extract_flow(const IrProgram& ir, const FuLibrary& lib) {
    if (ir.blocks.empty()) throw InputError("IR program has no blocks");
    for (const auto& b : ir.blocks) {
        if (b.ops.empty()) throw InputError("block " + b.id + " has no ops");
        for (const auto& op : b.ops)
            if (!lib.entries.contains(op.fu_type))
                throw InputError("functional unit type '" + op.fu_type + "' (block " + b.id + ") missing from library");
    }

    std::map<std::string, std::vector<Successor>> succ;
    for (const auto& b : ir.blocks) succ[b.id];
    for (const auto& e : ir.edges) {
        if (!succ.contains(e.to) || !succ.contains(e.from))
            throw InputError("edge " + e.from + " -> " + e.to + " references an undefined block");
        auto& list = succ[e.from];
        auto it = std::find_if(list.begin(), list.end(), [&](const Successor& s) { return s.block == e.to; });
        if (it != list.end()) it->count += e.count;
        else list.push_back({e.to, e.count});
    }
    check_acyclic(ir, succ);

    FlowGraph g;
    g.entry = ir.blocks.front().id;
    for (const auto& b : ir.blocks) {
        FlowNode body = block_body(b, lib);
        const auto& out = succ.at(b.id);
        if (out.empty()) {
            g.flows.emplace(b.id, std::move(body));
        } else if (out.size() == 1) {
            g.flows.emplace(b.id, Sequence{{std::move(body), SubflowRef{out.front().block}}});
        } else {
            std::vector<std::uint64_t> counts;
            for (const auto& s : out) counts.push_back(s.count);
            std::vector<double> probs;
            try {
                probs = branch_probs_from_profile(counts);
            } catch (const std::invalid_argument&) {
                throw InputError("block " + b.id + " branches with zero total successor count");
            }
            Branch br;
            br.probs = std::move(probs);
            for (const auto& s : out) br.arms.emplace_back(SubflowRef{s.block});
            g.flows.emplace(b.id, Sequence{{std::move(body), std::move(br)}});
        }
    }
    require_valid(g);
    return g;
}

double transition_probability(NodeKind kind, std::uint64_t n) {
    if (n < 1) throw std::invalid_argument("transition probability needs at least one node");
    return kind == NodeKind::Concurrent ? 1.0 : 1.0 / static_cast<double>(n);
}

}  // namespace taskpower
