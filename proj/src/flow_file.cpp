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
#include <cctype>
#include <cmath>

#include "taskpower/error.hpp"
#include "taskpower/flowgraph.hpp"
#include "text_scan.hpp"

namespace taskpower {

namespace {

using detail::Lexer;
using detail::Token;

class FlowParser {
  public:
    explicit FlowParser(std::string_view text) : lex_(text) {}

    FlowGraph parse() {
        FlowGraph g;
        if (lex_.peek().is_ident("flowgraph")) {
            lex_.next();
            parse_header(g);
        }
        for (;;) {
            const Token& tok = lex_.peek();
            if (tok.kind == Token::Kind::End) break;
            if (!tok.is_ident("flow")) lex_.fail(tok, "expected 'flow', found '" + std::string(detail::describe(tok)) + "'");
            lex_.next();
            Token name = lex_.expect_ident("flow name");
            FlowNode body = parse_body();
            if (!g.flows.emplace(name.text, std::move(body)).second)
                lex_.fail(name, "duplicate flow name '" + name.text + "'");
        }
        require_valid(g);
        return g;
    }

  private:
    void parse_header(FlowGraph& g) {
        while (lex_.peek().kind == Token::Kind::Ident) {
            const Token& key = lex_.peek();
            if (key.text != "entry" && key.text != "deadline" && key.text != "confidence") break;
            Token k = lex_.next();
            lex_.expect_punct('=');
            if (k.text == "entry") g.entry = lex_.expect_ident("entry flow name").text;
            else if (k.text == "deadline") g.deadline = lex_.expect_number("deadline");
            else g.confidence = lex_.expect_number("confidence");
        }
    }

    // `{ node+ }`; several nodes form an implicit sequence.
    FlowNode parse_body() {
        auto children = parse_block("flow body");
        if (children.size() == 1) return std::move(children.front());
        return Sequence{std::move(children)};
    }

    std::vector<FlowNode> parse_block(std::string_view what) {
        Token open = lex_.expect_punct('{');
        std::vector<FlowNode> children;
        while (!lex_.peek().is_punct('}')) {
            if (lex_.peek().kind == Token::Kind::End) lex_.fail(open, "unterminated " + std::string(what));
            children.push_back(parse_node());
        }
        lex_.next();
        if (children.empty()) lex_.fail(open, std::string(what) + " is empty");
        return children;
    }

    FlowNode parse_node() {
        Token kw = lex_.next();
        if (kw.is_ident("task")) return parse_task();
        if (kw.is_ident("seq")) return Sequence{parse_block("seq block")};
        if (kw.is_ident("and")) return AndGroup{parse_block("and block")};
        if (kw.is_ident("race")) return Race{parse_block("race block")};
        if (kw.is_ident("sub")) return SubflowRef{lex_.expect_ident("subflow name").text};
        if (kw.is_ident("branch")) return parse_branch(kw);
        lex_.fail(kw, "expected task, seq, and, branch, race or sub; found '" + std::string(detail::describe(kw)) + "'");
    }

    FlowNode parse_branch(const Token& kw) {
        Token open = lex_.expect_punct('{');
        Branch b;
        while (!lex_.peek().is_punct('}')) {
            if (lex_.peek().kind == Token::Kind::End) lex_.fail(open, "unterminated branch block");
            Token ptok = lex_.next();
            if (ptok.kind != Token::Kind::Number)
                lex_.fail(ptok, "expected arm probability, found '" + std::string(detail::describe(ptok)) + "'");
            b.probs.push_back(detail::parse_number(ptok));
            lex_.expect_punct(':');
            b.arms.push_back(parse_node());
        }
        lex_.next();
        if (b.arms.empty()) lex_.fail(open, "branch block is empty");
        double sum = 0.0;
        for (double p : b.probs) sum += p;
        if (std::fabs(sum - 1.0) > 1e-9)
            lex_.fail(kw, "branch probabilities sum to " + format_probability(sum));
        return b;
    }

    FlowNode parse_task() {
        TaskNode t;
        Token id = lex_.expect_ident("task id");
        t.id = id.text;
        bool has_time = false;
        bool has_power = false;
        for (;;) {
            const Token& key = lex_.peek();
            if (key.kind != Token::Kind::Ident) break;
            if (key.text == "scalable") {
                lex_.next();
                t.scalable = true;
                continue;
            }
            if (key.text != "time" && key.text != "power" && key.text != "cycles" && key.text != "label") break;
            Token k = lex_.next();
            lex_.expect_punct('=');
            if (k.text == "time") {
                t.time = lex_.parse_pmf(Unit::Cycles);
                has_time = true;
            } else if (k.text == "power") {
                t.power = lex_.parse_pmf(Unit::Microwatts);
                has_power = true;
            } else if (k.text == "label") {
                t.label = lex_.expect_string("label string");
            } else {
                Token n = lex_.next();
                if (n.kind != Token::Kind::Number) lex_.fail(n, "expected cycle count");
                double c = detail::parse_number(n);
                if (c < 0.0 || c != std::floor(c) || c > 1e18) lex_.fail(n, "cycles must be a nonnegative integer");
                t.cycles = static_cast<std::uint64_t>(c);
            }
        }
        if (!has_time) lex_.fail(id, "task '" + t.id + "' has no time distribution");
        if (!has_power) lex_.fail(id, "task '" + t.id + "' has no power distribution");
        return t;
    }

    Lexer lex_;
};

bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    auto c0 = static_cast<unsigned char>(s[0]);
    if (!std::isalpha(c0) && s[0] != '_') return false;
    for (char ch : s) {
        auto c = static_cast<unsigned char>(ch);
        if (!std::isalnum(c) && ch != '_' && ch != '.' && ch != '$' && ch != '-') return false;
    }
    return true;
}

class FlowWriter {
  public:
    std::string write(const FlowGraph& g) {
        out_ = "flowgraph entry=" + ident(g.entry);
        if (g.deadline) out_ += " deadline=" + format_number(*g.deadline);
        if (g.confidence) out_ += " confidence=" + format_number(*g.confidence);
        out_ += '\n';
        for (const auto& [name, root] : g.flows) {
            out_ += "flow " + ident(name) + " {\n";
            node(root, 1);
            out_ += "}\n";
        }
        return std::move(out_);
    }

  private:
    static std::string ident(const std::string& s) {
        if (!is_identifier(s)) throw InputError("cannot serialize '" + s + "': not a valid identifier");
        return s;
    }

    void indent(int depth) { out_.append(static_cast<std::size_t>(depth) * 2, ' '); }

    void block(std::string_view kw, const std::vector<FlowNode>& children, int depth) {
        out_ += kw;
        out_ += " {\n";
        for (const auto& c : children) {
            indent(depth + 1);
            node_inline(c, depth + 1);
        }
        indent(depth);
        out_ += "}\n";
    }

    // Writes the node starting at the current column; ends with a newline.
    void node_inline(const FlowNode& n, int depth) {
        if (const auto* t = std::get_if<TaskNode>(&n.node)) {
            out_ += "task " + ident(t->id);
            if (!t->label.empty()) {
                out_ += " label=\"";
                for (char c : t->label) {
                    if (c == '"' || c == '\\') out_ += '\\';
                    out_ += c;
                }
                out_ += '"';
            }
            out_ += " time=" + format_pmf(t->time) + " power=" + format_pmf(t->power);
            out_ += " cycles=" + std::to_string(t->cycles);
            if (t->scalable) out_ += " scalable";
            out_ += '\n';
        } else if (const auto* s = std::get_if<Sequence>(&n.node)) {
            block("seq", s->children, depth);
        } else if (const auto* a = std::get_if<AndGroup>(&n.node)) {
            block("and", a->children, depth);
        } else if (const auto* r = std::get_if<Race>(&n.node)) {
            block("race", r->children, depth);
        } else if (const auto* b = std::get_if<Branch>(&n.node)) {
            out_ += "branch {\n";
            for (std::size_t i = 0; i < b->arms.size(); ++i) {
                indent(depth + 1);
                out_ += format_number(b->probs[i]) + ": ";
                node_inline(b->arms[i], depth + 1);
            }
            indent(depth);
            out_ += "}\n";
        } else {
            out_ += "sub " + ident(n.as<SubflowRef>().flow) + "\n";
        }
    }

    void node(const FlowNode& n, int depth) {
        indent(depth);
        node_inline(n, depth);
    }

    std::string out_;
};

}  // namespace

FlowGraph parse_flow_file(std::string_view text) { return FlowParser(text).parse(); }

std::string serialize_flow_file(const FlowGraph& g) {
    require_valid(g);
    return FlowWriter().write(g);
}

}  // namespace taskpower
