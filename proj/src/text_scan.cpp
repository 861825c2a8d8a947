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
#include "text_scan.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace taskpower::detail {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }

bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$' || c == '-';
}

bool digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::string_view describe(const Token& tok) {
    if (tok.kind == Token::Kind::End) return "end of input";
    return tok.text;
}

void Lexer::advance() {
    if (cur() == '\n') {
        ++line_;
        column_ = 1;
    } else {
        ++column_;
    }
    ++pos_;
}

void Lexer::skip_space_and_comments() {
    for (;;) {
        char c = cur();
        if (c == '#') {
            while (cur() != '\n' && cur() != '\0') advance();
        } else if (c != '\0' && std::isspace(static_cast<unsigned char>(c))) {
            advance();
        } else {
            return;
        }
    }
}

Token Lexer::scan() {
    skip_space_and_comments();
    Token tok;
    tok.line = line_;
    tok.column = column_;
    char c = cur();
    if (c == '\0' || pos_ >= src_.size()) {
        tok.kind = Token::Kind::End;
        return tok;
    }
    if (ident_start(c)) {
        tok.kind = Token::Kind::Ident;
        while (ident_char(cur())) {
            tok.text.push_back(cur());
            advance();
        }
        return tok;
    }
    if (digit(c) || ((c == '-' || c == '+' || c == '.') && (digit(at(1)) || (at(1) == '.' && digit(at(2)))))) {
        tok.kind = Token::Kind::Number;
        if (c == '-' || c == '+') {
            tok.text.push_back(c);
            advance();
        }
        while (digit(cur())) {
            tok.text.push_back(cur());
            advance();
        }
        if (cur() == '.') {
            tok.text.push_back('.');
            advance();
            while (digit(cur())) {
                tok.text.push_back(cur());
                advance();
            }
        }
        if ((cur() == 'e' || cur() == 'E') &&
            (digit(at(1)) || ((at(1) == '-' || at(1) == '+') && digit(at(2))))) {
            tok.text.push_back(cur());
            advance();
            if (cur() == '-' || cur() == '+') {
                tok.text.push_back(cur());
                advance();
            }
            while (digit(cur())) {
                tok.text.push_back(cur());
                advance();
            }
        }
        return tok;
    }
    if (c == '"') {
        tok.kind = Token::Kind::String;
        advance();
        for (;;) {
            char s = cur();
            if (s == '\0' || s == '\n') fail(tok, "unterminated string");
            if (s == '"') {
                advance();
                break;
            }
            if (s == '\\') {
                advance();
                char e = cur();
                if (e != '"' && e != '\\') fail(tok, "unsupported escape in string");
                tok.text.push_back(e);
                advance();
                continue;
            }
            tok.text.push_back(s);
            advance();
        }
        return tok;
    }
    tok.kind = Token::Kind::Punct;
    tok.text.push_back(c);
    advance();
    return tok;
}

const Token& Lexer::peek() {
    if (!has_peek_) {
        peeked_ = scan();
        has_peek_ = true;
    }
    return peeked_;
}

Token Lexer::next() {
    if (has_peek_) {
        has_peek_ = false;
        return std::move(peeked_);
    }
    return scan();
}

void Lexer::fail(const Token& at, const std::string& msg) const { throw ParseError(msg, at.line, at.column); }

Token Lexer::expect_ident(std::string_view what) {
    Token tok = next();
    if (tok.kind != Token::Kind::Ident)
        fail(tok, "expected " + std::string(what) + ", found '" + std::string(describe(tok)) + "'");
    return tok;
}

Token Lexer::expect_punct(char c) {
    Token tok = next();
    if (!tok.is_punct(c))
        fail(tok, std::string("expected '") + c + "', found '" + std::string(describe(tok)) + "'");
    return tok;
}

double Lexer::expect_number(std::string_view what) {
    Token tok = next();
    if (tok.kind != Token::Kind::Number)
        fail(tok, "expected " + std::string(what) + ", found '" + std::string(describe(tok)) + "'");
    return parse_number(tok);
}

std::string Lexer::expect_string(std::string_view what) {
    Token tok = next();
    if (tok.kind != Token::Kind::String)
        fail(tok, "expected " + std::string(what) + ", found '" + std::string(describe(tok)) + "'");
    return tok.text;
}

Pmf Lexer::parse_pmf(Unit unit) {
    Token open = expect_punct('{');
    std::vector<PmfPoint> points;
    if (peek().is_punct('}')) fail(peek(), "empty distribution");
    for (;;) {
        Token vtok = next();
        if (vtok.kind != Token::Kind::Number) fail(vtok, "expected support value, found '" + std::string(describe(vtok)) + "'");
        double value = parse_number(vtok);
        expect_punct(':');
        Token ptok = next();
        if (ptok.kind != Token::Kind::Number) fail(ptok, "expected probability, found '" + std::string(describe(ptok)) + "'");
        double prob = parse_number(ptok);
        if (!(value >= 0.0)) fail(vtok, "support value must be nonnegative");
        if (prob < 0.0) fail(ptok, "probability must be nonnegative");
        points.push_back({value, prob});
        Token sep = next();
        if (sep.is_punct('}')) break;
        if (!sep.is_punct(',')) fail(sep, "expected ',' or '}', found '" + std::string(describe(sep)) + "'");
    }
    try {
        return Pmf::make(std::move(points), unit);
    } catch (const std::invalid_argument& e) {
        fail(open, e.what());
    }
}

double parse_number(const Token& tok) {
    const char* first = tok.text.data();
    const char* last = first + tok.text.size();
    if (first != last && *first == '+') ++first;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value))
        throw ParseError("invalid number '" + tok.text + "'", tok.line, tok.column);
    return value;
}

}  // namespace taskpower::detail
