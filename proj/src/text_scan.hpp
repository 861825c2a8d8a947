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

// Tokenizer shared by the text formats (PMF literals, flow files, IR files,
// FU libraries, voltage levels). Internal to the library.

#include <cstddef>
#include <string>
#include <string_view>

#include "taskpower/error.hpp"
#include "taskpower/pmf.hpp"

namespace taskpower::detail {

struct Token {
    enum class Kind { Ident, Number, String, Punct, End };

    Kind kind = Kind::End;
    std::string text;
    std::size_t line = 0;
    std::size_t column = 0;

    bool is_punct(char c) const { return kind == Kind::Punct && text.size() == 1 && text[0] == c; }
    bool is_ident(std::string_view word) const { return kind == Kind::Ident && text == word; }
};

std::string_view describe(const Token& tok);

/// Identifiers: [A-Za-z_][A-Za-z0-9_.$-]*. Numbers: optional sign, digits,
/// fraction and exponent. Strings: double quoted with \" and \\ escapes.
/// `#` starts a comment that runs to end of line.
class Lexer {
  public:
    explicit Lexer(std::string_view src, std::size_t first_line = 1, std::size_t first_column = 1)
        : src_(src), line_(first_line), column_(first_column) {}

    const Token& peek();
    Token next();

    Token expect_ident(std::string_view what);
    Token expect_punct(char c);
    double expect_number(std::string_view what);
    std::string expect_string(std::string_view what);

    /// Consumes a `{ v:p, ... }` literal starting at the current token.
    Pmf parse_pmf(Unit unit);

    [[noreturn]] void fail(const Token& at, const std::string& msg) const;

  private:
    Token scan();
    void skip_space_and_comments();
    char cur() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }
    char at(std::size_t off) const { return pos_ + off < src_.size() ? src_[pos_ + off] : '\0'; }
    void advance();

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_;
    std::size_t column_;
    bool has_peek_ = false;
    Token peeked_;
};

double parse_number(const Token& tok);

}  // namespace taskpower::detail
