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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace taskpower {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input: files, graphs, options.
class InputError : public Error {
  public:
    using Error::Error;
};

/// Text input that failed to parse. Line and column are 1-based; 0 means unknown.
class ParseError : public InputError {
  public:
    ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
        : InputError(format(what, line, column)), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

  private:
    static std::string format(const std::string& what, std::size_t line, std::size_t column) {
        if (line == 0) return what;
        std::string loc = "line " + std::to_string(line);
        if (column != 0) loc += ", column " + std::to_string(column);
        return loc + ": " + what;
    }

    std::size_t line_;
    std::size_t column_;
};

/// No voltage assignment or processor count satisfies the deadline at the
/// requested confidence.
class InfeasibleError : public Error {
  public:
    using Error::Error;
};

}  // namespace taskpower
