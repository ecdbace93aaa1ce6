#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "htnsat/model.hpp"

namespace htnsat {

/// Input error with a source location and the offending construct.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string file, int line, std::string construct, const std::string& message);

    const std::string& file() const { return file_; }
    int line() const { return line_; }
    const std::string& construct() const { return construct_; }

private:
    std::string file_;
    int line_;
    std::string construct_;
};

/// Reads the line-oriented ground problem format:
///
///     # comment
///     fact NAME
///     action NAME [guard] [pre: FACT...] [add: FACT...] [del: FACT...]
///     task NAME
///     method NAME TASK -> SUBTASK...
///     root TASK
///     init FACT...
///     goal FACT...
///
/// NAME is `sym` or `sym(arg,arg)`. Ids follow declaration order. Subtask names
/// resolve against actions and abstract tasks, which share one namespace.
Problem read_ground(std::string_view text, const std::string& origin = "<ground>");

/// Inverse of read_ground (modulo comments and whitespace).
std::string write_ground(const Problem& p);

}  // namespace htnsat
