#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "htnsat/decomposition.hpp"
#include "htnsat/model.hpp"

namespace htnsat {

/// Hierarchical plan text:
///
///     ==>
///     0 (action args)
///     root 3
///     3 task args -> method 0 ...
///     <==
///
/// Primitive leaves are numbered in plan order, abstract nodes follow in
/// preorder. Guard actions are left out and restored by parse_plan.
std::string write_plan(const Problem& p, const DecompositionTree& dt);

/// Throws ParseError on malformed text or names unknown to p.
DecompositionTree parse_plan(const Problem& p, std::string_view text, const std::string& origin = "<plan>");

/// Solved instances score min(1, 1 - log t / log T) with t clamped to [1, T];
/// unsolved ones score 0. Throws UsageError when T <= 1.
double ipc_score(double t, double T, bool solved);

/// C_ref / C for solved instances; 0 otherwise. Empty plans on both sides score 1.
/// Throws UsageError when a solved C is below C_ref.
double quality_score(std::size_t C, std::size_t C_ref, bool solved);

enum ExitCode : int { kSolved = 0, kUnsolvable = 1, kTimeout = 2, kInputError = 3, kInternalError = 4 };

int run_cli(int argc, char** argv);

}  // namespace htnsat
