#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "htnsat/model.hpp"

namespace htnsat::support {

std::string data_path(const std::string& file);

/// "taxi" and "tower" load HDDL pairs; any other name loads data/NAME.ground.
Problem load_fixture(const std::string& name);

struct Toy {
    std::string name;
    bool solvable;
    bool recursive;
};

/// The bundled toy suite with known verdicts.
const std::vector<Toy>& toy_suite();

/// Small random instance whose task graph is acyclic and whose decomposition
/// trees number at most max_dts.
Problem random_nonrecursive(std::uint64_t seed, std::size_t max_dts = 10'000);

}  // namespace htnsat::support
