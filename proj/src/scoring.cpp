#include <algorithm>
#include <cmath>

#include "htnsat/cli.hpp"

namespace htnsat {

double ipc_score(double t, double T, bool solved) {
    if (!(T > 1)) throw UsageError("time limit T must exceed 1 second");
    if (!solved) return 0;
    t = std::clamp(t, 1.0, T);
    return std::min(1.0, 1.0 - std::log(t) / std::log(T));
}

double quality_score(std::size_t C, std::size_t C_ref, bool solved) {
    if (!solved) return 0;
    if (C < C_ref) throw UsageError("plan length below the reference length");
    if (C_ref == 0) return C == 0 ? 1.0 : 0.0;
    return static_cast<double>(C_ref) / static_cast<double>(C);
}

}  // namespace htnsat
