#include "rmode/params.hpp"

#include "rmode/error.hpp"

namespace rmode {

void PropagationParams::validate() const {
    if (!std::isfinite(C_dBuVm))
        throw ValueError("model constant C must be finite");
    if (!(e_exponent > 0.0 && e_exponent < 4.0))
        throw ValueError("model exponent e must lie in (0, 4)");
}

PropagationParams params_preset(const std::string& name) {
    if (name == "mf_rmode")
        return PropagationParams::mf_rmode();
    if (name == "eloran")
        return PropagationParams::eloran();
    throw ValueError("unknown model preset '" + name + "' (expected mf_rmode or eloran)");
}

} // namespace rmode
