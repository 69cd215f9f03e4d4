#ifndef RMODE_PARAMS_HPP
#define RMODE_PARAMS_HPP

#include <cmath>
#include <string>

namespace rmode {

/// Constants of the approximate ground-wave model
///
///     field [dB(uV/m)] = C - 10 * log10(r^e) - sum_i ea_i * r_i
///
/// with r in meters. C is the field strength extrapolated to 1 m and e the
/// geometric spreading exponent. The per-meter extra attenuation ea depends
/// on ground conductivity and lives in conductivity::EaTable.
struct PropagationParams {
    double C_dBuVm = 195.876;
    double e_exponent = 2.046;

    /// Fitted constants for MF R-Mode (~300 kHz) signals.
    static constexpr PropagationParams mf_rmode() { return {195.876, 2.046}; }

    /// The eLoran approximation: 189.353 - 10 log10(r^2) - sum ea_i r_i.
    static constexpr PropagationParams eloran() { return {189.353, 2.0}; }

    /// Throws ValueError unless C is finite and e lies in (0, 4).
    void validate() const;

    /// Homogeneous-ground model value. No range guard; see
    /// propagation::field_strength_homogeneous for the checked version.
    double field(double r_m, double ea_dB_per_m) const noexcept {
        return C_dBuVm - 10.0 * e_exponent * std::log10(r_m) - ea_dB_per_m * r_m;
    }

    friend bool operator==(const PropagationParams&, const PropagationParams&) = default;
};

/// Resolves "mf_rmode" / "eloran"; throws ValueError otherwise.
PropagationParams params_preset(const std::string& name);

} // namespace rmode

#endif
