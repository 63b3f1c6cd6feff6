#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace gridtrader {

// One hour of market data: load, clearing price, and renewable availability.
struct HourlyRecord {
    int hour = 0;              // 0..23
    double demand_mwh = 0.0;   // >= 0
    double price_usd_per_mwh = 0.0; // >= 0
    double solar_cf = 0.0;     // capacity factor in [0,1]
    double wind_cf = 0.0;      // capacity factor in [0,1]
};

// A full 24-hour market day, hours 0..23 in order.
struct DayProfile {
    std::array<HourlyRecord, 24> records{};

    double peak_demand() const;
    double min_price() const;
    double max_price() const;
};

// Multiplicative noise applied per field to diversify training days.
struct PerturbationSpec {
    double amplitude = 0.05; // relative, must be < 1 so values stay positive
    uint64_t seed = 0;
};

// Throws ValidationError when any HourlyRecord or the 0..23 ordering is violated.
void validate_profile(const DayProfile& profile);

// CSV column layout shared by load_profile/save_profile. Header is byte-exact.
inline constexpr const char* kProfileCsvHeader = "hour,demand_mwh,price_usd_per_mwh,solar_cf,wind_cf";

// Reads a 24-row profile CSV. Throws IoError on unreadable files and
// ValidationError on malformed rows, missing hours, or out-of-range values.
DayProfile load_profile(const std::string& path);

// Writes the canonical CSV format (6 decimal places, \n line endings).
void save_profile(const DayProfile& profile, const std::string& path);

// Deterministic synthetic day: evening demand peak, prices tracking demand
// inside [14, 66] $/MWh with the nightly minimum, a midday solar bell, and a
// seeded hour-to-hour wind series.
DayProfile synthesize_default();

// Scales every demand/price/cf field by (1 + u), u ~ U[-amplitude, amplitude]
// drawn from a stream seeded by spec.seed. Capacity factors are re-clamped to
// [0,1]. Same (profile, spec) always yields the same output.
DayProfile perturb(const DayProfile& profile, const PerturbationSpec& spec);

} // namespace gridtrader
