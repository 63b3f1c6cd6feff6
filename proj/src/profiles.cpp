#include "gridtrader/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "gridtrader/errors.hpp"
#include "gridtrader/rng.hpp"

namespace gridtrader {

double DayProfile::peak_demand() const {
    double peak = 0.0;
    for (const auto& r : records) peak = std::max(peak, r.demand_mwh);
    return peak;
}

double DayProfile::min_price() const {
    double lo = records[0].price_usd_per_mwh;
    for (const auto& r : records) lo = std::min(lo, r.price_usd_per_mwh);
    return lo;
}

double DayProfile::max_price() const {
    double hi = records[0].price_usd_per_mwh;
    for (const auto& r : records) hi = std::max(hi, r.price_usd_per_mwh);
    return hi;
}

void validate_profile(const DayProfile& profile) {
    for (int h = 0; h < 24; ++h) {
        const HourlyRecord& r = profile.records[static_cast<size_t>(h)];
        if (r.hour != h)
            throw ValidationError("profile hour " + std::to_string(h) + " missing or out of order (found " +
                                  std::to_string(r.hour) + ")");
        if (!(r.demand_mwh >= 0.0))
            throw ValidationError("hour " + std::to_string(h) + ": demand must be >= 0");
        if (!(r.price_usd_per_mwh >= 0.0))
            throw ValidationError("hour " + std::to_string(h) + ": price must be >= 0");
        if (!(r.solar_cf >= 0.0 && r.solar_cf <= 1.0))
            throw ValidationError("hour " + std::to_string(h) + ": solar_cf outside [0,1]");
        if (!(r.wind_cf >= 0.0 && r.wind_cf <= 1.0))
            throw ValidationError("hour " + std::to_string(h) + ": wind_cf outside [0,1]");
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& text, const std::string& what, int line_no) {
    try {
        size_t pos = 0;
        double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("line " + std::to_string(line_no) + ": cannot parse " + what + " from '" + text + "'");
    }
}

} // namespace

DayProfile load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open profile file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty profile file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kProfileCsvHeader)
        throw ValidationError("unexpected CSV header '" + line + "', expected '" + kProfileCsvHeader + "'");

    DayProfile profile;
    std::array<bool, 24> seen{};
    int line_no = 1;
    int rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 5)
            throw ValidationError("line " + std::to_string(line_no) + ": expected 5 columns, got " +
                                  std::to_string(fields.size()));
        int hour = static_cast<int>(parse_double(fields[0], "hour", line_no));
        if (hour < 0 || hour > 23)
            throw ValidationError("line " + std::to_string(line_no) + ": hour " + std::to_string(hour) +
                                  " outside 0..23");
        if (seen[static_cast<size_t>(hour)])
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate hour " + std::to_string(hour));
        seen[static_cast<size_t>(hour)] = true;
        HourlyRecord r;
        r.hour = hour;
        r.demand_mwh = parse_double(fields[1], "demand_mwh", line_no);
        r.price_usd_per_mwh = parse_double(fields[2], "price_usd_per_mwh", line_no);
        r.solar_cf = parse_double(fields[3], "solar_cf", line_no);
        r.wind_cf = parse_double(fields[4], "wind_cf", line_no);
        profile.records[static_cast<size_t>(hour)] = r;
        ++rows;
    }
    if (rows != 24) {
        for (int h = 0; h < 24; ++h)
            if (!seen[static_cast<size_t>(h)])
                throw ValidationError("profile incomplete: hour " + std::to_string(h) + " missing");
    }
    validate_profile(profile);
    return profile;
}

void save_profile(const DayProfile& profile, const std::string& path) {
    std::ofstream out(path, std::ios::binary); // binary keeps \n endings on all platforms
    if (!out) throw IoError("cannot open for writing: " + path);
    out << kProfileCsvHeader << "\n";
    char buf[160];
    for (const auto& r : profile.records) {
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f\n", r.hour, r.demand_mwh, r.price_usd_per_mwh,
                      r.solar_cf, r.wind_cf);
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path);
}

DayProfile synthesize_default() {
    DayProfile profile;
    auto bump = [](double h, double center, double width) {
        double d = (h - center) / width;
        return std::exp(-0.5 * d * d);
    };
    // Demand: nightly trough around 03:30, morning shoulder, evening peak at 19:00.
    std::array<double, 24> demand{};
    for (int h = 0; h < 24; ++h) {
        double hh = static_cast<double>(h);
        demand[static_cast<size_t>(h)] =
            640.0 + 330.0 * bump(hh, 19.0, 2.8) + 110.0 * bump(hh, 8.5, 2.2) - 140.0 * bump(hh, 3.5, 2.6);
    }
    double dmin = *std::min_element(demand.begin(), demand.end());
    double dmax = *std::max_element(demand.begin(), demand.end());

    // Fixed wind stream: the default day is one specific day, not a random one.
    std::array<double, 24> wind{};
    for (int h = 0; h < 24; ++h)
        wind[static_cast<size_t>(h)] =
            0.15 + 0.70 * static_cast<double>(Rng::mix(0x57494E44ULL, static_cast<uint64_t>(h)) >> 11) * 0x1.0p-53;

    for (int h = 0; h < 24; ++h) {
        HourlyRecord& r = profile.records[static_cast<size_t>(h)];
        r.hour = h;
        r.demand_mwh = demand[static_cast<size_t>(h)];
        // Price tracks demand affinely onto [14, 66] $/MWh.
        r.price_usd_per_mwh = 14.0 + 52.0 * (r.demand_mwh - dmin) / (dmax - dmin);
        // Clear-sky bell between 06:00 and 19:00 inclusive, maximum at 13:00.
        r.solar_cf = (h >= 6 && h <= 19) ? 0.95 * std::sin(3.14159265358979323846 * (h - 6) / 14.0) : 0.0;
        r.wind_cf = wind[static_cast<size_t>(h)];
    }
    validate_profile(profile);
    return profile;
}

DayProfile perturb(const DayProfile& profile, const PerturbationSpec& spec) {
    if (!(spec.amplitude >= 0.0 && spec.amplitude < 1.0))
        throw std::invalid_argument("perturbation amplitude must be in [0, 1)");
    Rng rng(spec.seed);
    DayProfile out = profile;
    for (auto& r : out.records) {
        r.demand_mwh *= 1.0 + rng.uniform(-spec.amplitude, spec.amplitude);
        r.price_usd_per_mwh *= 1.0 + rng.uniform(-spec.amplitude, spec.amplitude);
        r.solar_cf = std::clamp(r.solar_cf * (1.0 + rng.uniform(-spec.amplitude, spec.amplitude)), 0.0, 1.0);
        r.wind_cf = std::clamp(r.wind_cf * (1.0 + rng.uniform(-spec.amplitude, spec.amplitude)), 0.0, 1.0);
    }
    return out;
}

} // namespace gridtrader
