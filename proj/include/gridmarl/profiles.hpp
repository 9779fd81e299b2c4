#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridmarl/rng.hpp"

namespace gridmarl {

inline constexpr int kSlotsPerDay = 96;

// One day of 15-minute power samples, slot 0 = 00:00.
struct DayProfile {
    std::array<double, kSlotsPerDay> values_kw{};

    double operator[](int slot) const { return values_kw[static_cast<std::size_t>(slot)]; }
    void validate() const;
};

enum class ProfileKind { Consumption, Pv };

struct ProfileSpec {
    ProfileKind kind = ProfileKind::Consumption;
    double peak_kw = 0.0;
    double noise_frac = 0.0;    // multiplicative, in [0, 0.5)
    std::uint64_t stream_id = 0; // entity tag for seed derivation

    void validate() const;
};

struct ProfileParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Double-peak residential consumption: morning shoulder around 07:00 and an
// evening peak around 19:00 on a base-load floor, normalized so the noiseless
// maximum equals peak_kw.
DayProfile synth_consumption(const ProfileSpec& spec, Rng& rng);

// Solar generation: a cosine bell between 06:00 and 19:00 peaking at solar
// noon, clipped so no sample exceeds peak_kw.
DayProfile synth_pv(double peak_kw, double noise_frac, Rng& rng);

struct NamedProfile {
    std::string name;
    DayProfile profile;
};

// Reads `slot,<name1>,<name2>,...` CSV with 96 data rows; one profile per
// named column. Parse failures name the offending row and column.
std::vector<NamedProfile> load_profiles_csv(const std::string& path);

} // namespace gridmarl
