#include "gridmarl/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gridmarl {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Consumption shape constants: Gaussian bumps at 07:00 (slot 28) and 19:00
// (slot 76) over a 0.15 base-load floor, expressed as fractions of peak.
constexpr double kBaseLoadFrac = 0.15;
constexpr double kMorningAmp = 0.55;
constexpr double kEveningAmp = 0.85;
constexpr double kBumpSigmaSlots = 8.0;
constexpr int kMorningSlot = 28;
constexpr int kEveningSlot = 76;

// PV window: cosine bell over slots 24..76 (06:00 to 19:00), noon at slot 50.
constexpr int kSunriseSlot = 24;
constexpr int kSunsetSlot = 76;
constexpr int kNoonSlot = 50;

double gaussian_bump(double slot, double mu, double sigma) {
    const double z = (slot - mu) / sigma;
    return std::exp(-0.5 * z * z);
}

} // namespace

void DayProfile::validate() const {
    for (int s = 0; s < kSlotsPerDay; ++s) {
        const double v = values_kw[static_cast<std::size_t>(s)];
        if (!std::isfinite(v)) throw std::domain_error("profile value must be finite");
        if (v < 0.0) throw std::domain_error("profile value must be >= 0");
    }
}

void ProfileSpec::validate() const {
    if (!(peak_kw > 0.0)) throw std::domain_error("profile peak must be > 0");
    if (!(noise_frac >= 0.0 && noise_frac < 0.5))
        throw std::domain_error("noise fraction must lie in [0, 0.5)");
}

DayProfile synth_consumption(const ProfileSpec& spec, Rng& rng) {
    spec.validate();
    std::array<double, kSlotsPerDay> shape{};
    double shape_max = 0.0;
    for (int s = 0; s < kSlotsPerDay; ++s) {
        const double v = kBaseLoadFrac +
                         kMorningAmp * gaussian_bump(s, kMorningSlot, kBumpSigmaSlots) +
                         kEveningAmp * gaussian_bump(s, kEveningSlot, kBumpSigmaSlots);
        shape[static_cast<std::size_t>(s)] = v;
        shape_max = std::max(shape_max, v);
    }
    DayProfile out;
    for (int s = 0; s < kSlotsPerDay; ++s) {
        const double noise = 1.0 + rng.uniform(-spec.noise_frac, spec.noise_frac);
        out.values_kw[static_cast<std::size_t>(s)] =
            spec.peak_kw * (shape[static_cast<std::size_t>(s)] / shape_max) * noise;
    }
    out.validate();
    return out;
}

DayProfile synth_pv(double peak_kw, double noise_frac, Rng& rng) {
    if (!(peak_kw > 0.0)) throw std::domain_error("pv peak must be > 0");
    if (!(noise_frac >= 0.0 && noise_frac < 0.5))
        throw std::domain_error("noise fraction must lie in [0, 0.5)");

    DayProfile out;
    for (int s = 0; s < kSlotsPerDay; ++s) {
        double v = 0.0;
        if (s > kSunriseSlot && s < kSunsetSlot) {
            const double phase = kPi * (s - kNoonSlot) / (kSunsetSlot - kSunriseSlot);
            const double shape = std::max(0.0, std::cos(phase));
            const double noise = 1.0 + rng.uniform(-noise_frac, noise_frac);
            v = std::min(peak_kw, peak_kw * shape * noise);
        }
        out.values_kw[static_cast<std::size_t>(s)] = v;
    }
    out.validate();
    return out;
}

std::vector<NamedProfile> load_profiles_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ProfileParseError("cannot open profile file: " + path);

    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::string cell;
        std::stringstream ss(line);
        while (std::getline(ss, cell, ',')) {
            if (!cell.empty() && cell.back() == '\r') cell.pop_back();
            cells.push_back(cell);
        }
        return cells;
    };

    std::string line;
    if (!std::getline(in, line)) throw ProfileParseError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line);
    if (header.size() < 2 || header[0] != "slot")
        throw ProfileParseError(path + ": header must be 'slot,<name1>,...'");

    std::vector<NamedProfile> out(header.size() - 1);
    for (std::size_t c = 1; c < header.size(); ++c) out[c - 1].name = header[c];

    int row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (row >= kSlotsPerDay)
            throw ProfileParseError(path + ": expected 96 rows, found more");
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw ProfileParseError(path + ": row " + std::to_string(row) + " has " +
                                    std::to_string(cells.size()) + " cells, expected " +
                                    std::to_string(header.size()));
        std::size_t pos = 0;
        int slot = -1;
        try {
            slot = std::stoi(cells[0], &pos);
        } catch (const std::exception&) {
            throw ProfileParseError(path + ": row " + std::to_string(row) +
                                    ": non-numeric slot value '" + cells[0] + "'");
        }
        if (pos != cells[0].size() || slot != row)
            throw ProfileParseError(path + ": row " + std::to_string(row) +
                                    ": slot column must equal the row index");
        for (std::size_t c = 1; c < cells.size(); ++c) {
            double v = 0.0;
            try {
                v = std::stod(cells[c], &pos);
            } catch (const std::exception&) {
                throw ProfileParseError(path + ": row " + std::to_string(row) + ", column '" +
                                        header[c] + "': non-numeric cell '" + cells[c] + "'");
            }
            if (pos != cells[c].size())
                throw ProfileParseError(path + ": row " + std::to_string(row) + ", column '" +
                                        header[c] + "': non-numeric cell '" + cells[c] + "'");
            if (v < 0.0)
                throw ProfileParseError(path + ": row " + std::to_string(row) + ", column '" +
                                        header[c] + "': negative value");
            out[c - 1].profile.values_kw[static_cast<std::size_t>(row)] = v;
        }
        ++row;
    }
    if (row != kSlotsPerDay)
        throw ProfileParseError(path + ": expected 96 rows, found " + std::to_string(row));
    for (auto& np : out) np.profile.validate();
    return out;
}

} // namespace gridmarl
