#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace fomo {

// One ingestible modality: a (sensor, wavelength, gsd) combination. Bands
// without an optical wavelength (SAR polarizations, elevation) are keyed by
// their role string instead.
struct BandSpec {
    int band_id = -1;
    std::string sensor;
    std::string role;  // e.g. "B04", "VV", "elevation"
    std::optional<double> wavelength_nm;
    double gsd_m = 0.0;

    std::string key() const;
};

class BandRegistry {
  public:
    // Returns the new dense id. Throws ConflictError on a duplicate key and
    // ValidationError on nonpositive gsd or wavelength.
    int register_band(const std::string& sensor, const std::string& role,
                      std::optional<double> wavelength_nm, double gsd_m);

    const BandSpec& by_id(int band_id) const;  // NotFoundError if absent
    const BandSpec& resolve(const std::string& sensor, std::optional<double> wavelength_nm,
                            double gsd_m, const std::string& role = "") const;
    bool has_id(int band_id) const { return band_id >= 0 && band_id < size(); }

    int size() const { return static_cast<int>(specs_.size()); }
    const std::vector<BandSpec>& specs() const { return specs_; }

    // Registry file: JSON list of {sensor, role, wavelength_nm|null, gsd_m};
    // list order defines band_id.
    static BandRegistry load(const std::string& path);
    static BandRegistry from_json_text(const std::string& text);
    void save(const std::string& path) const;
    std::string to_json_text() const;

    // The shipped 36-band enumeration, compiled in so tools work without a
    // registry file on disk.
    static BandRegistry canonical();

  private:
    std::vector<BandSpec> specs_;
    std::unordered_map<std::string, int> by_key_;
};

}  // namespace fomo
