#include "fomo/registry.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "fomo/error.hpp"

namespace fomo {

using nlohmann::json;

std::string BandSpec::key() const {
    std::ostringstream os;
    os << sensor << '|';
    if (wavelength_nm) {
        os << *wavelength_nm;
    } else {
        os << "role:" << role;
    }
    os << '|' << gsd_m;
    return os.str();
}

int BandRegistry::register_band(const std::string& sensor, const std::string& role,
                                std::optional<double> wavelength_nm, double gsd_m) {
    if (!(gsd_m > 0.0)) {
        throw ValidationError("register_band: gsd must be positive, got " + std::to_string(gsd_m));
    }
    if (wavelength_nm && !(*wavelength_nm > 0.0)) {
        throw ValidationError("register_band: wavelength must be positive or absent");
    }
    BandSpec spec;
    spec.band_id = static_cast<int>(specs_.size());
    spec.sensor = sensor;
    spec.role = role;
    spec.wavelength_nm = wavelength_nm;
    spec.gsd_m = gsd_m;
    const std::string k = spec.key();
    if (by_key_.count(k)) {
        throw ConflictError("register_band: duplicate band key " + k);
    }
    by_key_[k] = spec.band_id;
    specs_.push_back(std::move(spec));
    return specs_.back().band_id;
}

const BandSpec& BandRegistry::by_id(int band_id) const {
    if (!has_id(band_id)) {
        throw NotFoundError("registry: no band with id " + std::to_string(band_id));
    }
    return specs_[static_cast<std::size_t>(band_id)];
}

const BandSpec& BandRegistry::resolve(const std::string& sensor, std::optional<double> wavelength_nm,
                                      double gsd_m, const std::string& role) const {
    BandSpec probe;
    probe.sensor = sensor;
    probe.role = role;
    probe.wavelength_nm = wavelength_nm;
    probe.gsd_m = gsd_m;
    auto it = by_key_.find(probe.key());
    if (it == by_key_.end()) {
        throw NotFoundError("registry: unknown band key " + probe.key());
    }
    return specs_[static_cast<std::size_t>(it->second)];
}

BandRegistry BandRegistry::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("registry: invalid JSON: ") + e.what());
    }
    if (!j.is_array()) throw FormatError("registry: top level must be an array");
    BandRegistry reg;
    try {
        for (const auto& item : j) {
            if (!item.is_object()) throw FormatError("registry: entries must be objects");
            std::optional<double> wl;
            if (item.contains("wavelength_nm") && !item.at("wavelength_nm").is_null()) {
                wl = item.at("wavelength_nm").get<double>();
            }
            reg.register_band(item.at("sensor").get<std::string>(),
                              item.value("role", std::string{}), wl, item.at("gsd_m").get<double>());
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("registry: schema violation: ") + e.what());
    }
    return reg;
}

BandRegistry BandRegistry::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("registry: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string BandRegistry::to_json_text() const {
    json j = json::array();
    for (const auto& s : specs_) {
        json item;
        item["sensor"] = s.sensor;
        item["role"] = s.role;
        if (s.wavelength_nm) item["wavelength_nm"] = *s.wavelength_nm;
        else item["wavelength_nm"] = nullptr;
        item["gsd_m"] = s.gsd_m;
        j.push_back(std::move(item));
    }
    return j.dump(2) + "\n";
}

void BandRegistry::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("registry: cannot write " + path);
    out << to_json_text();
    if (!out) throw StorageError("registry: write failed for " + path);
}

BandRegistry BandRegistry::canonical() {
    BandRegistry reg;
    auto opt = [](double wl) { return std::optional<double>(wl); };
    const std::optional<double> none;

    reg.register_band("Sentinel-1", "VV", none, 10.0);
    reg.register_band("Sentinel-1", "VH", none, 10.0);

    reg.register_band("Sentinel-2", "B01", opt(443.0), 60.0);
    reg.register_band("Sentinel-2", "B02", opt(490.0), 10.0);
    reg.register_band("Sentinel-2", "B03", opt(560.0), 10.0);
    reg.register_band("Sentinel-2", "B04", opt(665.0), 10.0);
    reg.register_band("Sentinel-2", "B05", opt(705.0), 20.0);
    reg.register_band("Sentinel-2", "B06", opt(740.0), 20.0);
    reg.register_band("Sentinel-2", "B07", opt(783.0), 20.0);
    reg.register_band("Sentinel-2", "B08", opt(842.0), 10.0);
    reg.register_band("Sentinel-2", "B8A", opt(865.0), 20.0);
    reg.register_band("Sentinel-2", "B09", opt(945.0), 60.0);
    reg.register_band("Sentinel-2", "B10", opt(1375.0), 60.0);
    reg.register_band("Sentinel-2", "B11", opt(1610.0), 20.0);
    reg.register_band("Sentinel-2", "B12", opt(2190.0), 20.0);

    reg.register_band("Landsat 8-9", "coastal", opt(443.0), 30.0);
    reg.register_band("Landsat 8-9", "blue", opt(482.0), 30.0);
    reg.register_band("Landsat 8-9", "green", opt(562.0), 30.0);
    reg.register_band("Landsat 8-9", "red", opt(655.0), 30.0);
    reg.register_band("Landsat 8-9", "nir", opt(865.0), 30.0);
    reg.register_band("Landsat 8-9", "swir1", opt(1610.0), 30.0);
    reg.register_band("Landsat 8-9", "swir2", opt(2200.0), 30.0);
    reg.register_band("Landsat 8-9", "pan", opt(590.0), 15.0);
    reg.register_band("Landsat 8-9", "cirrus", opt(1375.0), 30.0);

    reg.register_band("Planet", "blue", opt(490.0), 3.0);
    reg.register_band("Planet", "green", opt(565.0), 3.0);
    reg.register_band("Planet", "red", opt(665.0), 3.0);
    reg.register_band("Planet", "nir", opt(865.0), 3.0);

    reg.register_band("Gaofen-2", "blue", opt(485.0), 4.0);
    reg.register_band("Gaofen-2", "green", opt(555.0), 4.0);
    reg.register_band("Gaofen-2", "red", opt(660.0), 4.0);
    reg.register_band("Gaofen-2", "nir", opt(830.0), 4.0);

    reg.register_band("UAV-RGB", "red", opt(650.0), 0.05);
    reg.register_band("UAV-RGB", "green", opt(550.0), 0.05);
    reg.register_band("UAV-RGB", "blue", opt(450.0), 0.05);

    reg.register_band("DEM", "elevation", none, 10.0);

    return reg;
}

}  // namespace fomo
