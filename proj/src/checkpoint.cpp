#include "fomo/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fomo/error.hpp"

namespace fomo {

namespace {

constexpr char kMagic[4] = {'F', 'M', 'C', 'K'};
constexpr std::uint16_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint format requires little-endian host");

template <typename T>
void put(std::string& buf, T v) {
    char tmp[sizeof(T)];
    std::memcpy(tmp, &v, sizeof(T));
    buf.append(tmp, sizeof(T));
}

class Reader {
  public:
    Reader(const std::string& buf, const std::string& path) : buf_(buf), path_(path) {}

    template <typename T>
    T take() {
        need(sizeof(T), "field");
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::string take_bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string s = buf_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool at_end() const { return pos_ == buf_.size(); }

    void need(std::size_t n, const char* what) const {
        if (pos_ + n > buf_.size()) {
            throw FormatError("checkpoint: truncated while reading " + std::string(what) + ": " +
                              path_);
        }
    }

  private:
    const std::string& buf_;
    std::string path_;
    std::size_t pos_ = 0;
};

std::size_t dtype_size(int dtype) {
    if (dtype == 0) return 4;
    if (dtype == 1) return 8;
    throw FormatError("checkpoint: unknown dtype " + std::to_string(dtype));
}

}  // namespace

const CheckpointBlob& CheckpointData::blob(const std::string& name) const {
    for (const auto& b : blobs) {
        if (b.name == name) return b;
    }
    throw NotFoundError("checkpoint: no blob named " + name);
}

bool CheckpointData::has_blob(const std::string& name) const {
    for (const auto& b : blobs) {
        if (b.name == name) return true;
    }
    return false;
}

void save_checkpoint(const CheckpointData& data, const std::string& path) {
    std::string buf;
    buf.append(kMagic, 4);
    put<std::uint16_t>(buf, kVersion);
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(data.config_json.size()));
    buf.append(data.config_json);
    for (const auto& b : data.blobs) {
        if (b.name.size() > 0xFFFF) throw ValidationError("checkpoint: blob name too long");
        const std::size_t n = shape_numel(b.shape);
        if (b.payload.size() != n * dtype_size(b.dtype)) {
            throw ContractError("checkpoint: payload size mismatch for blob " + b.name);
        }
        put<std::uint16_t>(buf, static_cast<std::uint16_t>(b.name.size()));
        buf.append(b.name);
        put<std::uint8_t>(buf, static_cast<std::uint8_t>(b.dtype));
        put<std::uint8_t>(buf, static_cast<std::uint8_t>(b.shape.size()));
        for (auto e : b.shape) put<std::uint32_t>(buf, static_cast<std::uint32_t>(e));
        buf.append(reinterpret_cast<const char*>(b.payload.data()), b.payload.size());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("checkpoint: cannot open " + path + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw StorageError("checkpoint: write failed for " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("checkpoint: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string buf = ss.str();

    Reader r(buf, path);
    const std::string magic = r.take_bytes(4, "magic");
    if (std::memcmp(magic.data(), kMagic, 4) != 0) {
        throw FormatError("checkpoint: bad magic (want FMCK): " + path);
    }
    const auto version = r.take<std::uint16_t>();
    if (version != kVersion) {
        throw FormatError("checkpoint: unsupported version " + std::to_string(version) +
                          " (this build reads version " + std::to_string(kVersion) + "): " + path);
    }
    CheckpointData data;
    const auto cfg_len = r.take<std::uint32_t>();
    data.config_json = r.take_bytes(cfg_len, "config block");

    while (!r.at_end()) {
        CheckpointBlob b;
        const auto name_len = r.take<std::uint16_t>();
        b.name = r.take_bytes(name_len, "blob name");
        b.dtype = r.take<std::uint8_t>();
        const auto rank = r.take<std::uint8_t>();
        for (int i = 0; i < rank; ++i) b.shape.push_back(r.take<std::uint32_t>());
        const std::size_t bytes = shape_numel(b.shape) * dtype_size(b.dtype);
        const std::string payload = r.take_bytes(bytes, ("payload of " + b.name).c_str());
        b.payload.assign(payload.begin(), payload.end());
        data.blobs.push_back(std::move(b));
    }
    return data;
}

template <typename T>
Tensor<T> blob_tensor(const CheckpointBlob& b) {
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
    const int want = std::is_same_v<T, float> ? 0 : 1;
    if (b.dtype != want) {
        throw FormatError("checkpoint: blob " + b.name + " has dtype " +
                          std::string(b.dtype == 0 ? "float32" : "float64") + ", expected " +
                          (want == 0 ? "float32" : "float64"));
    }
    Tensor<T> t(b.shape);
    if (b.payload.size() != t.data.size() * sizeof(T)) {
        throw FormatError("checkpoint: blob " + b.name + " payload size mismatch");
    }
    std::memcpy(t.data.data(), b.payload.data(), b.payload.size());
    return t;
}

template Tensor<float> blob_tensor<float>(const CheckpointBlob&);
template Tensor<double> blob_tensor<double>(const CheckpointBlob&);

}  // namespace fomo
