#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace fomo {

// FNV-1a, 64-bit. Used to fingerprint parameter blobs so immutability can be
// asserted without keeping a full copy.
class Fnv1a {
  public:
    void update(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            state_ ^= static_cast<std::uint64_t>(p[i]);
            state_ *= 0x100000001b3ULL;
        }
    }

    template <typename T>
    void update_values(const std::vector<T>& v) {
        update(v.data(), v.size() * sizeof(T));
    }

    void update_string(const std::string& s) { update(s.data(), s.size()); }

    std::uint64_t digest() const { return state_; }

  private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a(const void* data, std::size_t len) {
    Fnv1a h;
    h.update(data, len);
    return h.digest();
}

}  // namespace fomo
