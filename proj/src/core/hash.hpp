#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace risknet {

// 64-bit FNV-1a, used for cache keys and artifact content hashes.
class Fnv1a {
public:
    Fnv1a& update(const void* data, std::size_t size);
    Fnv1a& update(std::string_view s) { return update(s.data(), s.size()); }
    Fnv1a& update(std::span<const double> xs) { return update(xs.data(), xs.size_bytes()); }
    Fnv1a& update(std::uint64_t x) { return update(&x, sizeof x); }

    std::uint64_t digest() const { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string to_hex(std::uint64_t x);
std::uint64_t hash_bytes(std::string_view bytes);
std::string hash_file_hex(const std::string& path);

// SplitMix64 finalizer; derives independent per-task seeds from a global seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace risknet
