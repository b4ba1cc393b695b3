#include "brokerage/rng.hpp"

namespace brokerage {

std::uint64_t mix64(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_label(std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix64(h);
}

RngStream RngStream::substream(std::string_view role, std::uint64_t index) const {
    std::uint64_t k = mix64(key_ ^ hash_label(role));
    k = mix64(k + 0x632be59bd9b4e019ULL * (index + 1));
    return RngStream(k);
}

std::uint64_t RngStream::next_u64() {
    const std::uint64_t c = counter_++;
    return mix64(mix64(key_ + c * 0xd1b54a32d192ed03ULL) ^ key_);
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

}  // namespace brokerage
