#pragma once

#include <cstdint>
#include <string_view>

namespace brokerage {

// Counter-based generator: the n-th draw of a stream is a pure function of
// (key, n), so streams can be split, replayed, and run in any order.
class RngStream {
public:
    RngStream() = default;
    explicit RngStream(std::uint64_t key) : key_(key) {}

    // Derive an independent child stream identified by a label and an index.
    [[nodiscard]] RngStream substream(std::string_view role, std::uint64_t index = 0) const;

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 random bits.
    double uniform();

    [[nodiscard]] std::uint64_t key() const { return key_; }
    [[nodiscard]] std::uint64_t position() const { return counter_; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

// Stable 64-bit hash of a label (FNV-1a followed by a finalizer).
std::uint64_t hash_label(std::string_view label);

}  // namespace brokerage
