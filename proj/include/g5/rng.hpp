#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace g5 {

/// Deterministic simulation randomness. Every random draw in a run flows
/// from one 64-bit seed so equal seeds give byte-identical traces. The
/// engine output is consumed directly (no std distributions, whose results
/// are not pinned by the standard).
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }
    uint32_t next_u32() { return static_cast<uint32_t>(eng_() >> 32); }

    /// Unbiased draw in [0, n). n must be > 0.
    uint64_t below(uint64_t n) {
        const uint64_t max = std::numeric_limits<uint64_t>::max();
        const uint64_t limit = max - max % n;
        uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

    bool chance(uint64_t num, uint64_t den) { return below(den) < num; }

    std::string digits(std::size_t n) {
        std::string s;
        s.reserve(n);
        for (std::size_t i = 0; i < n; ++i) s.push_back(static_cast<char>('0' + below(10)));
        return s;
    }

    std::vector<uint8_t> bytes(std::size_t n) {
        std::vector<uint8_t> out(n);
        for (auto& b : out) b = static_cast<uint8_t>(below(256));
        return out;
    }

    /// Stable seed derivation for independent sub-streams (FNV-1a over the
    /// seed and labels). Used to give every matrix cell its own generator so
    /// cells can run in any order, or in parallel, with identical results.
    static uint64_t derive(uint64_t seed, std::string_view a, std::string_view b = {}) {
        uint64_t h = 1469598103934665603ull;
        auto mix = [&h](uint8_t byte) {
            h ^= byte;
            h *= 1099511628211ull;
        };
        for (int i = 0; i < 8; ++i) mix(static_cast<uint8_t>(seed >> (8 * i)));
        for (char c : a) mix(static_cast<uint8_t>(c));
        mix(0x1f);
        for (char c : b) mix(static_cast<uint8_t>(c));
        return h;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace g5
