#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace flowsentinel {

/// Deterministic generator used everywhere a seed appears.
///
/// State: xoshiro256** (Blackman & Vigna), four 64-bit words seeded by
/// running splitmix64 over the user seed:
///
///     z = (s += 0x9E3779B97F4A7C15)
///     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///     return z ^ (z >> 31)
///
/// Output of next_u64(): rotl(s1 * 5, 7) * 9, followed by the reference
/// xoshiro256** state transition.
///
/// uniform():       (next_u64() >> 11) * 2^-53, in [0, 1).
/// below(n):        Lemire's multiply-shift with rejection, unbiased in [0, n).
/// normal():        Box-Muller on two uniform() draws, cosine branch only.
/// substream(id):   new Rng seeded with splitmix64(seed ^ (id * 0xD1B54A32D192ED03)).
///
/// next_u64/uniform/below/shuffle use only integer arithmetic and exact
/// double scaling, so identical seeds give identical streams on every
/// platform. normal() goes through libm log/cos and is only used for
/// synthetic data.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() noexcept;
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    std::uint64_t below(std::uint64_t n) noexcept;
    double normal() noexcept;

    Rng substream(std::uint64_t id) const noexcept;

    /// Fisher-Yates, walking from the back.
    template <class T>
    void shuffle(std::span<T> items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

}  // namespace flowsentinel
