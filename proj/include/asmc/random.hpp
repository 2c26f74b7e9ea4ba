#ifndef ASMC_RANDOM_HPP
#define ASMC_RANDOM_HPP

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>
#include <span>

namespace asmc {

// What a random stream is used for. Part of the stream key so that, e.g., the
// resampling stream of level k never coincides with a particle stream.
enum class StreamPurpose : std::uint64_t {
    propagate = 1,
    resample = 2,
    initialize = 3,
    replicate = 4,
    baseline = 5,
    proposal = 6,
    test = 7,
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// Derives a 64-bit seed from (seed, purpose, level, index). Pure function, so a
// particle's randomness depends only on its identity and never on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t seed, StreamPurpose purpose,
                                    std::uint64_t level, std::uint64_t index) noexcept {
    std::uint64_t h = detail::splitmix64(seed);
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(purpose));
    h = detail::splitmix64(h ^ (level * 0xd6e8feb86659fd93ULL));
    h = detail::splitmix64(h ^ (index * 0xa0761d6478bd642fULL));
    return h;
}

// One independent random stream: an engine plus the cached normal sampler.
class Stream {
public:
    using engine_type = std::mt19937_64;

    explicit Stream(std::uint64_t seed) : engine_(seed) {}
    Stream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t level, std::uint64_t index)
        : engine_(derive_seed(seed, purpose, level, index)) {}

    double normal() { return normal_(engine_); }
    void fill_normal(std::span<double> out) {
        for (double& v : out) v = normal_(engine_);
    }
    double uniform() { return uniform_(engine_); }
    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }
    bool bernoulli(double p) { return uniform() < p; }

    engine_type& engine() noexcept { return engine_; }

private:
    engine_type engine_;
    boost::random::normal_distribution<double> normal_{0.0, 1.0};  // ziggurat
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace asmc

#endif  // ASMC_RANDOM_HPP
