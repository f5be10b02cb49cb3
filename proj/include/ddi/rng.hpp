#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace ddi {

/// Seeded generator with portable uniform/shuffle helpers. The std
/// distributions are implementation-defined, so value mapping is done here to
/// keep checkpoints identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Independent stream derived from a root seed and a stream name
    /// ("init", "shuffle", "dropout", ...).
    static Rng stream(std::uint64_t root_seed, std::string_view name);

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    bool bernoulli(double p) { return uniform01() < p; }
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace ddi
