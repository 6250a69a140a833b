#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace rmt {

std::uint64_t splitmix64(std::uint64_t x);

// Seedable generator with deterministic substream derivation.
// substream(k) depends only on (seed, k), never on how many draws were made,
// so Monte Carlo trials can be scheduled in any order.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }
    RandomSource substream(std::uint64_t index) const;

    double normal();
    double uniform();  // [0, 1)
    std::uint64_t below(std::uint64_t bound);  // uniform on [0, bound)

    void fill_normal(Eigen::Ref<Eigen::MatrixXd> out);
    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace rmt
