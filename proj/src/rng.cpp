#include "rmt_transfer/rng.hpp"

namespace rmt {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

RandomSource RandomSource::substream(std::uint64_t index) const {
    return RandomSource(splitmix64(seed_ ^ splitmix64(index + 1)));
}

double RandomSource::normal() { return normal_(engine_); }

double RandomSource::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

std::uint64_t RandomSource::below(std::uint64_t bound) {
    return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
}

void RandomSource::fill_normal(Eigen::Ref<Eigen::MatrixXd> out) {
    for (Eigen::Index j = 0; j < out.cols(); ++j)
        for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = normal_(engine_);
}

}  // namespace rmt
