#ifndef MAGSCHROD_RNG_HPP
#define MAGSCHROD_RNG_HPP

#include <cstdint>
#include <random>
#include <string>

namespace msw {

/**
 * All randomness flows from one master seed; each module draws from a named
 * substream so that parallel schedules cannot perturb the sample sequence.
 */
class RngStream {
  public:
    RngStream(std::uint64_t master_seed, const std::string& substream) {
        std::uint64_t h = 1469598103934665603ull;
        for (char c : substream) {
            h ^= std::uint64_t(static_cast<unsigned char>(c));
            h *= 1099511628211ull;
        }
        std::seed_seq seq{std::uint32_t(master_seed), std::uint32_t(master_seed >> 32),
                          std::uint32_t(h), std::uint32_t(h >> 32)};
        eng_.seed(seq);
    }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(eng_);
    }
    int uniform_int(int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(eng_);
    }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }

    std::mt19937_64& engine() { return eng_; }

  private:
    std::mt19937_64 eng_;
};

}  // namespace msw

#endif
