#pragma once

#include <cstdint>
#include <random>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace risknet {

// Engine plus Boost.Random samplers. Boost's distribution algorithms are fixed
// in its headers, so a seed reproduces the same stream on every standard
// library (std:: distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on the open interval (0, 1).
    double uniform() {
        for (;;) {
            const double u = boost::random::uniform_01<double>{}(engine_);
            if (u > 0.0) return u;
        }
    }
    double normal() { return boost::random::normal_distribution<double>{}(engine_); }
    double chi_squared(double dof) {
        return 2.0 * boost::random::gamma_distribution<double>{0.5 * dof, 1.0}(engine_);
    }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace risknet
