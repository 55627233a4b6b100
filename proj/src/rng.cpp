#include "smup/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace smup {

namespace {

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer: bijective 64-bit avalanche mix.
inline uint64_t mix64(uint64_t z) noexcept {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(uint64_t master_seed, uint64_t stream_id)
    : master_seed_(master_seed), stream_id_(stream_id) {
    base_ = mix64(mix64(master_seed) + stream_id * 0xD1342543DE82EF95ull);
}

uint64_t RngStream::bits_at(uint64_t draw_index) const noexcept {
    return mix64(base_ + draw_index * kGolden);
}

uint64_t RngStream::next_u64() noexcept { return bits_at(counter_++); }

double RngStream::uniform_at(uint64_t draw_index) const noexcept {
    // 53-bit mantissa, shifted into (0,1] so log() stays finite.
    return static_cast<double>((bits_at(draw_index) >> 11) + 1) * 0x1.0p-53;
}

double RngStream::next_uniform() noexcept { return uniform_at(counter_++); }

double RngStream::gaussian_at(uint64_t draw_index) const noexcept {
    return inverse_normal_cdf(uniform_at(draw_index));
}

double RngStream::next_gaussian() noexcept { return gaussian_at(counter_++); }

RngStream RngStream::substream(uint64_t child_id) const noexcept {
    return RngStream(master_seed_, mix64(base_ + child_id));
}

double inverse_normal_cdf(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        if (u == 0.0 || u == 1.0) {
            throw std::invalid_argument("inverse_normal_cdf: u must be in (0,1)");
        }
        throw std::invalid_argument("inverse_normal_cdf: u out of range");
    }

    const double q = u - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) *
                        r +
                    4.5921953931549871457e4) *
                       r +
                   1.3731693765509461125e4) *
                      r +
                  1.9715909503065514427e3) *
                     r +
                 1.3314166789178437745e2) *
                    r +
                3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) *
                        r +
                    2.1213794301586595867e4) *
                       r +
                   5.3941960214247511077e3) *
                      r +
                  6.8718700749205790830e2) *
                     r +
                 4.2313330701600911252e1) *
                    r +
                1.0);
    }

    double r = (q < 0.0) ? u : 1.0 - u;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) *
                       r +
                   1.27045825245236838258e0) *
                      r +
                  3.64784832476320460504e0) *
                     r +
                 5.76949722146069140550e0) *
                    r +
                4.63033784615654529590e0) *
                   r +
               1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) *
                       r +
                   1.48103976427480074590e-1) *
                      r +
                  6.89767334985100004550e-1) *
                     r +
                 1.67638483018380384940e0) *
                    r +
                2.05319162663775882187e0) *
                   r +
               1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) *
                       r +
                   2.65321895265761230930e-2) *
                      r +
                  2.96560571828504891230e-1) *
                     r +
                 1.78482653991729133580e0) *
                    r +
                5.46378491116411436990e0) *
                   r +
               6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) *
                       r +
                   7.86869131145613259100e-4) *
                      r +
                  1.48753612908506148525e-2) *
                     r +
                 1.36929880922735805310e-1) *
                    r +
                5.99832206555887937690e-1) *
                   r +
               1.0);
    }
    return (q < 0.0) ? -val : val;
}

}  // namespace smup
