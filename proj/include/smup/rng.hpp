#pragma once

#include <cstdint>

namespace smup {

/// Counter-based deterministic random stream. Every draw is a pure function
/// of (master_seed, stream_id, draw_index), so streams can be replayed,
/// split by index range, and advanced without shared state. Distinct
/// stream_ids give statistically independent streams.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}
    RngStream(uint64_t master_seed, uint64_t stream_id);

    uint64_t master_seed() const noexcept { return master_seed_; }
    uint64_t stream_id() const noexcept { return stream_id_; }
    uint64_t counter() const noexcept { return counter_; }

    /// Sequential draws (advance the counter).
    uint64_t next_u64() noexcept;
    double next_uniform() noexcept;   // in [0,1)
    double next_gaussian() noexcept;  // standard normal

    /// Random-access draws (counter untouched). bits_at(i) == the i-th
    /// next_u64 of a fresh stream.
    uint64_t bits_at(uint64_t draw_index) const noexcept;
    double uniform_at(uint64_t draw_index) const noexcept;
    double gaussian_at(uint64_t draw_index) const noexcept;

    void skip(uint64_t draws) noexcept { counter_ += draws; }

    /// Derive an independent child stream.
    RngStream substream(uint64_t child_id) const noexcept;

private:
    uint64_t master_seed_ = 0;
    uint64_t stream_id_ = 0;
    uint64_t base_ = 0;
    uint64_t counter_ = 0;
};

/// Inverse of the standard normal CDF (Wichura's AS 241, double precision).
/// Deterministic given u; used so Gaussian sampling is the same algorithm
/// everywhere.
double inverse_normal_cdf(double u);

// Stream ids reserved by the library itself.
namespace stream_ids {
inline constexpr uint64_t kPowerIterationStart = 0xA11CE5EED0000001ull;
}

}  // namespace smup
