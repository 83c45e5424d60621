#include "stochav/rng.hpp"

namespace stochav {

namespace {
constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::uint32_t c[4], std::uint32_t k0, std::uint32_t k1) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(c[0]) * kPhiloxM0;
    const std::uint64_t p1 = static_cast<std::uint64_t>(c[2]) * kPhiloxM1;
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t c1 = c[1], c3 = c[3];
    c[0] = hi1 ^ c1 ^ k0;
    c[1] = lo1;
    c[2] = hi0 ^ c3 ^ k1;
    c[3] = lo0;
}

// (w + 1/2) / 2^32: uniform on (0,1), never hitting the endpoints.
inline double to_unit(std::uint32_t w) {
    return (static_cast<double>(w) + 0.5) * (1.0 / 4294967296.0);
}
}  // namespace

std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        std::uint64_t key) {
    std::uint32_t c[4] = {counter[0], counter[1], counter[2], counter[3]};
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int r = 0; r < 10; ++r) {
        philox_round(c, k0, k1);
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return {c[0], c[1], c[2], c[3]};
}

std::array<double, 4> gaussian_block(std::uint64_t seed, std::uint64_t stream,
                                     std::uint32_t substream, std::uint64_t block) {
    const std::array<std::uint32_t, 4> counter = {
        static_cast<std::uint32_t>(block),
        static_cast<std::uint32_t>(block >> 32),
        substream,
        static_cast<std::uint32_t>(stream) ^ static_cast<std::uint32_t>(stream >> 32),
    };
    // fold the high stream bits into the key so streams beyond 2^32 stay distinct
    const std::uint64_t key = seed ^ (stream << 20);
    const auto w = philox4x32(counter, key);

    const double u0 = to_unit(w[0]), u1 = to_unit(w[1]);
    const double u2 = to_unit(w[2]), u3 = to_unit(w[3]);
    const double r0 = std::sqrt(-2.0 * std::log(u0));
    const double r1 = std::sqrt(-2.0 * std::log(u2));
    const double a0 = 2.0 * M_PI * u1, a1 = 2.0 * M_PI * u3;
    return {r0 * std::cos(a0), r0 * std::sin(a0), r1 * std::cos(a1), r1 * std::sin(a1)};
}

NoisePath NoisePath::generate(const NoiseSpec& spec, std::int64_t n_steps) {
    NoisePath path;
    path.spec = spec;
    path.n_steps = n_steps;
    path.increments.resize(static_cast<size_t>(n_steps) * spec.n_streams);
    for (std::int64_t j = 0; j < n_steps; ++j)
        for (int k = 0; k < spec.n_streams; ++k)
            path.increments[static_cast<size_t>(j) * spec.n_streams + k] = spec.increment(j, k);
    return path;
}

double NoisePath::sum(int k, std::int64_t upto) const {
    double s = 0;
    for (std::int64_t j = 0; j < upto; ++j) s += at(j, k);
    return s;
}

NoisePath NoisePath::aggregate(int factor) const {
    if (factor < 1 || n_steps % factor != 0)
        throw Error(ErrorClass::validation, "aggregate: factor must divide n_steps");
    NoisePath out;
    out.spec = spec;
    out.spec.dt = spec.dt * factor;
    out.n_steps = n_steps / factor;
    out.increments.assign(static_cast<size_t>(out.n_steps) * spec.n_streams, 0.0);
    for (std::int64_t j = 0; j < n_steps; ++j)
        for (int k = 0; k < spec.n_streams; ++k)
            out.increments[static_cast<size_t>(j / factor) * spec.n_streams + k] += at(j, k);
    return out;
}

}  // namespace stochav
