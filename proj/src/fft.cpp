#include "stochav/fft.hpp"

namespace stochav {

void fft_inplace(Cplx* data, int n, bool inverse) {
    if (n < 1 || (n & (n - 1)) != 0)
        throw Error(ErrorClass::validation, "fft length must be a power of two");
    // bit-reversal permutation
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j |= bit;
        if (i < j) std::swap(data[i], data[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double angle = (inverse ? 2.0 : -2.0) * M_PI / len;
        const Cplx wlen(std::cos(angle), std::sin(angle));
        for (int i = 0; i < n; i += len) {
            Cplx w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                const Cplx u = data[i + k];
                const Cplx v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

void fft_nd(std::vector<Cplx>& data, const std::vector<int>& dims, bool inverse) {
    std::int64_t total = 1;
    for (int m : dims) total *= m;
    if (static_cast<std::int64_t>(data.size()) != total)
        throw Error(ErrorClass::validation, "fft_nd: size mismatch");

    const int nd = static_cast<int>(dims.size());
    std::vector<Cplx> line;
    std::int64_t stride = 1;
    for (int axis = nd - 1; axis >= 0; --axis) {
        const int m = dims[axis];
        line.resize(m);
        const std::int64_t block = stride * m;
        for (std::int64_t base = 0; base < total; base += block) {
            for (std::int64_t off = 0; off < stride; ++off) {
                for (int k = 0; k < m; ++k) line[k] = data[base + off + k * stride];
                fft_inplace(line.data(), m, inverse);
                for (int k = 0; k < m; ++k) data[base + off + k * stride] = line[k];
            }
        }
        stride *= m;
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(total);
        for (auto& v : data) v *= scale;
    }
}

}  // namespace stochav
