#pragma once

#include <complex>
#include <vector>

#include "mixkinetics/common.hpp"

namespace mixkinetics {

// Small self-contained complex FFT. Radix-2 iterative for power-of-two sizes,
// naive DFT fallback otherwise (spatial grids here are <= a few hundred points).
class Fft {
  public:
    using cplx = std::complex<double>;

    explicit Fft(std::size_t n) : n_(n) {
        pow2_ = (n & (n - 1)) == 0 && n > 0;
        tw_.resize(n_);
        for (std::size_t k = 0; k < n_; ++k) {
            double ph = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n_);
            tw_[k] = cplx(std::cos(ph), std::sin(ph));
        }
    }

    std::size_t size() const { return n_; }

    void forward(cplx* a) const { transform(a, false); }
    void inverse(cplx* a) const {
        transform(a, true);
        for (std::size_t i = 0; i < n_; ++i) a[i] /= static_cast<double>(n_);
    }

    // signed integer wavenumber for bin k
    static long wavenumber(std::size_t k, std::size_t n) {
        return (k <= n / 2) ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
    }

  private:
    void transform(cplx* a, bool inv) const {
        if (!pow2_) {
            dft(a, inv);
            return;
        }
        std::size_t n = n_;
        for (std::size_t i = 1, j = 0; i < n; ++i) {
            std::size_t bit = n >> 1;
            for (; j & bit; bit >>= 1) j ^= bit;
            j ^= bit;
            if (i < j) std::swap(a[i], a[j]);
        }
        for (std::size_t len = 2; len <= n; len <<= 1) {
            std::size_t step = n / len;
            for (std::size_t i = 0; i < n; i += len) {
                for (std::size_t k = 0; k < len / 2; ++k) {
                    cplx w = tw_[k * step];
                    if (inv) w = std::conj(w);
                    cplx u = a[i + k];
                    cplx v = a[i + k + len / 2] * w;
                    a[i + k] = u + v;
                    a[i + k + len / 2] = u - v;
                }
            }
        }
    }

    void dft(cplx* a, bool inv) const {
        std::vector<cplx> out(n_, cplx(0, 0));
        for (std::size_t k = 0; k < n_; ++k)
            for (std::size_t j = 0; j < n_; ++j) {
                cplx w = tw_[(k * j) % n_];
                out[k] += a[j] * (inv ? std::conj(w) : w);
            }
        for (std::size_t i = 0; i < n_; ++i) a[i] = out[i];
    }

    std::size_t n_;
    bool pow2_;
    std::vector<cplx> tw_;
};

// d/dx by Fourier differentiation on a periodic grid of length lx.
// Data strided: f[i*stride], i in [0,nx).
inline void spectral_ddx(const Fft& fft, double lx, const double* f, double* out,
                         std::size_t stride = 1) {
    std::size_t nx = fft.size();
    std::vector<std::complex<double>> buf(nx);
    for (std::size_t i = 0; i < nx; ++i) buf[i] = f[i * stride];
    fft.forward(buf.data());
    for (std::size_t k = 0; k < nx; ++k) {
        long kk = Fft::wavenumber(k, nx);
        if (2 * k == nx) kk = 0;  // Nyquist mode has no well-defined derivative sign
        buf[k] *= std::complex<double>(0.0, 2.0 * M_PI * static_cast<double>(kk) / lx);
    }
    fft.inverse(buf.data());
    for (std::size_t i = 0; i < nx; ++i) out[i * stride] = buf[i].real();
}

}  // namespace mixkinetics
