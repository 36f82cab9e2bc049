#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <vector>

namespace gbo::fft {

using cplx = std::complex<double>;

namespace detail {

struct Plans {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

// Planning is not thread-safe in FFTW; execution with the new-array interface is.
inline const Plans& plans_for(int n) {
    static std::mutex mtx;
    static std::map<int, Plans> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<cplx> a(n), b(n);
    auto* in = reinterpret_cast<fftw_complex*>(a.data());
    auto* out = reinterpret_cast<fftw_complex*>(b.data());
    Plans p;
    unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    p.fwd = fftw_plan_dft_1d(n, in, out, FFTW_FORWARD, flags);
    p.bwd = fftw_plan_dft_1d(n, in, out, FFTW_BACKWARD, flags);
    return cache.emplace(n, p).first->second;
}

} // namespace detail

// Coefficients c_j = (1/N) sum_n f_n e^{-2 pi i j n / N}, FFT ordering.
inline std::vector<cplx> forward(const std::vector<cplx>& f) {
    const int n = static_cast<int>(f.size());
    std::vector<cplx> out(n);
    auto& p = detail::plans_for(n);
    fftw_execute_dft(p.fwd, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(f.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
    const double s = 1.0 / n;
    for (auto& c : out) c *= s;
    return out;
}

// Inverse of forward: f_n = sum_j c_j e^{2 pi i j n / N}.
inline std::vector<cplx> inverse(const std::vector<cplx>& c) {
    const int n = static_cast<int>(c.size());
    std::vector<cplx> out(n);
    auto& p = detail::plans_for(n);
    fftw_execute_dft(p.bwd, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(c.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

} // namespace gbo::fft
