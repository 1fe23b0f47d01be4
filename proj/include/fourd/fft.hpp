#pragma once

#include <complex>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace fourd {

/// In-place complex FFT pair for one transform length. FFTW plan creation is
/// serialized (the planner is not thread safe); execution on caller-owned
/// buffers is. FFTW_ESTIMATE keeps plans deterministic.
class Fft {
public:
    explicit Fft(std::size_t n) : n_(n) {
        if (n == 0) throw std::invalid_argument("fft size 0");
        std::vector<std::complex<double>> tmp(n);
        std::lock_guard<std::mutex> lock(planner_mutex());
        fwd_ = fftw_plan_dft_1d(int(n), reinterpret_cast<fftw_complex*>(tmp.data()),
                                reinterpret_cast<fftw_complex*>(tmp.data()), FFTW_FORWARD,
                                FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_1d(int(n), reinterpret_cast<fftw_complex*>(tmp.data()),
                                reinterpret_cast<fftw_complex*>(tmp.data()), FFTW_BACKWARD,
                                FFTW_ESTIMATE);
        if (!fwd_ || !inv_) throw std::runtime_error("fftw plan failed");
    }
    ~Fft() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
    }
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    std::size_t size() const { return n_; }

    void forward(std::complex<double>* data) const {
        fftw_execute_dft(fwd_, reinterpret_cast<fftw_complex*>(data),
                         reinterpret_cast<fftw_complex*>(data));
    }
    /// Inverse including the 1/n scale.
    void inverse(std::complex<double>* data) const {
        fftw_execute_dft(inv_, reinterpret_cast<fftw_complex*>(data),
                         reinterpret_cast<fftw_complex*>(data));
        const double s = 1.0 / double(n_);
        for (std::size_t i = 0; i < n_; ++i) data[i] *= s;
    }

private:
    static std::mutex& planner_mutex() {
        static std::mutex m;
        return m;
    }
    std::size_t n_;
    fftw_plan fwd_;
    fftw_plan inv_;
};

/// FFT-bin baseband frequency in cycles/sample: k/n mapped to [-1/2, 1/2).
inline double bin_frequency(std::size_t k, std::size_t n) {
    const double f = double(k) / double(n);
    return f < 0.5 ? f : f - 1.0;
}

} // namespace fourd
