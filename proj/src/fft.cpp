#include "fft.hpp"

#include <mutex>
#include <vector>

namespace grwlab {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

Fft::Fft(int n) : n_(n) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(n));
    auto* p = reinterpret_cast<fftw_complex*>(buf.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fwd_ = fftw_plan_dft_1d(n, p, p, FFTW_FORWARD, flags);
    inv_ = fftw_plan_dft_1d(n, p, p, FFTW_BACKWARD, flags);
}

Fft::~Fft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
}

void Fft::forward(std::complex<double>* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(fwd_, p, p);
}

void Fft::inverse(std::complex<double>* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(inv_, p, p);
    const double scale = 1.0 / n_;
    for (int i = 0; i < n_; ++i) data[i] *= scale;
}

FftMany::FftMany(int n, int howmany) : n_(n), howmany_(howmany) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(n) * howmany);
    auto* p = reinterpret_cast<fftw_complex*>(buf.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fwd_ = fftw_plan_many_dft(1, &n, howmany, p, nullptr, 1, n, p, nullptr, 1, n,
                              FFTW_FORWARD, flags);
    inv_ = fftw_plan_many_dft(1, &n, howmany, p, nullptr, 1, n, p, nullptr, 1, n,
                              FFTW_BACKWARD, flags);
}

FftMany::~FftMany() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
}

void FftMany::forward(std::complex<double>* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(fwd_, p, p);
}

void FftMany::inverse(std::complex<double>* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(inv_, p, p);
    const double scale = 1.0 / n_;
    const long total = static_cast<long>(n_) * howmany_;
    for (long i = 0; i < total; ++i) data[i] *= scale;
}

}  // namespace grwlab
