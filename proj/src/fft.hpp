#pragma once

#include <complex>

#include <fftw3.h>

namespace grwlab {

// Thin in-place 1D FFT. Plan creation is serialized internally (FFTW planner
// is not thread-safe); execution is safe from any thread.
class Fft {
public:
    explicit Fft(int n);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    int size() const { return n_; }

    void forward(std::complex<double>* data) const;  // unnormalized
    void inverse(std::complex<double>* data) const;  // divides by n

private:
    int n_;
    fftw_plan fwd_;
    fftw_plan inv_;
};

// Batched in-place FFT over `howmany` contiguous length-n columns.
class FftMany {
public:
    FftMany(int n, int howmany);
    ~FftMany();
    FftMany(const FftMany&) = delete;
    FftMany& operator=(const FftMany&) = delete;

    void forward(std::complex<double>* data) const;  // unnormalized
    void inverse(std::complex<double>* data) const;  // divides by n

private:
    int n_;
    int howmany_;
    fftw_plan fwd_;
    fftw_plan inv_;
};

}  // namespace grwlab
