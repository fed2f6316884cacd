#pragma once

#include <complex>
#include <vector>

namespace visco2d {

/// Cached FFTW plans for one grid size. Instances are created once per n and
/// shared; plan creation is serialized, execution on distinct buffers is
/// thread-safe. The constructor asserts the transform convention
/// (unnormalized forward, normalized inverse) with a delta-function
/// round-trip and throws if the linked FFTW misbehaves.
class FftEngine {
  public:
    /// Shared engine for an n x n grid (n >= 4). Never freed.
    static const FftEngine& get(int n);

    /// In-place unnormalized forward transform of an n*n buffer.
    void forward(std::complex<double>* data) const;

    /// In-place inverse transform, normalized by 1/n^2.
    void inverse(std::complex<double>* data) const;

    int n() const { return n_; }

    FftEngine(const FftEngine&) = delete;
    FftEngine& operator=(const FftEngine&) = delete;
    ~FftEngine();

  private:
    explicit FftEngine(int n);

    int n_;
    void* plan_fwd_;  // fftw_plan
    void* plan_bwd_;
};

}  // namespace visco2d
