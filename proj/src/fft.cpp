#include "visco2d/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

namespace visco2d {

namespace {
std::mutex g_registry_mutex;
std::map<int, std::unique_ptr<FftEngine>>& registry() {
    static auto* r = new std::map<int, std::unique_ptr<FftEngine>>();
    return *r;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

/// Thread-local aligned scratch, one per grid size, for callers whose buffers
/// do not match the plan alignment.
fftw_complex* scratch_for(int n) {
    struct Free {
        void operator()(fftw_complex* p) const { fftw_free(p); }
    };
    thread_local std::map<int, std::unique_ptr<fftw_complex[], Free>> cache;
    auto& slot = cache[n];
    if (!slot)
        slot.reset(static_cast<fftw_complex*>(
            fftw_malloc(sizeof(fftw_complex) * static_cast<size_t>(n) * n)));
    return slot.get();
}
}  // namespace

struct FftEngineDetail {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    int alignment = 0;
};

FftEngine::FftEngine(int n) : n_(n) {
    const size_t total = static_cast<size_t>(n) * n;
    fftw_complex* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
    if (!buf) throw std::bad_alloc();
    auto* d = new FftEngineDetail;
    // FFTW_ESTIMATE picks plans deterministically (no timing), which keeps
    // independent processes bit-identical; buffers are aligned so the SIMD
    // codelets stay available.
    d->fwd = fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    d->bwd = fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    d->alignment = fftw_alignment_of(reinterpret_cast<double*>(buf));
    plan_fwd_ = d;
    plan_bwd_ = nullptr;
    if (!d->fwd || !d->bwd) {
        fftw_free(buf);
        throw std::runtime_error("fftw planning failed");
    }

    // Startup convention check: forward of a delta is the all-ones spectrum,
    // and the normalized inverse restores the delta.
    std::memset(buf, 0, sizeof(fftw_complex) * total);
    buf[0][0] = 1.0;
    fftw_execute_dft(d->fwd, buf, buf);
    for (size_t i = 0; i < total; ++i)
        if (std::abs(buf[i][0] - 1.0) > 1e-12 || std::abs(buf[i][1]) > 1e-12)
            throw std::runtime_error("fft convention check failed (forward)");
    fftw_execute_dft(d->bwd, buf, buf);
    if (std::abs(buf[0][0] / total - 1.0) > 1e-12)
        throw std::runtime_error("fft convention check failed (round trip)");
    fftw_free(buf);
}

FftEngine::~FftEngine() {
    auto* d = static_cast<FftEngineDetail*>(plan_fwd_);
    fftw_destroy_plan(d->fwd);
    fftw_destroy_plan(d->bwd);
    delete d;
}

const FftEngine& FftEngine::get(int n) {
    if (n < 4) throw std::invalid_argument("FftEngine: n too small: " + std::to_string(n));
    std::lock_guard<std::mutex> lock(g_registry_mutex);
    auto& slot = registry()[n];
    if (!slot) slot = std::unique_ptr<FftEngine>(new FftEngine(n));
    return *slot;
}

namespace {
void execute(const FftEngineDetail* d, fftw_plan plan, std::complex<double>* data, int n,
             bool normalize) {
    const size_t total = static_cast<size_t>(n) * n;
    fftw_complex* raw = as_fftw(data);
    if (fftw_alignment_of(reinterpret_cast<double*>(raw)) == d->alignment) {
        fftw_execute_dft(plan, raw, raw);
    } else {
        fftw_complex* buf = scratch_for(n);
        std::memcpy(buf, raw, sizeof(fftw_complex) * total);
        fftw_execute_dft(plan, buf, buf);
        std::memcpy(raw, buf, sizeof(fftw_complex) * total);
    }
    if (normalize) {
        const double scale = 1.0 / static_cast<double>(total);
        for (size_t i = 0; i < total; ++i) data[i] *= scale;
    }
}
}  // namespace

void FftEngine::forward(std::complex<double>* data) const {
    auto* d = static_cast<const FftEngineDetail*>(plan_fwd_);
    execute(d, d->fwd, data, n_, false);
}

void FftEngine::inverse(std::complex<double>* data) const {
    auto* d = static_cast<const FftEngineDetail*>(plan_fwd_);
    execute(d, d->bwd, data, n_, true);
}

}  // namespace visco2d
