#include "visco2d/field.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <iostream>

#include "visco2d/runtime.hpp"

namespace visco2d {

ScalarField::ScalarField(const GridSpec& grid)
    : grid_(grid),
      re_(static_cast<size_t>(grid.size()), 0.0),
      sp_(static_cast<size_t>(grid.size()), cplx(0.0, 0.0)) {
    grid_.validate();
}

ScalarField::ScalarField(const ScalarField& other) : grid_(other.grid_) {
    std::lock_guard<std::mutex> lock(other.mutex_);
    re_ = other.re_;
    sp_ = other.sp_;
    have_real_ = other.have_real_;
    have_spec_ = other.have_spec_;
}

ScalarField& ScalarField::operator=(const ScalarField& other) {
    if (this == &other) return *this;
    std::scoped_lock lock(mutex_, other.mutex_);
    grid_ = other.grid_;
    re_ = other.re_;
    sp_ = other.sp_;
    have_real_ = other.have_real_;
    have_spec_ = other.have_spec_;
    return *this;
}

ScalarField::ScalarField(ScalarField&& other) noexcept : grid_(other.grid_) {
    std::lock_guard<std::mutex> lock(other.mutex_);
    re_ = std::move(other.re_);
    sp_ = std::move(other.sp_);
    have_real_ = other.have_real_;
    have_spec_ = other.have_spec_;
}

ScalarField& ScalarField::operator=(ScalarField&& other) noexcept {
    if (this == &other) return *this;
    std::scoped_lock lock(mutex_, other.mutex_);
    grid_ = other.grid_;
    re_ = std::move(other.re_);
    sp_ = std::move(other.sp_);
    have_real_ = other.have_real_;
    have_spec_ = other.have_spec_;
    return *this;
}

void ScalarField::sync_real() const {
    std::lock_guard<std::mutex> lock(mutex_);
    if (have_real_) return;
    std::vector<cplx> work(sp_);
    FftEngine::get(grid_.n).inverse(work.data());
    for (size_t i = 0; i < re_.size(); ++i) re_[i] = work[i].real();
    have_real_ = true;
}

void ScalarField::sync_spectral() const {
    std::lock_guard<std::mutex> lock(mutex_);
    if (have_spec_) return;
    for (size_t i = 0; i < sp_.size(); ++i) sp_[i] = cplx(re_[i], 0.0);
    FftEngine::get(grid_.n).forward(sp_.data());
    have_spec_ = true;
}

std::span<const double> ScalarField::real() const {
    sync_real();
    return {re_.data(), re_.size()};
}

std::span<const cplx> ScalarField::spectral() const {
    sync_spectral();
    return {sp_.data(), sp_.size()};
}

std::vector<double>& ScalarField::mutable_real() {
    sync_real();
    have_spec_ = false;
    return re_;
}

std::vector<cplx>& ScalarField::mutable_spectral() {
    sync_spectral();
    have_real_ = false;
    return sp_;
}

void ScalarField::fill_from(const std::function<double(double, double)>& f) {
    auto& r = mutable_real();
    const int n = grid_.n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) r[static_cast<size_t>(grid_.index(i, j))] = f(grid_.x1(i), grid_.x2(j));
}

double ScalarField::l2_sq() const {
    auto sp = spectral();
    double s = 0.0;
    for (const auto& c : sp) s += std::norm(c);
    const double n2 = static_cast<double>(grid_.n) * grid_.n;
    return s * GridSpec::box_area() / (n2 * n2);
}

double ScalarField::linf() const {
    auto r = real();
    double m = 0.0;
    for (double v : r) m = std::max(m, std::abs(v));
    return m;
}

double ScalarField::mean() const {
    auto sp = spectral();
    const double n2 = static_cast<double>(grid_.n) * grid_.n;
    return sp[0].real() / n2;
}

double inner(const ScalarField& f, const ScalarField& g) {
    auto a = f.spectral();
    auto b = g.spectral();
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    const double n2 = static_cast<double>(f.grid().n) * f.grid().n;
    return s * GridSpec::box_area() / (n2 * n2);
}

double VectorField::linf() const {
    auto r0 = comp(0).real();
    auto r1 = comp(1).real();
    double m = 0.0;
    for (size_t i = 0; i < r0.size(); ++i) m = std::max(m, r0[i] * r0[i] + r1[i] * r1[i]);
    return std::sqrt(m);
}

double MatrixField::frobenius_linf() const {
    auto r00 = comp(0, 0).real();
    auto r01 = comp(0, 1).real();
    auto r10 = comp(1, 0).real();
    auto r11 = comp(1, 1).real();
    double m = 0.0;
    for (size_t i = 0; i < r00.size(); ++i) {
        const double s = r00[i] * r00[i] + r01[i] * r01[i] + r10[i] * r10[i] + r11[i] * r11[i];
        m = std::max(m, s);
    }
    return std::sqrt(m);
}

MatrixField identity_matrix(const GridSpec& grid) {
    MatrixField m(grid);
    for (int i = 0; i < 2; ++i) {
        auto& r = m.comp(i, i).mutable_real();
        for (auto& v : r) v = 1.0;
    }
    return m;
}

namespace {
std::atomic<int> g_thread_hint{1};
}

int thread_hint() { return g_thread_hint.load(); }
void set_thread_hint(int threads) { g_thread_hint.store(std::max(1, threads)); }

namespace logging {
namespace {
std::function<void(const std::string&)>& handler() {
    static auto* h = new std::function<void(const std::string&)>(
        [](const std::string& msg) { std::cerr << "[visco2d] warning: " << msg << "\n"; });
    return *h;
}
}  // namespace

void warn(const std::string& message) { handler()(message); }
void set_handler(std::function<void(const std::string&)> h) { handler() = std::move(h); }
}  // namespace logging

}  // namespace visco2d
