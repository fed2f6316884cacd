#pragma once

#include <array>
#include <complex>
#include <functional>
#include <mutex>
#include <span>
#include <vector>

#include "visco2d/fft.hpp"
#include "visco2d/grid.hpp"

namespace visco2d {

using cplx = std::complex<double>;

/// Real scalar field on the torus with a lazily synchronized spectral view.
///
/// Both views are sized at construction and never reallocate, so spans stay
/// valid for the field's lifetime. Synchronization is guarded by an interior
/// mutex: concurrent reads are safe, concurrent writers to one field are not.
class ScalarField {
  public:
    explicit ScalarField(const GridSpec& grid);
    ScalarField(const ScalarField& other);
    ScalarField& operator=(const ScalarField& other);
    ScalarField(ScalarField&& other) noexcept;
    ScalarField& operator=(ScalarField&& other) noexcept;

    const GridSpec& grid() const { return grid_; }

    /// Read access; transforms on demand.
    std::span<const double> real() const;
    std::span<const cplx> spectral() const;

    /// Write access; invalidates the other view.
    std::vector<double>& mutable_real();
    std::vector<cplx>& mutable_spectral();

    void fill_from(const std::function<double(double, double)>& f);

    /// L2 norm over the box, evaluated in spectral space (Parseval).
    double l2_sq() const;
    double linf() const;
    /// Box average.
    double mean() const;

  private:
    void sync_real() const;
    void sync_spectral() const;

    GridSpec grid_;
    mutable std::vector<double> re_;
    mutable std::vector<cplx> sp_;
    mutable bool have_real_ = true;
    mutable bool have_spec_ = true;
    mutable std::mutex mutex_;
};

/// L2 inner product <f, g> over the box (spectral evaluation).
double inner(const ScalarField& f, const ScalarField& g);

class VectorField {
  public:
    explicit VectorField(const GridSpec& grid) : c_{ScalarField(grid), ScalarField(grid)} {}

    const GridSpec& grid() const { return c_[0].grid(); }
    ScalarField& comp(int i) { return c_[static_cast<size_t>(i)]; }
    const ScalarField& comp(int i) const { return c_[static_cast<size_t>(i)]; }

    double l2_sq() const { return c_[0].l2_sq() + c_[1].l2_sq(); }
    /// Max over the grid of the pointwise Euclidean magnitude.
    double linf() const;

  private:
    std::array<ScalarField, 2> c_;
};

/// 2x2 matrix field; comp(i, j) is row i, column j.
class MatrixField {
  public:
    explicit MatrixField(const GridSpec& grid)
        : c_{ScalarField(grid), ScalarField(grid), ScalarField(grid), ScalarField(grid)} {}

    const GridSpec& grid() const { return c_[0].grid(); }
    ScalarField& comp(int i, int j) { return c_[static_cast<size_t>(2 * i + j)]; }
    const ScalarField& comp(int i, int j) const { return c_[static_cast<size_t>(2 * i + j)]; }

    double l2_sq() const {
        return c_[0].l2_sq() + c_[1].l2_sq() + c_[2].l2_sq() + c_[3].l2_sq();
    }
    /// Max over the grid of the pointwise Frobenius norm.
    double frobenius_linf() const;

  private:
    std::array<ScalarField, 4> c_;
};

/// Constant identity matrix field.
MatrixField identity_matrix(const GridSpec& grid);

namespace logging {
/// Warning hook (defaults to stderr); tests may capture it.
void warn(const std::string& message);
void set_handler(std::function<void(const std::string&)> handler);
}  // namespace logging

}  // namespace visco2d
