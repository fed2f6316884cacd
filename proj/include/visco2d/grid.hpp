#pragma once

#include <cstdint>
#include <cstdlib>
#include <string>

#include "visco2d/errors.hpp"

namespace visco2d {

inline constexpr double kTwoPi = 6.28318530717958647692528676655900577;

enum class Dealias { two_thirds, none };

/// Discretization of the 2*pi-periodic torus on an n x n collocation grid.
///
/// Real samples live at x_a = 2*pi*a/n. Spectral coefficients follow the
/// unnormalized-forward / normalized-inverse convention
///   fhat_k = sum_x f(x) e^{-i k.x},   f(x) = n^{-2} sum_k fhat_k e^{+i k.x}.
///
/// Wavenumber convention: the Nyquist column (index n/2) carries no derivative
/// information on a real grid, so every operator multiplier uses an effective
/// wavenumber of 0 there. All vector-calculus identities are then polynomial
/// in the same effective k-vector and hold mode-by-mode on arbitrary data.
struct GridSpec {
    int n = 64;
    Dealias dealias = Dealias::two_thirds;

    void validate() const {
        if (n < 16 || (n & (n - 1)) != 0)
            throw ConfigError("grid n must be a power of two >= 16, got " + std::to_string(n));
    }

    int size() const { return n * n; }
    int index(int i, int j) const { return i * n + j; }

    double x1(int i) const { return kTwoPi * static_cast<double>(i) / n; }
    double x2(int j) const { return kTwoPi * static_cast<double>(j) / n; }
    double cell_area() const { return (kTwoPi / n) * (kTwoPi / n); }
    static double box_area() { return kTwoPi * kTwoPi; }

    /// Signed FFT frequency of index a (Nyquist mapped to +n/2); used for
    /// dealias masking only.
    int freq(int a) const { return (2 * a <= n) ? a : a - n; }

    /// Effective wavenumber used by all operator multipliers (Nyquist -> 0).
    int wavenumber(int a) const {
        if (2 * a == n) return 0;
        return (2 * a < n) ? a : a - n;
    }

    /// Largest retained |k| per axis under the two-thirds rule.
    int cutoff() const { return n / 3; }

    /// True when the mode at indices (a, b) survives the grid's dealias policy.
    bool retained(int a, int b) const {
        if (dealias == Dealias::none) return true;
        const int c = cutoff();
        return std::abs(freq(a)) <= c && std::abs(freq(b)) <= c;
    }

    bool operator==(const GridSpec&) const = default;
};

inline const char* to_string(Dealias d) {
    return d == Dealias::two_thirds ? "two_thirds" : "none";
}

}  // namespace visco2d
