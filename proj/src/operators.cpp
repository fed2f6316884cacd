#include "visco2d/operators.hpp"

#include <cmath>
#include <cstring>

namespace visco2d::ops {

namespace {

constexpr cplx kI(0.0, 1.0);

/// Apply out_k = fn(k1, k2, in_k) over all modes; fn sees effective wavenumbers.
template <typename Fn>
void spectral_map(const ScalarField& in, ScalarField& out, Fn&& fn) {
    const GridSpec& g = in.grid();
    auto src = in.spectral();
    auto& dst = out.mutable_spectral();
    const int n = g.n;
    for (int a = 0; a < n; ++a) {
        const double k1 = g.wavenumber(a);
        for (int b = 0; b < n; ++b) {
            const double k2 = g.wavenumber(b);
            const size_t idx = static_cast<size_t>(g.index(a, b));
            dst[idx] = fn(k1, k2, src[idx]);
        }
    }
}

void mask_dealias(ScalarField& f) {
    const GridSpec& g = f.grid();
    if (g.dealias == Dealias::none) return;
    auto& sp = f.mutable_spectral();
    const int n = g.n;
    const int c = g.cutoff();
    for (int a = 0; a < n; ++a) {
        const bool kill_a = std::abs(g.freq(a)) > c;
        for (int b = 0; b < n; ++b)
            if (kill_a || std::abs(g.freq(b)) > c) sp[static_cast<size_t>(g.index(a, b))] = 0.0;
    }
}

ScalarField derivative(const ScalarField& f, int axis) {
    ScalarField out(f.grid());
    spectral_map(f, out, [axis](double k1, double k2, cplx v) {
        return kI * (axis == 0 ? k1 : k2) * v;
    });
    return out;
}

/// Pointwise product without any truncation.
ScalarField raw_product(const ScalarField& a, const ScalarField& b) {
    ScalarField out(a.grid());
    auto ra = a.real();
    auto rb = b.real();
    auto& ro = out.mutable_real();
    for (size_t i = 0; i < ro.size(); ++i) ro[i] = ra[i] * rb[i];
    return out;
}

}  // namespace

ScalarField dealias(const ScalarField& f) {
    ScalarField out(f);
    mask_dealias(out);
    return out;
}

VectorField dealias(const VectorField& v) {
    VectorField out(v);
    for (int i = 0; i < 2; ++i) mask_dealias(out.comp(i));
    return out;
}

MatrixField dealias(const MatrixField& m) {
    MatrixField out(m);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) mask_dealias(out.comp(i, j));
    return out;
}

VectorField gradient(const ScalarField& f) {
    VectorField out(f.grid());
    out.comp(0) = derivative(f, 0);
    out.comp(1) = derivative(f, 1);
    return out;
}

MatrixField vector_gradient(const VectorField& v) {
    MatrixField out(v.grid());
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.comp(i, j) = derivative(v.comp(i), j);
    return out;
}

ScalarField divergence(const VectorField& v) {
    ScalarField out(v.grid());
    const GridSpec& g = v.grid();
    auto s0 = v.comp(0).spectral();
    auto s1 = v.comp(1).spectral();
    auto& dst = out.mutable_spectral();
    const int n = g.n;
    for (int a = 0; a < n; ++a) {
        const double k1 = g.wavenumber(a);
        for (int b = 0; b < n; ++b) {
            const double k2 = g.wavenumber(b);
            const size_t idx = static_cast<size_t>(g.index(a, b));
            dst[idx] = kI * (k1 * s0[idx] + k2 * s1[idx]);
        }
    }
    return out;
}

VectorField matrix_divergence(const MatrixField& m) {
    VectorField out(m.grid());
    const GridSpec& g = m.grid();
    const int n = g.n;
    for (int i = 0; i < 2; ++i) {
        auto si0 = m.comp(i, 0).spectral();
        auto si1 = m.comp(i, 1).spectral();
        auto& dst = out.comp(i).mutable_spectral();
        for (int a = 0; a < n; ++a) {
            const double k1 = g.wavenumber(a);
            for (int b = 0; b < n; ++b) {
                const double k2 = g.wavenumber(b);
                const size_t idx = static_cast<size_t>(g.index(a, b));
                dst[idx] = kI * (k1 * si0[idx] + k2 * si1[idx]);
            }
        }
    }
    return out;
}

ScalarField laplacian(const ScalarField& f) {
    ScalarField out(f.grid());
    spectral_map(f, out, [](double k1, double k2, cplx v) { return -(k1 * k1 + k2 * k2) * v; });
    return out;
}

VectorField laplacian(const VectorField& v) {
    VectorField out(v.grid());
    for (int i = 0; i < 2; ++i) out.comp(i) = laplacian(v.comp(i));
    return out;
}

MatrixField laplacian(const MatrixField& m) {
    MatrixField out(m.grid());
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.comp(i, j) = laplacian(m.comp(i, j));
    return out;
}

VectorField bilaplacian(const VectorField& v) {
    VectorField out(v.grid());
    for (int i = 0; i < 2; ++i) {
        out.comp(i) = ScalarField(v.grid());
        spectral_map(v.comp(i), out.comp(i), [](double k1, double k2, cplx c) {
            const double k2sum = k1 * k1 + k2 * k2;
            return k2sum * k2sum * c;
        });
    }
    return out;
}

ScalarField inverse_laplacian(const ScalarField& f) {
    const double m = f.mean();
    if (std::abs(m) > 1e-13)
        logging::warn("inverse_laplacian: zeroing nonzero mean " + std::to_string(m));
    ScalarField out(f.grid());
    spectral_map(f, out, [](double k1, double k2, cplx v) -> cplx {
        const double k2sum = k1 * k1 + k2 * k2;
        return k2sum > 0.0 ? v / k2sum : cplx(0.0, 0.0);
    });
    return out;
}

VectorField inverse_laplacian(const VectorField& v) {
    VectorField out(v.grid());
    for (int i = 0; i < 2; ++i) out.comp(i) = inverse_laplacian(v.comp(i));
    return out;
}

MatrixField inverse_laplacian(const MatrixField& m) {
    MatrixField out(m.grid());
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.comp(i, j) = inverse_laplacian(m.comp(i, j));
    return out;
}

namespace {
/// helmholtz_part = true extracts the gradient part k (k.v)/|k|^2;
/// false removes it.
VectorField project_impl(const VectorField& v, bool complement) {
    VectorField out(v.grid());
    const GridSpec& g = v.grid();
    auto s0 = v.comp(0).spectral();
    auto s1 = v.comp(1).spectral();
    auto& d0 = out.comp(0).mutable_spectral();
    auto& d1 = out.comp(1).mutable_spectral();
    const int n = g.n;
    for (int a = 0; a < n; ++a) {
        const double k1 = g.wavenumber(a);
        for (int b = 0; b < n; ++b) {
            const double k2 = g.wavenumber(b);
            const size_t idx = static_cast<size_t>(g.index(a, b));
            const double k2sum = k1 * k1 + k2 * k2;
            if (k2sum == 0.0) {
                // Constant modes are divergence-free: P = Id, Q = 0 there.
                d0[idx] = complement ? cplx(0.0, 0.0) : s0[idx];
                d1[idx] = complement ? cplx(0.0, 0.0) : s1[idx];
                continue;
            }
            const cplx kdotv = (k1 * s0[idx] + k2 * s1[idx]) / k2sum;
            if (complement) {
                d0[idx] = k1 * kdotv;
                d1[idx] = k2 * kdotv;
            } else {
                d0[idx] = s0[idx] - k1 * kdotv;
                d1[idx] = s1[idx] - k2 * kdotv;
            }
        }
    }
    return out;
}
}  // namespace

VectorField leray_project(const VectorField& v) { return project_impl(v, false); }
VectorField leray_complement(const VectorField& v) { return project_impl(v, true); }

VectorField curl_curl(const VectorField& v) {
    VectorField out(v.grid());
    const GridSpec& g = v.grid();
    auto s0 = v.comp(0).spectral();
    auto s1 = v.comp(1).spectral();
    auto& d0 = out.comp(0).mutable_spectral();
    auto& d1 = out.comp(1).mutable_spectral();
    const int n = g.n;
    for (int a = 0; a < n; ++a) {
        const double k1 = g.wavenumber(a);
        for (int b = 0; b < n; ++b) {
            const double k2 = g.wavenumber(b);
            const size_t idx = static_cast<size_t>(g.index(a, b));
            const double k2sum = k1 * k1 + k2 * k2;
            const cplx kdotv = k1 * s0[idx] + k2 * s1[idx];
            // grad div - laplacian: -k (k.v) + |k|^2 v
            d0[idx] = -k1 * kdotv + k2sum * s0[idx];
            d1[idx] = -k2 * kdotv + k2sum * s1[idx];
        }
    }
    return out;
}

MatrixField curl_curl(const MatrixField& m) {
    MatrixField out(m.grid());
    for (int i = 0; i < 2; ++i) {
        VectorField row(m.grid());
        row.comp(0) = m.comp(i, 0);
        row.comp(1) = m.comp(i, 1);
        VectorField cc = curl_curl(row);
        out.comp(i, 0) = std::move(cc.comp(0));
        out.comp(i, 1) = std::move(cc.comp(1));
    }
    return out;
}

ScalarField vorticity(const VectorField& v) {
    ScalarField out(v.grid());
    const GridSpec& g = v.grid();
    auto s0 = v.comp(0).spectral();
    auto s1 = v.comp(1).spectral();
    auto& dst = out.mutable_spectral();
    const int n = g.n;
    for (int a = 0; a < n; ++a) {
        const double k1 = g.wavenumber(a);
        for (int b = 0; b < n; ++b) {
            const double k2 = g.wavenumber(b);
            const size_t idx = static_cast<size_t>(g.index(a, b));
            dst[idx] = kI * (k1 * s1[idx] - k2 * s0[idx]);
        }
    }
    return out;
}

double grad_norm_sq(const ScalarField& f) {
    const GridSpec& g = f.grid();
    auto sp = f.spectral();
    double s = 0.0;
    const int n = g.n;
    for (int a = 0; a < n; ++a) {
        const double k1 = g.wavenumber(a);
        for (int b = 0; b < n; ++b) {
            const double k2 = g.wavenumber(b);
            s += (k1 * k1 + k2 * k2) * std::norm(sp[static_cast<size_t>(g.index(a, b))]);
        }
    }
    const double n2 = static_cast<double>(n) * n;
    return s * GridSpec::box_area() / (n2 * n2);
}

double grad_norm_sq(const VectorField& v) {
    return grad_norm_sq(v.comp(0)) + grad_norm_sq(v.comp(1));
}

double grad_norm_sq(const MatrixField& m) {
    double s = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) s += grad_norm_sq(m.comp(i, j));
    return s;
}

ScalarField lin(double a, const ScalarField& f, double b, const ScalarField& g) {
    ScalarField out(f.grid());
    auto sf = f.spectral();
    auto sg = g.spectral();
    auto& dst = out.mutable_spectral();
    for (size_t i = 0; i < dst.size(); ++i) dst[i] = a * sf[i] + b * sg[i];
    return out;
}

VectorField lin(double a, const VectorField& f, double b, const VectorField& g) {
    VectorField out(f.grid());
    for (int i = 0; i < 2; ++i) out.comp(i) = lin(a, f.comp(i), b, g.comp(i));
    return out;
}

MatrixField lin(double a, const MatrixField& f, double b, const MatrixField& g) {
    MatrixField out(f.grid());
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.comp(i, j) = lin(a, f.comp(i, j), b, g.comp(i, j));
    return out;
}

ScalarField scaled(double a, const ScalarField& f) {
    ScalarField out(f.grid());
    auto sf = f.spectral();
    auto& dst = out.mutable_spectral();
    for (size_t i = 0; i < dst.size(); ++i) dst[i] = a * sf[i];
    return out;
}

VectorField scaled(double a, const VectorField& f) {
    VectorField out(f.grid());
    for (int i = 0; i < 2; ++i) out.comp(i) = scaled(a, f.comp(i));
    return out;
}

MatrixField scaled(double a, const MatrixField& f) {
    MatrixField out(f.grid());
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.comp(i, j) = scaled(a, f.comp(i, j));
    return out;
}

MatrixField matrix_minus_identity(const MatrixField& f) {
    MatrixField out(f);
    const double n2 = static_cast<double>(f.grid().n) * f.grid().n;
    for (int i = 0; i < 2; ++i) out.comp(i, i).mutable_spectral()[0] -= n2;
    return out;
}

ScalarField multiply(const ScalarField& a, const ScalarField& b) {
    ScalarField out = raw_product(a, b);
    mask_dealias(out);
    return out;
}

VectorField advection(const VectorField& u, const VectorField& v) {
    VectorField out(u.grid());
    auto u0 = u.comp(0).real();
    auto u1 = u.comp(1).real();
    for (int i = 0; i < 2; ++i) {
        ScalarField d0 = derivative(v.comp(i), 0);
        ScalarField d1 = derivative(v.comp(i), 1);
        auto r0 = d0.real();
        auto r1 = d1.real();
        auto& dst = out.comp(i).mutable_real();
        for (size_t p = 0; p < dst.size(); ++p) dst[p] = u0[p] * r0[p] + u1[p] * r1[p];
        mask_dealias(out.comp(i));
    }
    return out;
}

MatrixField advection(const VectorField& u, const MatrixField& m) {
    MatrixField out(u.grid());
    auto u0 = u.comp(0).real();
    auto u1 = u.comp(1).real();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            ScalarField d0 = derivative(m.comp(i, j), 0);
            ScalarField d1 = derivative(m.comp(i, j), 1);
            auto r0 = d0.real();
            auto r1 = d1.real();
            auto& dst = out.comp(i, j).mutable_real();
            for (size_t p = 0; p < dst.size(); ++p) dst[p] = u0[p] * r0[p] + u1[p] * r1[p];
            mask_dealias(out.comp(i, j));
        }
    return out;
}

MatrixField matmul(const MatrixField& a, const MatrixField& b) {
    MatrixField out(a.grid());
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            auto a0 = a.comp(i, 0).real();
            auto a1 = a.comp(i, 1).real();
            auto b0 = b.comp(0, j).real();
            auto b1 = b.comp(1, j).real();
            auto& dst = out.comp(i, j).mutable_real();
            for (size_t p = 0; p < dst.size(); ++p) dst[p] = a0[p] * b0[p] + a1[p] * b1[p];
            mask_dealias(out.comp(i, j));
        }
    return out;
}

MatrixField matmul_nt(const MatrixField& a, const MatrixField& b) {
    MatrixField out(a.grid());
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            auto a0 = a.comp(i, 0).real();
            auto a1 = a.comp(i, 1).real();
            auto b0 = b.comp(j, 0).real();
            auto b1 = b.comp(j, 1).real();
            auto& dst = out.comp(i, j).mutable_real();
            for (size_t p = 0; p < dst.size(); ++p) dst[p] = a0[p] * b0[p] + a1[p] * b1[p];
            mask_dealias(out.comp(i, j));
        }
    return out;
}

ScalarField resample(const ScalarField& f, int m) {
    GridSpec tgt = f.grid();
    tgt.n = m;
    ScalarField out(tgt);
    const GridSpec& src = f.grid();
    auto sp = f.spectral();
    auto& dst = out.mutable_spectral();
    const double scale = (static_cast<double>(m) * m) / (static_cast<double>(src.n) * src.n);
    const int kmax = std::min(src.n / 2 - 1, m / 2 - 1);
    for (int k1 = -kmax; k1 <= kmax; ++k1) {
        const int sa = (k1 + src.n) % src.n;
        const int ta = (k1 + m) % m;
        for (int k2 = -kmax; k2 <= kmax; ++k2) {
            const int sb = (k2 + src.n) % src.n;
            const int tb = (k2 + m) % m;
            dst[static_cast<size_t>(tgt.index(ta, tb))] =
                scale * sp[static_cast<size_t>(src.index(sa, sb))];
        }
    }
    return out;
}

VectorField resample(const VectorField& v, int m) {
    GridSpec tgt = v.grid();
    tgt.n = m;
    VectorField out(tgt);
    for (int i = 0; i < 2; ++i) out.comp(i) = resample(v.comp(i), m);
    return out;
}

MatrixField resample(const MatrixField& v, int m) {
    GridSpec tgt = v.grid();
    tgt.n = m;
    MatrixField out(tgt);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.comp(i, j) = resample(v.comp(i, j), m);
    return out;
}

double evaluate_at(const ScalarField& f, double x1, double x2) {
    const GridSpec& g = f.grid();
    auto sp = f.spectral();
    const int n = g.n;
    double acc = 0.0;
    for (int a = 0; a < n; ++a) {
        const double k1 = g.wavenumber(a);
        for (int b = 0; b < n; ++b) {
            const size_t idx = static_cast<size_t>(g.index(a, b));
            if (sp[idx] == cplx(0.0, 0.0)) continue;
            const double k2 = g.wavenumber(b);
            const double phase = k1 * x1 + k2 * x2;
            acc += sp[idx].real() * std::cos(phase) - sp[idx].imag() * std::sin(phase);
        }
    }
    return acc / (static_cast<double>(n) * n);
}

}  // namespace visco2d::ops
