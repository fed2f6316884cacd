#pragma once

#include "visco2d/field.hpp"

namespace visco2d::ops {

// ---------------------------------------------------------------------------
// Exact spectral calculus. Conventions:
//   (grad f)_i   = d_i f
//   (grad v)_ij  = d_j v_i          (rows are components)
//   div v        = d_i v_i
//   (div M)_i    = d_j M_ij         (row divergence)
//   curl_curl    = grad div - laplacian, applied row-wise on matrices
// ---------------------------------------------------------------------------

/// Zero all modes above the grid's dealias cutoff (no-op for Dealias::none).
ScalarField dealias(const ScalarField& f);
VectorField dealias(const VectorField& v);
MatrixField dealias(const MatrixField& m);

VectorField gradient(const ScalarField& f);
MatrixField vector_gradient(const VectorField& v);
ScalarField divergence(const VectorField& v);
VectorField matrix_divergence(const MatrixField& m);

ScalarField laplacian(const ScalarField& f);
VectorField laplacian(const VectorField& v);
MatrixField laplacian(const MatrixField& m);
VectorField bilaplacian(const VectorField& v);

/// Inverse of -laplacian; annihilates modes with zero effective wavenumber.
/// Warns (and proceeds) when the input mean exceeds 1e-13 in magnitude.
ScalarField inverse_laplacian(const ScalarField& f);
VectorField inverse_laplacian(const VectorField& v);
MatrixField inverse_laplacian(const MatrixField& m);

/// L2-orthogonal projection onto divergence-free fields (identity on the
/// mean mode) and its complement Q = Id - P.
VectorField leray_project(const VectorField& v);
VectorField leray_complement(const VectorField& v);

VectorField curl_curl(const VectorField& v);
MatrixField curl_curl(const MatrixField& m);

ScalarField vorticity(const VectorField& v);

/// ||grad f||_L2^2 evaluated as a Parseval sum (no transform).
double grad_norm_sq(const ScalarField& f);
double grad_norm_sq(const VectorField& v);
double grad_norm_sq(const MatrixField& m);

// Linear combinations (spectral domain).
ScalarField lin(double a, const ScalarField& f, double b, const ScalarField& g);
VectorField lin(double a, const VectorField& f, double b, const VectorField& g);
MatrixField lin(double a, const MatrixField& f, double b, const MatrixField& g);
ScalarField scaled(double a, const ScalarField& f);
VectorField scaled(double a, const VectorField& f);
MatrixField scaled(double a, const MatrixField& f);

/// F - I (shifts the mean mode of the diagonal).
MatrixField matrix_minus_identity(const MatrixField& f);

// Pointwise products, dealiased per the grid policy.
ScalarField multiply(const ScalarField& a, const ScalarField& b);
/// (u . grad) v
VectorField advection(const VectorField& u, const VectorField& v);
/// (u . grad) M, component-wise
MatrixField advection(const VectorField& u, const MatrixField& m);
/// A B
MatrixField matmul(const MatrixField& a, const MatrixField& b);
/// A B^T
MatrixField matmul_nt(const MatrixField& a, const MatrixField& b);

/// Spectral resampling onto an m x m grid of the same box (pad or truncate).
ScalarField resample(const ScalarField& f, int m);
VectorField resample(const VectorField& v, int m);
MatrixField resample(const MatrixField& v, int m);

/// Evaluate the trigonometric interpolant at an arbitrary point.
double evaluate_at(const ScalarField& f, double x1, double x2);

}  // namespace visco2d::ops
