#pragma once

#include <functional>
#include <vector>

#include "z2lgt/hilbert.hpp"

namespace z2lgt {

using LinearMap = std::function<Vector(const Vector&)>;

/** exp(-i tau H) v for Hermitian H given as a matrix-vector product, via Lanczos with full
 *  reorthogonalisation. The step is subdivided until the a-posteriori error bound is below tol. */
Vector expmv_hermitian(const LinearMap& apply_h, const Vector& v, double tau, double tol = 1e-13, int max_krylov = 40);
Vector expmv_hermitian(const SparseMatrix& h, const Vector& v, double tau, double tol = 1e-13, int max_krylov = 40);

/** Ascending eigenvalues of a Hermitian matrix. */
std::vector<double> hermitian_eigenvalues(const DenseMatrix& h);

/** E_1 - E_0 where E_1 is the first level outside the ground manifold; levels within
 *  degeneracy_tol of E_0 count as ground states. Returns 0 if every level is degenerate. */
double many_body_gap(const std::vector<double>& ascending, double degeneracy_tol);

/** n equally spaced points from a to b inclusive. */
std::vector<double> linspace(double a, double b, int n);

/** Runs fn(i) for i in [0, n) on up to `threads` workers; results must be written per index. */
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);
/** Default worker count used when callers pass threads <= 0. */
int default_threads();
void set_default_threads(int threads);

}  // namespace z2lgt
