#include "z2lgt/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "z2lgt/errors.hpp"

namespace z2lgt {

namespace {

/** One Lanczos attempt; returns false when the error bound exceeds tol at max_krylov. */
bool lanczos_step(const LinearMap& apply_h, const Vector& v, double tau, double tol, int max_krylov, Vector& out) {
    const double beta0 = v.norm();
    if (beta0 == 0.0) {
        out = v;
        return true;
    }
    const Eigen::Index n = v.size();
    const int m_max = static_cast<int>(std::min<Eigen::Index>(max_krylov, n));
    DenseMatrix q(n, m_max + 1);
    std::vector<double> alpha, beta;
    q.col(0) = v / beta0;
    for (int m = 0; m < m_max; ++m) {
        Vector w = apply_h(q.col(m));
        alpha.push_back(q.col(m).dot(w).real());
        // full reorthogonalisation, applied twice
        for (int pass = 0; pass < 2; ++pass) {
            const Vector overlaps = q.leftCols(m + 1).adjoint() * w;
            w -= q.leftCols(m + 1) * overlaps;
        }
        const double b = w.norm();

        const int k = m + 1;
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
        for (int i = 0; i < k; ++i) t(i, i) = alpha[i];
        for (int i = 0; i + 1 < k; ++i) t(i, i + 1) = t(i + 1, i) = beta[i];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        Vector coeffs(k);
        for (int i = 0; i < k; ++i) coeffs[i] = std::exp(cplx(0.0, -tau * es.eigenvalues()[i])) * es.eigenvectors()(0, i);
        const Vector small = es.eigenvectors().cast<cplx>() * coeffs;  // exp(-i tau T) e_1

        const bool breakdown = b < 1e-14 * std::max(1.0, std::abs(alpha.back()));
        const double error = breakdown ? 0.0 : beta0 * b * std::abs(small[k - 1]);
        if (breakdown || error < tol) {
            out = beta0 * (q.leftCols(k) * small);
            return true;
        }
        beta.push_back(b);
        q.col(m + 1) = w / b;
    }
    return false;
}

}  // namespace

Vector expmv_hermitian(const LinearMap& apply_h, const Vector& v, double tau, double tol, int max_krylov) {
    Vector out;
    if (lanczos_step(apply_h, v, tau, tol, max_krylov, out)) return out;
    // split the step until every piece converges
    int pieces = 2;
    while (pieces <= 1 << 16) {
        Vector current = v;
        bool ok = true;
        for (int p = 0; p < pieces && ok; ++p) ok = lanczos_step(apply_h, current, tau / pieces, tol / pieces, max_krylov, current);
        if (ok) return current;
        pieces *= 2;
    }
    throw ConvergenceError("expmv_hermitian: Krylov exponential did not converge");
}

Vector expmv_hermitian(const SparseMatrix& h, const Vector& v, double tau, double tol, int max_krylov) {
    return expmv_hermitian([&h](const Vector& x) { return Vector(h * x); }, v, tau, tol, max_krylov);
}

std::vector<double> hermitian_eigenvalues(const DenseMatrix& h) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> s(h, Eigen::EigenvaluesOnly);
    if (s.info() != Eigen::Success) throw ConvergenceError("hermitian_eigenvalues: eigensolver failed");
    const auto& e = s.eigenvalues();
    return std::vector<double>(e.data(), e.data() + e.size());
}

double many_body_gap(const std::vector<double>& ascending, double degeneracy_tol) {
    if (ascending.empty()) throw SchemaError("many_body_gap: empty spectrum");
    for (double e : ascending)
        if (e - ascending.front() > degeneracy_tol) return e - ascending.front();
    return 0.0;
}

std::vector<double> linspace(double a, double b, int n) {
    if (n < 1) throw SchemaError("linspace: n must be positive");
    if (n == 1) return {a};
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
    return out;
}

namespace {
std::atomic<int> g_default_threads{0};
}

int default_threads() {
    const int configured = g_default_threads.load();
    if (configured > 0) return configured;
    return std::max(1u, std::thread::hardware_concurrency());
}

void set_default_threads(int threads) { g_default_threads.store(threads); }

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 0) threads = default_threads();
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace z2lgt
