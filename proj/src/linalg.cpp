#include "kfp/linalg.hpp"
#include "kfp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>

namespace kfp {

Eigen::VectorXcd seeded_vector(int n, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) {
        double re = dist(gen);
        double im = dist(gen);
        v[i] = std::complex<double>(re, im);
    }
    return v;
}

double operator_norm(const Eigen::MatrixXcd& A, double rel_tol, int max_iter) {
    return operator_norm_apply([&](const Eigen::VectorXcd& x) { return (A * x).eval(); },
                               [&](const Eigen::VectorXcd& x) { return (A.adjoint() * x).eval(); },
                               static_cast<int>(A.cols()), rel_tol, max_iter);
}

double operator_norm_apply(const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& apply,
                           const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& apply_adj,
                           int n, double rel_tol, int max_iter) {
    if (n <= 0) throw ValidationError("operator_norm: empty operator");
    Eigen::VectorXcd v = seeded_vector(n, 12345);
    v.normalize();
    double sigma = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXcd w = apply(v);
        double s = w.norm();
        if (s == 0.0) return 0.0;
        v = apply_adj(w);
        double vn = v.norm();
        if (vn == 0.0) return s;
        v /= vn;
        if (it > 2 && std::abs(s - sigma) <= rel_tol * s) {
            sigma = s;
            break;
        }
        sigma = s;
    }
    return sigma;
}

SmallestSV smallest_singular(const Eigen::MatrixXcd& A, double rel_tol, int max_iter) {
    const int n = static_cast<int>(A.cols());
    if (n == 0 || A.rows() != A.cols())
        throw ValidationError("smallest_singular: square nonempty matrix required");
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    // Detect exact singularity: U has a zero pivot.
    double dmin = 1e300, dmax = 0.0;
    for (int i = 0; i < n; ++i) {
        double d = std::abs(lu.matrixLU()(i, i));
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
    }
    Eigen::VectorXcd v = seeded_vector(n, 777);
    v.normalize();
    if (dmax > 0.0 && dmin == 0.0) {
        // Singular to machine precision; recover a null vector via SVD.
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinV);
        SmallestSV out;
        out.sigma = svd.singularValues()(n - 1);
        out.right = svd.matrixV().col(n - 1);
        return out;
    }
    double inv_norm = 0.0;
    // Power iteration on (A^H A)^{-1}: the iterate converges to the right
    // singular vector of the smallest singular value.
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXcd y = lu.adjoint().solve(v);   // A^H y = v
        Eigen::VectorXcd z = lu.solve(y);             // A z = y
        double zn = z.norm();
        if (!std::isfinite(zn) || zn == 0.0) break;
        double est = std::sqrt(zn); // ||(A^H A)^{-1}||^(1/2) growth per half-step
        v = z / zn;
        if (it > 2 && std::abs(est - inv_norm) <= rel_tol * est) {
            inv_norm = est;
            break;
        }
        inv_norm = est;
    }
    SmallestSV out;
    // v approximates the right singular vector of the smallest singular value.
    out.right = v;
    out.sigma = (A * v).norm();
    return out;
}

std::vector<RitzPair> eigs_near_shift(const Eigen::MatrixXcd& A, std::complex<double> shift,
                                      int count, int krylov_dim, unsigned seed) {
    const int n = static_cast<int>(A.cols());
    if (n == 0 || A.rows() != n) throw ValidationError("eigs_near_shift: square matrix required");
    if (count < 1) throw ValidationError("eigs_near_shift: count must be positive");
    const int m = std::min(krylov_dim, n);

    Eigen::MatrixXcd shifted = A - shift * Eigen::MatrixXcd::Identity(n, n);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(shifted);

    Eigen::MatrixXcd V(n, m + 1);
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
    Eigen::VectorXcd v0 = seeded_vector(n, seed);
    v0.normalize();
    V.col(0) = v0;
    int built = 0;
    for (int j = 0; j < m; ++j) {
        Eigen::VectorXcd w = lu.solve(V.col(j));
        if (!w.allFinite())
            throw NumericalError("eigs_near_shift: shift too close to an eigenvalue");
        // Modified Gram-Schmidt with one re-orthogonalization pass.
        for (int pass = 0; pass < 2; ++pass) {
            for (int i = 0; i <= j; ++i) {
                std::complex<double> hij = V.col(i).dot(w);
                if (pass == 0)
                    H(i, j) += hij;
                else
                    H(i, j) += hij;
                w -= hij * V.col(i);
            }
        }
        double beta = w.norm();
        H(j + 1, j) = beta;
        built = j + 1;
        if (beta < 1e-14) break;
        V.col(j + 1) = w / beta;
    }

    Eigen::MatrixXcd Hm = H.topLeftCorner(built, built);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(Hm, true);
    std::vector<RitzPair> pairs;
    for (int i = 0; i < built; ++i) {
        std::complex<double> theta = es.eigenvalues()(i);
        if (std::abs(theta) < 1e-14) continue;
        RitzPair p;
        p.value = shift + 1.0 / theta;
        Eigen::VectorXcd y = es.eigenvectors().col(i);
        p.vector = V.leftCols(built) * y;
        double vn = p.vector.norm();
        if (vn == 0.0) continue;
        p.vector /= vn;
        p.residual = (A * p.vector - p.value * p.vector).norm();
        pairs.push_back(std::move(p));
    }
    std::sort(pairs.begin(), pairs.end(), [&](const RitzPair& a, const RitzPair& b) {
        return std::abs(a.value - shift) < std::abs(b.value - shift);
    });
    if (static_cast<int>(pairs.size()) > count) pairs.resize(count);
    return pairs;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::exception_ptr first_error = nullptr;
    std::mutex err_mutex;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t]() {
            try {
                for (int i = t; i < n; i += threads) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace kfp
