#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace hann {

using Vec = std::vector<double>;

/// Dense row-major matrix. Small sizes only; everything in this library is
/// desk-scale, so clarity beats blocking tricks.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }

    std::span<const double> row_span(std::size_t i) const { return {row(i), cols}; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Matrix transposed() const {
        Matrix t(cols, rows);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    bool all_finite() const {
        return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
    }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double dot(const Vec& a, const Vec& b) {
    return dot(std::span<const double>(a), std::span<const double>(b));
}

inline double norm2(std::span<const double> a) { return dot(a, a); }
inline double norm(std::span<const double> a) { return std::sqrt(norm2(a)); }
inline double norm(const Vec& a) { return norm(std::span<const double>(a)); }

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/// C = A * B
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: shape mismatch");
    Matrix c(a.rows, b.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

/// C = A^T * B
inline Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) throw std::invalid_argument("matmul_at_b: shape mismatch");
    Matrix c(a.cols, b.cols, 0.0);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* ak = a.row(k);
        const double* bk = b.row(k);
        for (std::size_t i = 0; i < a.cols; ++i) {
            double aki = ak[i];
            if (aki == 0.0) continue;
            double* ci = c.row(i);
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

/// C = A * B^T
inline Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw std::invalid_argument("matmul_a_bt: shape mismatch");
    Matrix c(a.rows, b.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) ci[j] = dot({ai, a.cols}, {b.row(j), b.cols});
    }
    return c;
}

/// y = A x
inline Vec matvec(const Matrix& a, std::span<const double> x) {
    if (a.cols != x.size()) throw std::invalid_argument("matvec: shape mismatch");
    Vec y(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) y[i] = dot({a.row(i), a.cols}, x);
    return y;
}

/// y = A^T x
inline Vec matvec_t(const Matrix& a, std::span<const double> x) {
    if (a.rows != x.size()) throw std::invalid_argument("matvec_t: shape mismatch");
    Vec y(a.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) axpy(x[i], {a.row(i), a.cols}, y);
    return y;
}

struct SymEig {
    Vec values;      // descending
    Matrix vectors;  // column j is the eigenvector of values[j]
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
inline SymEig sym_eig(const Matrix& s) {
    if (s.rows != s.cols) throw std::invalid_argument("sym_eig: square matrix required");
    const std::size_t n = s.rows;
    Matrix a = s;
    Matrix v = Matrix::identity(n);

    auto off_diag = [&]() {
        double t = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) t += a(i, j) * a(i, j);
        return std::sqrt(t);
    };

    double scale = 0.0;
    for (double x : a.data) scale = std::max(scale, std::abs(x));
    const double tol = 1e-14 * std::max(scale, 1e-300);

    for (int sweep = 0; sweep < 100 && off_diag() > tol * n; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (std::abs(apq) <= tol) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double sn = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - sn * aiq;
                    a(i, q) = sn * aip + c * aiq;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    double apj = a(p, j), aqj = a(q, j);
                    a(p, j) = c * apj - sn * aqj;
                    a(q, j) = sn * apj + c * aqj;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - sn * viq;
                    v(i, q) = sn * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    SymEig out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

struct Svd {
    Vec singular;  // descending, size = cols of input
    Matrix u;      // rows(input) x cols(input); column j is left vector (zero column when s_j = 0)
    Matrix v;      // cols(input) x cols(input); column j is right vector
};

/// One-sided Jacobi SVD: orthogonalizes the columns of A, accumulating the
/// rotations into V, so A = U diag(s) V^T. Works for any shape; columns of V
/// with zero singular value span the null space of A.
inline Svd svd(const Matrix& a0) {
    const std::size_t m = a0.rows, n = a0.cols;
    Matrix b = a0;
    Matrix v = Matrix::identity(n);

    double scale = 0.0;
    for (double x : b.data) scale = std::max(scale, std::abs(x));
    const double eps = 1e-15 * std::max(scale, 1e-300);

    bool rotated = true;
    for (int sweep = 0; sweep < 60 && rotated; ++sweep) {
        rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0, beta = 0, gamma = 0;
                for (std::size_t i = 0; i < m; ++i) {
                    alpha += b(i, p) * b(i, p);
                    beta += b(i, q) * b(i, q);
                    gamma += b(i, p) * b(i, q);
                }
                if (std::abs(gamma) <= eps * eps ||
                    std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta))
                    continue;
                rotated = true;
                double zeta = (beta - alpha) / (2.0 * gamma);
                double t = (zeta >= 0 ? 1.0 : -1.0) /
                           (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double sn = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    double bip = b(i, p), biq = b(i, q);
                    b(i, p) = c * bip - sn * biq;
                    b(i, q) = sn * bip + c * biq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - sn * viq;
                    v(i, q) = sn * vip + c * viq;
                }
            }
        }
    }

    std::vector<double> sig(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0;
        for (std::size_t i = 0; i < m; ++i) s += b(i, j) * b(i, j);
        sig[j] = std::sqrt(s);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return sig[i] > sig[j]; });

    Svd out;
    out.singular.resize(n);
    out.u = Matrix(m, n);
    out.v = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t src = order[j];
        out.singular[j] = sig[src];
        for (std::size_t i = 0; i < n; ++i) out.v(i, j) = v(i, src);
        if (sig[src] > 0) {
            for (std::size_t i = 0; i < m; ++i) out.u(i, j) = b(i, src) / sig[src];
        }
    }
    return out;
}

/// Minimum-norm least squares solve of S x = rhs for symmetric PSD S, via the
/// Jacobi eigendecomposition with a relative spectral cutoff.
inline Vec solve_psd_min_norm(const Matrix& s, const Vec& rhs, double rel_cutoff = 1e-12) {
    SymEig eig = sym_eig(s);
    const std::size_t n = s.rows;
    double lmax = n ? std::max(eig.values[0], 0.0) : 0.0;
    Vec y(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (eig.values[j] <= rel_cutoff * std::max(lmax, 1e-300)) continue;
        double proj = 0;
        for (std::size_t i = 0; i < n; ++i) proj += eig.vectors(i, j) * rhs[i];
        proj /= eig.values[j];
        for (std::size_t i = 0; i < n; ++i) y[i] += eig.vectors(i, j) * proj;
    }
    return y;
}

}  // namespace hann
