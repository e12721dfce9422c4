#pragma once

// Small dense linear algebra for lattice bases and Gram matrices.
// Everything here is for k <= 8 or so; partial pivoting only.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace sphdiff {

using Vec = std::vector<double>;

struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> a;  // row-major

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline Vec mat_vec(const Mat& m, const Vec& x) {
    Vec y(m.rows, 0.0);
    for (int i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline Mat mat_mul(const Mat& a, const Mat& b) {
    Mat c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            double aik = a(i, k);
            for (int j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline Mat transpose(const Mat& m) {
    Mat t(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
    return t;
}

// LU with partial pivoting; returns determinant, leaves inverse in `inv` if non-null.
inline double lu_invert(const Mat& m, Mat* inv) {
    if (m.rows != m.cols) throw std::invalid_argument("lu_invert: square matrix required");
    const int n = m.rows;
    Mat lu = m;
    std::vector<int> piv(n);
    double det = 1.0;
    for (int i = 0; i < n; ++i) piv[i] = i;
    for (int col = 0; col < n; ++col) {
        int p = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(lu(r, col)) > std::fabs(lu(p, col))) p = r;
        if (p != col) {
            for (int j = 0; j < n; ++j) std::swap(lu(p, j), lu(col, j));
            std::swap(piv[p], piv[col]);
            det = -det;
        }
        double d = lu(col, col);
        det *= d;
        if (d == 0.0) return 0.0;
        for (int r = col + 1; r < n; ++r) {
            double f = lu(r, col) / d;
            lu(r, col) = f;
            for (int j = col + 1; j < n; ++j) lu(r, j) -= f * lu(col, j);
        }
    }
    if (inv) {
        *inv = Mat(n, n);
        for (int rhs = 0; rhs < n; ++rhs) {
            Vec x(n, 0.0);
            Vec b(n, 0.0);
            for (int i = 0; i < n; ++i) b[i] = (piv[i] == rhs) ? 1.0 : 0.0;
            for (int i = 0; i < n; ++i) {
                double s = b[i];
                for (int j = 0; j < i; ++j) s -= lu(i, j) * x[j];
                x[i] = s;
            }
            for (int i = n - 1; i >= 0; --i) {
                double s = x[i];
                for (int j = i + 1; j < n; ++j) s -= lu(i, j) * x[j];
                x[i] = s / lu(i, i);
            }
            for (int i = 0; i < n; ++i) (*inv)(i, rhs) = x[i];
        }
    }
    return det;
}

inline double mat_det(const Mat& m) { return lu_invert(m, nullptr); }

inline Mat mat_inv(const Mat& m) {
    Mat inv;
    double d = lu_invert(m, &inv);
    if (d == 0.0) throw std::invalid_argument("mat_inv: singular matrix");
    return inv;
}

// Jacobi eigenvalues of a symmetric matrix (ascending).
inline Vec symmetric_eigenvalues(Mat m) {
    if (m.rows != m.cols) throw std::invalid_argument("symmetric_eigenvalues: square required");
    const int n = m.rows;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::fabs(m(p, q)) < 1e-300) continue;
                double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < n; ++k) {
                    double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
            }
    }
    Vec ev(n);
    for (int i = 0; i < n; ++i) ev[i] = m(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

}  // namespace sphdiff
