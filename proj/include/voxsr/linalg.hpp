#pragma once

// Dense symmetric linear algebra for the Fréchet distance: cyclic Jacobi
// eigendecomposition and the PSD matrix square root. Matrices are row-major
// d x d vectors of double.

#include <cmath>
#include <string>
#include <vector>

#include "voxsr/common.hpp"

namespace voxsr {

struct SymEig {
    int d = 0;
    std::vector<double> values;   // ascending order not guaranteed
    std::vector<double> vectors;  // column j is the eigenvector of values[j]
};

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
/// Intended for the d <= 64 matrices FID produces; O(d^3) per sweep.
inline SymEig jacobi_eigensymmetric(std::vector<double> a, int d) {
    if (d < 1 || static_cast<std::size_t>(d) * d != a.size())
        throw DataError("jacobi: matrix must be square, got " + std::to_string(a.size()) +
                        " entries for d = " + std::to_string(d));
    double asym = 0.0, scale = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            asym = std::max(asym, std::abs(a[i * d + j] - a[j * d + i]));
            scale = std::max(scale, std::abs(a[i * d + j]));
        }
    if (asym > 1e-8 * std::max(1.0, scale))
        throw DataError("jacobi: matrix is not symmetric");
    // exact symmetry keeps the iteration clean
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            a[i * d + j] = a[j * d + i] = 0.5 * (a[i * d + j] + a[j * d + i]);

    std::vector<double> v(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) v[i * d + i] = 1.0;

    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) off += a[i * d + j] * a[i * d + j];
        if (off <= 1e-26 * std::max(1.0, scale * scale)) break;

        for (int p = 0; p < d - 1; ++p)
            for (int q = p + 1; q < d; ++q) {
                const double apq = a[p * d + q];
                if (std::abs(apq) < 1e-300) continue;
                const double tau = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                const double t = (tau >= 0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (int k = 0; k < d; ++k) {
                    const double akp = a[k * d + p], akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for (int k = 0; k < d; ++k) {
                    const double apk = a[p * d + k], aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < d; ++k) {
                    const double vkp = v[k * d + p], vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
    }

    SymEig out;
    out.d = d;
    out.values.resize(d);
    for (int i = 0; i < d; ++i) out.values[i] = a[i * d + i];
    out.vectors = std::move(v);
    return out;
}

inline std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b,
                                  int d) {
    std::vector<double> c(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) {
            const double aik = a[i * d + k];
            if (aik == 0.0) continue;
            for (int j = 0; j < d; ++j) c[i * d + j] += aik * b[k * d + j];
        }
    return c;
}

inline double trace(const std::vector<double>& a, int d) {
    double t = 0.0;
    for (int i = 0; i < d; ++i) t += a[i * d + i];
    return t;
}

/// V diag(f(lambda)) V^T for a symmetric matrix. Eigenvalues below
/// -tolerance are an error; small negatives are clipped to zero first.
template <class Fn>
inline std::vector<double> symmetric_function(const std::vector<double>& a, int d, Fn&& f,
                                              const std::string& what) {
    SymEig eig = jacobi_eigensymmetric(a, d);
    const double tol = 1e-6 * std::max(std::abs(trace(a, d)), 1.0);
    for (int i = 0; i < d; ++i) {
        if (eig.values[i] < -tol)
            throw NumericError(what + ": matrix has negative eigenvalue " +
                               std::to_string(eig.values[i]) + " beyond tolerance " +
                               std::to_string(-tol));
        if (eig.values[i] < 0.0) eig.values[i] = 0.0;
    }
    std::vector<double> out(static_cast<std::size_t>(d) * d, 0.0);
    for (int k = 0; k < d; ++k) {
        const double fk = f(eig.values[k]);
        if (fk == 0.0) continue;
        for (int i = 0; i < d; ++i) {
            const double vik = eig.vectors[i * d + k] * fk;
            if (vik == 0.0) continue;
            for (int j = 0; j < d; ++j) out[i * d + j] += vik * eig.vectors[j * d + k];
        }
    }
    return out;
}

inline std::vector<double> sqrt_psd(const std::vector<double>& a, int d,
                                    const std::string& what = "sqrt_psd") {
    return symmetric_function(a, d, [](double x) { return std::sqrt(x); }, what);
}

}  // namespace voxsr
