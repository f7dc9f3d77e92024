#pragma once

// Test-only oracle: exact stationary current of the Langevin-thermostatted
// harmonic chain from the covariance (Lyapunov) equation,
//   A X + X A^T + B = 0,  J = lambda (T1 - <p1^2>/m1),
// solved densely by vectorization + LU. Independent of the transfer-matrix
// implementation path it checks.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

inline std::vector<double> solve_lyapunov(const std::vector<double>& A,
                                          const std::vector<double>& B, int m) {
    const int M = m * m;
    std::vector<double> K(static_cast<std::size_t>(M) * M, 0.0), rhs(M);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const int r = i * m + j;
            rhs[r] = -B[i * m + j];
            for (int k = 0; k < m; ++k) {
                K[static_cast<std::size_t>(r) * M + (k * m + j)] += A[i * m + k];
                K[static_cast<std::size_t>(r) * M + (i * m + k)] += A[j * m + k];
            }
        }
    for (int c = 0; c < M; ++c) {
        int p = c;
        for (int r = c + 1; r < M; ++r)
            if (std::fabs(K[static_cast<std::size_t>(r) * M + c]) >
                std::fabs(K[static_cast<std::size_t>(p) * M + c]))
                p = r;
        if (p != c) {
            for (int j = 0; j < M; ++j)
                std::swap(K[static_cast<std::size_t>(c) * M + j],
                          K[static_cast<std::size_t>(p) * M + j]);
            std::swap(rhs[c], rhs[p]);
        }
        for (int r = c + 1; r < M; ++r) {
            const double f =
                K[static_cast<std::size_t>(r) * M + c] / K[static_cast<std::size_t>(c) * M + c];
            if (f == 0.0) continue;
            for (int j = c; j < M; ++j)
                K[static_cast<std::size_t>(r) * M + j] -= f * K[static_cast<std::size_t>(c) * M + j];
            rhs[r] -= f * rhs[c];
        }
    }
    for (int r = M - 1; r >= 0; --r) {
        double s = rhs[r];
        for (int j = r + 1; j < M; ++j) s -= K[static_cast<std::size_t>(r) * M + j] * rhs[j];
        rhs[r] = s / K[static_cast<std::size_t>(r) * M + r];
    }
    return rhs;
}

// Exact J and the exact covariance-based bond fluxes.
inline double exact_chain_current(const std::vector<double>& masses, double T1, double Tn,
                                  double lambda) {
    const int n = static_cast<int>(masses.size());
    const int m = 2 * n;
    std::vector<double> A(static_cast<std::size_t>(m) * m, 0.0),
        B(static_cast<std::size_t>(m) * m, 0.0);
    for (int k = 0; k < n; ++k) A[static_cast<std::size_t>(k) * m + n + k] = 1.0 / masses[k];
    for (int k = 0; k < n; ++k) {
        A[static_cast<std::size_t>(n + k) * m + k] = -2.0;
        if (k > 0) A[static_cast<std::size_t>(n + k) * m + k - 1] = 1.0;
        if (k + 1 < n) A[static_cast<std::size_t>(n + k) * m + k + 1] = 1.0;
    }
    A[static_cast<std::size_t>(n) * m + n] -= lambda;
    A[static_cast<std::size_t>(n + n - 1) * m + n + n - 1] -= lambda;
    B[static_cast<std::size_t>(n) * m + n] = 2.0 * lambda * T1 * masses[0];
    B[static_cast<std::size_t>(n + n - 1) * m + n + n - 1] = 2.0 * lambda * Tn * masses[n - 1];
    const auto X = solve_lyapunov(A, B, m);
    return lambda * (T1 - X[static_cast<std::size_t>(n) * m + n] / masses[0]);
}

} // namespace oracle
