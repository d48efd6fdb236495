#pragma once

#include "todacert/rational.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace todacert {

/// Dense row-major matrix over Rational. Small dimensions only; everything here
/// is plain Gaussian elimination in exact arithmetic.
using RatMat = std::vector<RatVec>;

inline RatMat rat_identity(std::size_t n) {
    RatMat m(n, RatVec(n, 0));
    for (std::size_t i = 0; i < n; ++i) m[i][i] = 1;
    return m;
}

inline RatVec mat_vec(const RatMat& m, const RatVec& v) {
    RatVec r(m.size(), 0);
    for (std::size_t i = 0; i < m.size(); ++i) r[i] = dot(m[i], v);
    return r;
}

/// Reduced row echelon form in place. Returns the pivot columns.
inline std::vector<std::size_t> rref(RatMat& m) {
    std::vector<std::size_t> pivots;
    if (m.empty()) return pivots;
    const std::size_t rows = m.size(), cols = m[0].size();
    std::size_t row = 0;
    for (std::size_t col = 0; col < cols && row < rows; ++col) {
        std::size_t sel = row;
        while (sel < rows && m[sel][col] == 0) ++sel;
        if (sel == rows) continue;
        std::swap(m[sel], m[row]);
        const Rational inv = Rational(1) / m[row][col];
        for (std::size_t j = col; j < cols; ++j) m[row][j] *= inv;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == row || m[i][col] == 0) continue;
            const Rational f = m[i][col];
            for (std::size_t j = col; j < cols; ++j) m[i][j] -= f * m[row][j];
        }
        pivots.push_back(col);
        ++row;
    }
    return pivots;
}

inline std::size_t rat_rank(RatMat m) { return rref(m).size(); }

/// Any solution of a x = b, or nullopt if inconsistent. Free variables are set to 0.
inline std::optional<RatVec> solve_linear(RatMat a, const RatVec& b) {
    const std::size_t rows = a.size();
    const std::size_t cols = rows == 0 ? 0 : a[0].size();
    for (std::size_t i = 0; i < rows; ++i) a[i].push_back(b[i]);
    const auto pivots = rref(a);
    // inconsistent iff a pivot lands in the augmented column
    if (!pivots.empty() && pivots.back() == cols) return std::nullopt;
    RatVec x(cols, 0);
    for (std::size_t k = 0; k < pivots.size(); ++k) x[pivots[k]] = a[k][cols];
    return x;
}

/// Basis (as rows) of the null space of a.
inline RatMat nullspace(RatMat a) {
    if (a.empty()) return {};
    const std::size_t cols = a[0].size();
    const auto pivots = rref(a);
    std::vector<bool> is_pivot(cols, false);
    for (auto p : pivots) is_pivot[p] = true;
    RatMat basis;
    for (std::size_t free_col = 0; free_col < cols; ++free_col) {
        if (is_pivot[free_col]) continue;
        RatVec v(cols, 0);
        v[free_col] = 1;
        for (std::size_t k = 0; k < pivots.size(); ++k) v[pivots[k]] = -a[k][free_col];
        basis.push_back(std::move(v));
    }
    return basis;
}

inline std::optional<RatMat> invert(const RatMat& a) {
    const std::size_t n = a.size();
    RatMat aug(n, RatVec(2 * n, 0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) aug[i][j] = a[i][j];
        aug[i][n + i] = 1;
    }
    const auto pivots = rref(aug);
    if (pivots.size() != n || pivots.back() != n - 1) return std::nullopt;
    RatMat inv(n, RatVec(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) inv[i][j] = aug[i][n + j];
    return inv;
}

inline Rational determinant(RatMat a) {
    const std::size_t n = a.size();
    Rational det = 1;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t sel = col;
        while (sel < n && a[sel][col] == 0) ++sel;
        if (sel == n) return 0;
        if (sel != col) {
            std::swap(a[sel], a[col]);
            det = -det;
        }
        det *= a[col][col];
        const Rational inv = Rational(1) / a[col][col];
        for (std::size_t i = col + 1; i < n; ++i) {
            if (a[i][col] == 0) continue;
            const Rational f = a[i][col] * inv;
            for (std::size_t j = col; j < n; ++j) a[i][j] -= f * a[col][j];
        }
    }
    return det;
}

/// Sylvester criterion, exact: every leading principal minor is positive.
inline bool is_positive_definite(const RatMat& a) {
    for (std::size_t k = 1; k <= a.size(); ++k) {
        RatMat lead(k, RatVec(k));
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) lead[i][j] = a[i][j];
        if (determinant(std::move(lead)) <= 0) return false;
    }
    return true;
}

}  // namespace todacert
