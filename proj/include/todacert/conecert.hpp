#pragma once

#include "todacert/ratlin.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

namespace todacert {

/// Decide whether `target` lies in the closed cone Σ ℝ_{≥0}·gen or in the
/// relative interior Σ ℝ_{>0}·gen, with an exact certificate either way.
/// Empty generator list means the cone {0}.
struct ConeProblem {
    std::size_t dim = 0;
    std::vector<RatVec> generators;
    RatVec target;
};

enum class SeparationMode { RefutesClosed, RefutesOpen };

struct MembershipCertificate {
    RatVec coefficients;  // one per generator, Σ x_a gen_a = target
    bool open = false;    // true: all coefficients strictly positive
};

/// Covector s with ⟨s, gen_a⟩ ≥ 0 for all a and:
///   RefutesClosed: ⟨s, target⟩ < 0
///   RefutesOpen:   ⟨s, target⟩ ≤ 0, and ⟨s, target⟩ < 0 or some ⟨s, gen_a⟩ > 0
struct SeparationCertificate {
    RatVec functional;
    SeparationMode mode = SeparationMode::RefutesClosed;
};

struct ConeVerdict {
    bool answer = false;
    std::variant<MembershipCertificate, SeparationCertificate> certificate;

    const MembershipCertificate& membership() const { return std::get<MembershipCertificate>(certificate); }
    const SeparationCertificate& separation() const { return std::get<SeparationCertificate>(certificate); }
    bool has_membership() const { return std::holds_alternative<MembershipCertificate>(certificate); }
};

namespace detail {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Optimal;
    RatVec x;        // Optimal: minimizer.  Unbounded: a feasible point.
    RatVec ray;      // Unbounded: direction with A·ray = 0, ray ≥ 0, cᵀray < 0.
    RatVec dual;     // Optimal: y with yᵀA_j ≤ c_j for all j and yᵀb = cᵀx.
    RatVec farkas;   // Infeasible: y with yᵀA_j ≤ 0 for all j and yᵀb > 0.
    Rational objective = 0;
};

/// Exact two-phase primal simplex with Bland's rule.
/// Solves min cᵀx s.t. A x = b, x ≥ 0, columns of A given explicitly.
class ExactSimplex {
  public:
    ExactSimplex(const std::vector<RatVec>& cols, const RatVec& b, const RatVec& c)
        : m_(b.size()), n_(cols.size()), cost_(c) {
        flip_.assign(m_, 1);
        tab_.assign(m_, RatVec(n_ + m_ + 1, 0));
        for (std::size_t i = 0; i < m_; ++i) {
            const bool neg = b[i] < 0;
            if (neg) flip_[i] = -1;
            for (std::size_t j = 0; j < n_; ++j) tab_[i][j] = neg ? -cols[j][i] : cols[j][i];
            tab_[i][n_ + i] = 1;
            tab_[i][rhs()] = neg ? -b[i] : b[i];
        }
        basis_.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) basis_[i] = n_ + i;
        dead_.assign(m_, false);
    }

    LpResult run() {
        // phase 1: minimize the sum of artificials
        RatVec phase1(n_ + m_, 0);
        for (std::size_t i = 0; i < m_; ++i) phase1[n_ + i] = 1;
        pivot_to_optimum(phase1, n_ + m_);
        if (objective(phase1) > 0) {
            LpResult res;
            res.status = LpStatus::Infeasible;
            res.farkas = extract_dual(phase1);
            return res;
        }
        drive_out_artificials();

        // phase 2: original objective, artificial columns banned from entering
        RatVec phase2(n_ + m_, 0);
        for (std::size_t j = 0; j < n_; ++j) phase2[j] = cost_[j];
        const auto entering = pivot_to_optimum(phase2, n_);
        LpResult res;
        res.x = basic_solution();
        if (entering) {  // unbounded: no admissible leaving row for this column
            res.status = LpStatus::Unbounded;
            res.ray.assign(n_, 0);
            res.ray[*entering] = 1;
            for (std::size_t i = 0; i < m_; ++i)
                if (basis_[i] < n_) res.ray[basis_[i]] = -tab_[i][*entering];
            return res;
        }
        res.status = LpStatus::Optimal;
        res.objective = objective(phase2);
        res.dual = extract_dual(phase2);
        return res;
    }

  private:
    std::size_t rhs() const { return n_ + m_; }

    Rational reduced_cost(const RatVec& c, std::size_t j) const {
        Rational z = c[j];
        for (std::size_t i = 0; i < m_; ++i)
            if (c[basis_[i]] != 0) z -= c[basis_[i]] * tab_[i][j];
        return z;
    }

    Rational objective(const RatVec& c) const {
        Rational v = 0;
        for (std::size_t i = 0; i < m_; ++i)
            if (c[basis_[i]] != 0) v += c[basis_[i]] * tab_[i][rhs()];
        return v;
    }

    void pivot(std::size_t row, std::size_t col) {
        const Rational inv = Rational(1) / tab_[row][col];
        for (auto& v : tab_[row]) v *= inv;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == row || tab_[i][col] == 0) continue;
            const Rational f = tab_[i][col];
            for (std::size_t j = 0; j <= rhs(); ++j) tab_[i][j] -= f * tab_[row][j];
        }
        basis_[row] = col;
    }

    /// Bland's rule until optimal (returns nullopt) or unbounded (returns the
    /// entering column that has no admissible pivot row).
    std::optional<std::size_t> pivot_to_optimum(const RatVec& c, std::size_t allowed_cols) {
        for (;;) {
            std::optional<std::size_t> enter;
            for (std::size_t j = 0; j < allowed_cols; ++j)
                if (reduced_cost(c, j) < 0) {
                    enter = j;
                    break;
                }
            if (!enter) return std::nullopt;
            std::optional<std::size_t> leave;
            Rational best_ratio = 0;
            for (std::size_t i = 0; i < m_; ++i) {
                if (dead_[i] || tab_[i][*enter] <= 0) continue;
                const Rational ratio = tab_[i][rhs()] / tab_[i][*enter];
                if (!leave || ratio < best_ratio ||
                    (ratio == best_ratio && basis_[i] < basis_[*leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
            if (!leave) return enter;
            pivot(*leave, *enter);
        }
    }

    void drive_out_artificials() {
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_) continue;
            std::optional<std::size_t> col;
            for (std::size_t j = 0; j < n_; ++j)
                if (tab_[i][j] != 0) {
                    col = j;
                    break;
                }
            if (col)
                pivot(i, *col);  // rhs is 0 here, so any nonzero entry is a valid pivot
            else
                dead_[i] = true;  // redundant row
        }
    }

    RatVec basic_solution() const {
        RatVec x(n_, 0);
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] < n_) x[basis_[i]] = tab_[i][rhs()];
        return x;
    }

    /// y = c_Bᵀ B⁻¹, read off the artificial columns, mapped back through the row flips.
    RatVec extract_dual(const RatVec& c) const {
        RatVec y(m_, 0);
        for (std::size_t i = 0; i < m_; ++i)
            y[i] = Rational(flip_[i]) * (c[n_ + i] - reduced_cost(c, n_ + i));
        return y;
    }

    std::size_t m_, n_;
    RatVec cost_;
    std::vector<int> flip_;
    RatMat tab_;
    std::vector<std::size_t> basis_;
    std::vector<bool> dead_;
};

inline LpResult simplex_min(const std::vector<RatVec>& cols, const RatVec& b, const RatVec& c) {
    return ExactSimplex(cols, b, c).run();
}

inline void validate_problem(const ConeProblem& p) {
    if (p.dim == 0) throw std::invalid_argument("ConeProblem: dimension must be positive");
    if (p.target.size() != p.dim) throw std::invalid_argument("ConeProblem: target dimension mismatch");
    for (const auto& g : p.generators)
        if (g.size() != p.dim) throw std::invalid_argument("ConeProblem: generator dimension mismatch");
}

}  // namespace detail

/// Exact re-check of a verdict's certificate against the problem, independent
/// of the solver path. Returns false on any violated equality or inequality.
inline bool verify_certificate(const ConeProblem& p, const ConeVerdict& v) {
    detail::validate_problem(p);
    if (v.answer != v.has_membership()) return false;
    if (v.has_membership()) {
        const auto& cert = v.membership();
        if (cert.coefficients.size() != p.generators.size()) return false;
        RatVec sum(p.dim, 0);
        for (std::size_t a = 0; a < p.generators.size(); ++a) {
            const auto& x = cert.coefficients[a];
            if (cert.open ? (x <= 0) : (x < 0)) return false;
            for (std::size_t i = 0; i < p.dim; ++i) sum[i] += x * p.generators[a][i];
        }
        return sum == p.target;
    }
    const auto& cert = v.separation();
    if (cert.functional.size() != p.dim) return false;
    bool some_strict = false;
    for (const auto& g : p.generators) {
        const Rational pg = dot(cert.functional, g);
        if (pg < 0) return false;
        if (pg > 0) some_strict = true;
    }
    const Rational pt = dot(cert.functional, p.target);
    if (cert.mode == SeparationMode::RefutesClosed) return pt < 0;
    return pt <= 0 && (pt < 0 || some_strict);
}

namespace detail {

inline ConeVerdict checked(const ConeProblem& p, ConeVerdict v) {
    if (!verify_certificate(p, v)) throw std::logic_error("conecert: produced certificate fails verification");
    return v;
}

}  // namespace detail

/// Is target ∈ Σ_a ℝ_{≥0}·gen_a?  True with x ≥ 0, or false with a separating functional.
inline ConeVerdict closed_cone_member(const ConeProblem& p) {
    detail::validate_problem(p);
    if (p.generators.empty()) {
        if (is_zero_vec(p.target)) return detail::checked(p, {true, MembershipCertificate{{}, false}});
        return detail::checked(p, {false, SeparationCertificate{vneg(p.target), SeparationMode::RefutesClosed}});
    }
    const RatVec zero_cost(p.generators.size(), 0);
    const auto lp = detail::simplex_min(p.generators, p.target, zero_cost);
    if (lp.status == detail::LpStatus::Infeasible)
        return detail::checked(p, {false, SeparationCertificate{vneg(lp.farkas), SeparationMode::RefutesClosed}});
    return detail::checked(p, {true, MembershipCertificate{lp.x, false}});
}

/// Is target ∈ Σ_a ℝ_{>0}·gen_a (the relative interior)?  Decided by the exact LP
///   max t  s.t.  Σ_a x_a gen_a = target, x_a ≥ t,
/// true iff the optimum satisfies t* > 0 (or the LP is unbounded).
inline ConeVerdict open_cone_member(const ConeProblem& p) {
    detail::validate_problem(p);
    const std::size_t n = p.generators.size();
    if (n == 0) {
        if (is_zero_vec(p.target)) return detail::checked(p, {true, MembershipCertificate{{}, true}});
        return detail::checked(p, {false, SeparationCertificate{vneg(p.target), SeparationMode::RefutesOpen}});
    }
    // substitute y_a = x_a - t ≥ 0, t = t⁺ - t⁻:  Σ y_a gen_a + t·G = target with G = Σ gen_a
    RatVec gsum(p.dim, 0);
    for (const auto& g : p.generators) gsum = vadd(gsum, g);
    auto cols = p.generators;
    cols.push_back(gsum);
    cols.push_back(vneg(gsum));
    RatVec c(n + 2, 0);
    c[n] = -1;  // maximize t
    c[n + 1] = 1;

    const auto lp = detail::simplex_min(cols, p.target, c);
    if (lp.status == detail::LpStatus::Infeasible)
        return detail::checked(p, {false, SeparationCertificate{vneg(lp.farkas), SeparationMode::RefutesOpen}});

    RatVec point = lp.x;
    if (lp.status == detail::LpStatus::Unbounded) {
        // walk along the improving ray until t ≥ 1
        const Rational t0 = point[n] - point[n + 1];
        const Rational dt = lp.ray[n] - lp.ray[n + 1];
        if (t0 < 1) {
            const Rational step = (Rational(1) - t0) / dt;
            for (std::size_t j = 0; j < n + 2; ++j) point[j] += step * lp.ray[j];
        }
    } else if (-lp.objective <= 0) {
        return detail::checked(p, {false, SeparationCertificate{vneg(lp.dual), SeparationMode::RefutesOpen}});
    }
    const Rational t = point[n] - point[n + 1];
    RatVec coeffs(n);
    for (std::size_t a = 0; a < n; ++a) coeffs[a] = point[a] + t;
    return detail::checked(p, {true, MembershipCertificate{std::move(coeffs), true}});
}

/// True iff the open cone of the generators is the whole dim-dimensional space:
/// the generators span it and 0 admits a strictly positive vanishing combination.
inline bool cone_is_full(const std::vector<RatVec>& generators, std::size_t dim) {
    if (generators.empty()) throw std::invalid_argument("cone_is_full: generators must be nonempty");
    RatMat rows;
    rows.reserve(generators.size());
    for (const auto& g : generators) {
        if (g.size() != dim) throw std::invalid_argument("cone_is_full: generator dimension mismatch");
        rows.push_back(g);
    }
    if (rat_rank(std::move(rows)) != dim) return false;
    const ConeProblem zero{dim, generators, RatVec(dim, 0)};
    return open_cone_member(zero).answer;
}

}  // namespace todacert
