#pragma once

#include "todacert/conecert.hpp"
#include "todacert/rootsys.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace todacert {

/// Periodic rectangular grid on the flat 2-torus [0,Lx) × [0,Ly).
/// Cells are indexed row-major with ix fastest.
struct TorusGrid {
    int nx = 0, ny = 0;
    double lx = 1.0, ly = 1.0;

    int cells() const { return nx * ny; }
    double hx() const { return lx / nx; }
    double hy() const { return ly / ny; }
    double cell_area() const { return hx() * hy(); }
    double volume() const { return lx * ly; }
    int index(int ix, int iy) const { return iy * nx + ix; }
};

/// Cartan-valued grid function: one column per cell, coroot coordinates.
using Field = Eigen::MatrixXd;
using ScalarField = Eigen::ArrayXd;

struct TodaState {
    Field omega;
};

/// Discretized Toda-type problem  Δ Ω + Σ_α c_α e^{2α(Ω)} h_α = F  with the
/// geometric (nonnegative-spectrum) Laplacian, so that solving it is the convex
/// minimization of `energy`.
class TodaProblem {
  public:
    TodaProblem(std::shared_ptr<const RootSystem> rs, TorusGrid grid, std::vector<Root> active,
                std::vector<ScalarField> coeffs, Field source)
        : rs_(std::move(rs)),
          grid_(grid),
          active_(std::move(active)),
          coeffs_(std::move(coeffs)),
          source_(std::move(source)) {
        validate();
        precompute();
    }

    const RootSystem& root_system() const { return *rs_; }
    const TorusGrid& grid() const { return grid_; }
    const std::vector<Root>& active_roots() const { return active_; }
    const std::vector<ScalarField>& coefficient_fields() const { return coeffs_; }
    const Field& source() const { return source_; }
    const Eigen::VectorXd& mean_source() const { return mean_source_; }
    Eigen::Index rank() const { return static_cast<Eigen::Index>(rs_->rank()); }

    const Eigen::MatrixXd& killing() const { return killing_; }
    const Eigen::MatrixXd& coroot_matrix() const { return coroots_; }          // rank × #active
    const Eigen::MatrixXd& functional_matrix() const { return functionals_; }  // #active × rank
    const Eigen::VectorXd& dual_norms() const { return dual_norms_; }          // B*(α,α)
    const Eigen::MatrixXd& kernel_basis() const { return kernel_; }            // rank × kdim, B-orthonormal
    const std::vector<RatVec>& exact_coroots() const { return exact_coroots_; }

    Field zero_state() const { return Field::Zero(rank(), grid_.cells()); }

    /// ⟨U,V⟩ = Σ_cells B(U_c, V_c) · cellarea
    double inner(const Field& u, const Field& v) const {
        return (u.cwiseProduct(killing_ * v)).sum() * grid_.cell_area();
    }

    /// Geometric periodic 5-point Laplacian (nonnegative spectrum), columnwise.
    Field laplacian(const Field& v) const {
        const double ihx2 = 1.0 / (grid_.hx() * grid_.hx());
        const double ihy2 = 1.0 / (grid_.hy() * grid_.hy());
        return -ihx2 * (v(Eigen::all, xp_) - 2.0 * v + v(Eigen::all, xm_)) -
               ihy2 * (v(Eigen::all, yp_) - 2.0 * v + v(Eigen::all, ym_));
    }

    Field shift_x(const Field& v) const { return v(Eigen::all, xp_); }
    Field shift_y(const Field& v) const { return v(Eigen::all, yp_); }

    /// Projection of a Cartan vector onto the gauge kernel {d : α(d)=0 ∀ active α}.
    Eigen::VectorXd kernel_project(const Eigen::VectorXd& v) const {
        if (kernel_.cols() == 0) return Eigen::VectorXd::Zero(rank());
        return kernel_ * (kernel_.transpose() * (killing_ * v));
    }

  private:
    void validate() const {
        if (!rs_) throw std::invalid_argument("TodaProblem: missing root system");
        if (grid_.nx < 4 || grid_.ny < 4) throw std::invalid_argument("TodaProblem: grid must be at least 4x4");
        if (!(grid_.lx > 0) || !(grid_.ly > 0)) throw std::invalid_argument("TodaProblem: periods must be positive");
        if (active_.empty()) throw std::invalid_argument("TodaProblem: no active roots");
        if (coeffs_.size() != active_.size())
            throw std::invalid_argument("TodaProblem: one coefficient field per active root required");
        for (std::size_t a = 0; a < active_.size(); ++a) {
            rs_->index_of(active_[a]);  // throws when not a root
            for (std::size_t b = a + 1; b < active_.size(); ++b)
                if (active_[a] == active_[b]) throw std::invalid_argument("TodaProblem: duplicate active root");
            const auto& c = coeffs_[a];
            if (c.size() != grid_.cells()) throw std::invalid_argument("TodaProblem: coefficient field shape mismatch");
            if ((c < 0.0).any()) throw std::invalid_argument("TodaProblem: coefficient field has negative entries");
            if (!(c > 0.0).any())
                throw std::invalid_argument("TodaProblem: coefficient field vanishes identically for an active root");
        }
        if (source_.rows() != static_cast<Eigen::Index>(rs_->rank()) || source_.cols() != grid_.cells())
            throw std::invalid_argument("TodaProblem: source field shape mismatch");
    }

    void precompute() {
        const auto l = rank();
        const auto n = static_cast<Eigen::Index>(active_.size());
        killing_.resize(l, l);
        for (Eigen::Index i = 0; i < l; ++i)
            for (Eigen::Index j = 0; j < l; ++j)
                killing_(i, j) = to_double(rs_->killing_matrix()[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);

        functionals_.resize(n, l);
        coroots_.resize(l, n);
        dual_norms_.resize(n);
        RatMat func_rows;
        for (Eigen::Index a = 0; a < n; ++a) {
            const auto& root = active_[static_cast<std::size_t>(a)];
            const auto f = rs_->functional_of(root);
            const auto h = rs_->coroot_of(root);
            func_rows.push_back(f.coords);
            dual_norms_(a) = to_double(rs_->killing_dual(f, f));
            for (Eigen::Index k = 0; k < l; ++k) {
                functionals_(a, k) = to_double(f.coords[static_cast<std::size_t>(k)]);
                coroots_(k, a) = to_double(h.coords[static_cast<std::size_t>(k)]);
            }
            exact_coroots_.push_back(h.coords);
        }

        // gauge kernel: exact null space of the active functionals, then
        // B-orthonormalized in doubles
        const RatMat null_rows = nullspace(func_rows);
        kernel_.resize(l, static_cast<Eigen::Index>(null_rows.size()));
        for (std::size_t k = 0; k < null_rows.size(); ++k)
            for (Eigen::Index i = 0; i < l; ++i)
                kernel_(i, static_cast<Eigen::Index>(k)) = to_double(null_rows[k][static_cast<std::size_t>(i)]);
        for (Eigen::Index k = 0; k < kernel_.cols(); ++k) {
            for (Eigen::Index j = 0; j < k; ++j)
                kernel_.col(k) -= (kernel_.col(j).dot(killing_ * kernel_.col(k))) * kernel_.col(j);
            const double nrm = std::sqrt(kernel_.col(k).dot(killing_ * kernel_.col(k)));
            kernel_.col(k) /= nrm;
        }

        mean_source_ = source_.rowwise().mean();

        const int nc = grid_.cells();
        xp_.resize(nc); xm_.resize(nc); yp_.resize(nc); ym_.resize(nc);
        for (int iy = 0; iy < grid_.ny; ++iy)
            for (int ix = 0; ix < grid_.nx; ++ix) {
                const int c = grid_.index(ix, iy);
                xp_[c] = grid_.index((ix + 1) % grid_.nx, iy);
                xm_[c] = grid_.index((ix + grid_.nx - 1) % grid_.nx, iy);
                yp_[c] = grid_.index(ix, (iy + 1) % grid_.ny);
                ym_[c] = grid_.index(ix, (iy + grid_.ny - 1) % grid_.ny);
            }
    }

    std::shared_ptr<const RootSystem> rs_;
    TorusGrid grid_;
    std::vector<Root> active_;
    std::vector<ScalarField> coeffs_;
    Field source_;

    Eigen::MatrixXd killing_, functionals_, coroots_, kernel_;
    Eigen::VectorXd dual_norms_, mean_source_;
    std::vector<RatVec> exact_coroots_;
    std::vector<int> xp_, xm_, yp_, ym_;
};

inline TodaProblem assemble_problem(std::shared_ptr<const RootSystem> rs, TorusGrid grid,
                                    std::vector<Root> active, std::vector<ScalarField> coeffs,
                                    Field source) {
    return TodaProblem(std::move(rs), grid, std::move(active), std::move(coeffs), std::move(source));
}

namespace detail {

/// 2α(Ω) for every active root; rows follow the active list.
inline Eigen::MatrixXd exponents(const TodaProblem& p, const Field& omega) {
    return 2.0 * (p.functional_matrix() * omega);
}

inline void check_exponents(const Eigen::MatrixXd& expo) {
    if (!expo.size()) return;
    const double m = expo.cwiseAbs().maxCoeff();
    if (m > 700.0)
        throw std::overflow_error("toda: exponent argument " + std::to_string(m) +
                                  " exceeds the +-700 safety range");
    if (!std::isfinite(m)) throw std::overflow_error("toda: non-finite state");
}

inline double energy_impl(const TodaProblem& p, const Field& omega, bool* overflow) {
    const auto expo = exponents(p, omega);
    if (overflow) {
        *overflow = false;
        const double m = expo.size() ? expo.cwiseAbs().maxCoeff() : 0.0;
        if (!std::isfinite(m) || m > 700.0) {
            *overflow = true;
            return std::numeric_limits<double>::infinity();
        }
    } else {
        check_exponents(expo);
    }
    const auto& grid = p.grid();
    const Field gx = (p.shift_x(omega) - omega) / grid.hx();
    const Field gy = (p.shift_y(omega) - omega) / grid.hy();
    double e = 0.5 * ((gx.cwiseProduct(p.killing() * gx)).sum() + (gy.cwiseProduct(p.killing() * gy)).sum());
    for (std::size_t a = 0; a < p.active_roots().size(); ++a) {
        const auto ai = static_cast<Eigen::Index>(a);
        e += (p.coefficient_fields()[a] * expo.row(ai).array().transpose().exp()).sum() / p.dual_norms()(ai);
    }
    e -= (p.source().cwiseProduct(p.killing() * omega)).sum();
    return e * grid.cell_area();
}

}  // namespace detail

/// Convex energy whose Euler–Lagrange equation is the discrete Toda equation:
/// E(Ω) = Σ_cells [ ½B(∇Ω,∇Ω) + Σ_α (c_α/B*(α,α)) e^{2α(Ω)} − B(F,Ω) ] · cellarea.
inline double energy(const TodaProblem& p, const TodaState& st) {
    return detail::energy_impl(p, st.omega, nullptr);
}

/// B-gradient of the energy per unit cell measure; this is exactly the
/// residual field of the discrete equation:  ΔΩ + Σ_α c_α e^{2α(Ω)} h_α − F.
inline Field gradient(const TodaProblem& p, const TodaState& st) {
    const auto expo = detail::exponents(p, st.omega);
    detail::check_exponents(expo);
    Field g = p.laplacian(st.omega) - p.source();
    for (std::size_t a = 0; a < p.active_roots().size(); ++a) {
        const auto ai = static_cast<Eigen::Index>(a);
        const Eigen::ArrayXd w = p.coefficient_fields()[a] * expo.row(ai).array().transpose().exp();
        g.noalias() += p.coroot_matrix().col(ai) * w.matrix().transpose();
    }
    return g;
}

/// Newton linearization: H V = ΔV + Σ_α 2 c_α e^{2α(Ω)} α(V) h_α.
inline Field hessian_apply(const TodaProblem& p, const TodaState& st, const Field& v) {
    const auto expo = detail::exponents(p, st.omega);
    detail::check_exponents(expo);
    Field h = p.laplacian(v);
    const Eigen::MatrixXd av = p.functional_matrix() * v;  // α(V) per active row
    for (std::size_t a = 0; a < p.active_roots().size(); ++a) {
        const auto ai = static_cast<Eigen::Index>(a);
        const Eigen::ArrayXd w =
            2.0 * p.coefficient_fields()[a] * expo.row(ai).array().transpose().exp() * av.row(ai).array().transpose();
        h.noalias() += p.coroot_matrix().col(ai) * w.matrix().transpose();
    }
    return h;
}

/// Max over cells of the B-norm of the discrete equation residual.
inline double residual(const TodaProblem& p, const TodaState& st) {
    const Field g = gradient(p, st);
    return (g.cwiseProduct(p.killing() * g)).colwise().sum().cwiseSqrt().maxCoeff();
}

/// B-norm of Σ_cells (Σ_α c_α e^{2α(Ω)} h_α − F) · cellarea, the discrete
/// integral of the equation (the Laplacian term sums to zero over the torus).
inline double mean_balance_check(const TodaProblem& p, const TodaState& st) {
    const auto expo = detail::exponents(p, st.omega);
    detail::check_exponents(expo);
    Eigen::VectorXd total = -p.source().rowwise().sum();
    for (std::size_t a = 0; a < p.active_roots().size(); ++a) {
        const auto ai = static_cast<Eigen::Index>(a);
        const double w = (p.coefficient_fields()[a] * expo.row(ai).array().transpose().exp()).sum();
        total += w * p.coroot_matrix().col(ai);
    }
    total *= p.grid().cell_area();
    return std::sqrt(total.dot(p.killing() * total));
}

/// Rationalizes the source mean G and asks for G ∈ Σ_{α active} ℝ_{>0} h_α,
/// the existence criterion the solver's convergence must reproduce.
inline ConeVerdict feasibility_precheck(const TodaProblem& p, std::int64_t max_denominator = 1000000) {
    ConeProblem cone;
    cone.dim = static_cast<std::size_t>(p.rank());
    cone.generators = p.exact_coroots();
    cone.target.reserve(cone.dim);
    for (Eigen::Index k = 0; k < p.rank(); ++k)
        cone.target.push_back(rationalize(p.mean_source()(k), max_denominator));
    return open_cone_member(cone);
}

enum class SolveVerdict { Converged, Infeasible, IterationLimit };

inline const char* to_string(SolveVerdict v) {
    switch (v) {
        case SolveVerdict::Converged: return "converged";
        case SolveVerdict::Infeasible: return "infeasible";
        default: return "iteration-limit";
    }
}

struct SolveOptions {
    double tol = 1e-8;
    int max_iter = 200;
    bool force_iterate = false;
    double boundary_guard = 1e-9;
    double cg_rtol = 1e-10;
    int cg_max_iter = 50000;
    double armijo_slope = 1e-4;
    double min_step = 1e-14;
    std::int64_t rationalize_denominator = 1000000;
};

struct SolveReport {
    SolveVerdict verdict = SolveVerdict::IterationLimit;
    double residual = std::numeric_limits<double>::quiet_NaN();
    double mean_balance = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    std::vector<double> energy_trace;
    std::optional<Eigen::VectorXd> recession;  // constant descent direction, coroot coords
    bool precheck_feasible = false;
    double precheck_margin = 0.0;   // >0 interior witness, <=0 separation pairing
    bool boundary_undetermined = false;
};

namespace detail {

/// Constant-field kernel component of a field, as a Cartan vector.
inline Eigen::VectorXd kernel_mean(const TodaProblem& p, const Field& v) {
    return p.kernel_project(v.rowwise().mean());
}

/// CG on the B-inner product for H restricted to the complement of the gauge kernel.
inline Field cg_solve(const TodaProblem& p, const TodaState& st, const Field& rhs,
                      const SolveOptions& opts) {
    const Eigen::MatrixXd expo = exponents(p, st.omega);
    check_exponents(expo);
    std::vector<Eigen::ArrayXd> weights;
    for (std::size_t a = 0; a < p.active_roots().size(); ++a)
        weights.push_back(2.0 * p.coefficient_fields()[a] *
                          expo.row(static_cast<Eigen::Index>(a)).array().transpose().exp());
    auto apply = [&](const Field& v) {
        Field h = p.laplacian(v);
        const Eigen::MatrixXd av = p.functional_matrix() * v;
        for (std::size_t a = 0; a < p.active_roots().size(); ++a) {
            const auto ai = static_cast<Eigen::Index>(a);
            const Eigen::ArrayXd w = weights[a] * av.row(ai).array().transpose();
            h.noalias() += p.coroot_matrix().col(ai) * w.matrix().transpose();
        }
        return h;
    };
    auto deproject = [&](Field& v) {
        if (p.kernel_basis().cols() == 0) return;
        const Eigen::VectorXd k = kernel_mean(p, v);
        v.colwise() -= k;
    };

    Field x = p.zero_state();
    Field r = rhs;
    deproject(r);
    double rr = p.inner(r, r);
    const double target = opts.cg_rtol * opts.cg_rtol * rr;
    if (rr == 0.0) return x;
    Field d = r;
    for (int it = 0; it < opts.cg_max_iter; ++it) {
        Field hd = apply(d);
        deproject(hd);
        const double dhd = p.inner(d, hd);
        if (dhd < -1e-12 * p.inner(d, d))
            throw std::runtime_error("toda: conjugate-gradient breakdown (operator not positive on the search space)");
        // an exactly singular direction (mass term underflowed to zero) ends the solve
        if (!(dhd > 0)) break;
        const double alpha = rr / dhd;
        x += alpha * d;
        r -= alpha * hd;
        const double rr_new = p.inner(r, r);
        if (rr_new <= target) break;
        d = r + (rr_new / rr) * d;
        rr = rr_new;
    }
    return x;
}

/// Interior witness for a membership verdict: the smallest positive coefficient.
inline double membership_margin(const ConeVerdict& v) {
    const auto& c = v.membership().coefficients;
    if (c.empty()) return std::numeric_limits<double>::infinity();
    Rational m = c.front();
    for (const auto& x : c) m = std::min(m, x);
    return to_double(m);
}

}  // namespace detail

/// Damped Newton descent on the convex energy. When the precheck refutes open
/// membership the solver reports infeasibility up front (unless forced), with
/// the separating functional converted into a constant recession direction d:
/// α(d) ≤ 0 for every active α and B(G,d) ≥ 0 (strict off the cone boundary),
/// so the energy is non-increasing, and off the boundary unbounded below,
/// along t·d.
inline std::pair<TodaState, SolveReport> solve(const TodaProblem& p, const SolveOptions& opts = {}) {
    SolveReport report;
    TodaState state{p.zero_state()};

    const ConeVerdict pre = feasibility_precheck(p, opts.rationalize_denominator);
    report.precheck_feasible = pre.answer;
    if (pre.answer) {
        report.precheck_margin = detail::membership_margin(pre);
    } else {
        // signed pairing ⟨s, G⟩ ≤ 0, normalized; 0 exactly on the relative boundary
        const auto& s = pre.separation().functional;
        RatVec target;
        for (Eigen::Index k = 0; k < p.rank(); ++k)
            target.push_back(rationalize(p.mean_source()(k), opts.rationalize_denominator));
        Rational norm = 0;
        for (const auto& x : s) norm += boost::multiprecision::abs(x);
        report.precheck_margin = norm == 0 ? 0.0 : to_double(dot(s, target) / norm);
    }
    report.boundary_undetermined = std::abs(report.precheck_margin) < opts.boundary_guard;

    if (!pre.answer) {
        // exact recession direction d = -B⁻¹ s
        const auto& s = pre.separation().functional;
        RatMat b;
        for (std::size_t i = 0; i < p.root_system().rank(); ++i) b.push_back(p.root_system().killing_matrix()[i]);
        const auto binv = invert(b);
        RatVec d_exact = mat_vec(*binv, s);
        Eigen::VectorXd d(p.rank());
        for (Eigen::Index k = 0; k < p.rank(); ++k) d(k) = -to_double(d_exact[static_cast<std::size_t>(k)]);
        const double nrm = std::sqrt(d.dot(p.killing() * d));
        if (nrm > 0) d /= nrm;
        report.recession = d;
        if (!opts.force_iterate) {
            report.verdict = SolveVerdict::Infeasible;
            report.residual = residual(p, state);
            report.mean_balance = mean_balance_check(p, state);
            report.energy_trace.push_back(energy(p, state));
            return {std::move(state), report};
        }
    }

    double e = energy(p, state);
    report.energy_trace.push_back(e);
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        const Field g = gradient(p, state);
        report.residual = (g.cwiseProduct(p.killing() * g)).colwise().sum().cwiseSqrt().maxCoeff();
        if (report.residual <= opts.tol) {
            report.verdict = SolveVerdict::Converged;
            report.iterations = iter;
            // gauge fix: remove the exact kernel component
            state.omega.colwise() -= detail::kernel_mean(p, state.omega);
            report.mean_balance = mean_balance_check(p, state);
            return {std::move(state), report};
        }

        // split off the kernel component of the gradient; Newton handles the
        // complement, plain steepest descent handles the (linear) kernel part
        const Eigen::VectorXd gk = detail::kernel_mean(p, g);
        Field g_perp = g;
        g_perp.colwise() -= gk;
        Field step = detail::cg_solve(p, state, -g_perp, opts);
        step.colwise() -= gk;

        const double slope = p.inner(g, step);
        if (!(slope < 0)) break;  // no descent direction left: stalled

        bool accepted = false;
        const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(e);
        if (-slope <= noise) {
            // quadratic basin: the predicted decrease is below the energy's
            // roundoff floor, so backtracking would only chase noise; take the
            // full Newton step (overflow-guarded) and let the residual decide
            bool overflow = false;
            TodaState trial{state.omega + step};
            const double et = detail::energy_impl(p, trial.omega, &overflow);
            if (!overflow) {
                state = std::move(trial);
                e = et;
                accepted = true;
            }
        } else {
            double t = 1.0;
            while (t >= opts.min_step) {
                bool overflow = false;
                TodaState trial{state.omega + t * step};
                const double et = detail::energy_impl(p, trial.omega, &overflow);
                if (!overflow && et <= e + opts.armijo_slope * t * slope) {
                    state = std::move(trial);
                    e = et;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
        }
        if (!accepted) break;  // line search exhausted
        report.energy_trace.push_back(e);
        report.iterations = iter + 1;
    }

    report.verdict = SolveVerdict::IterationLimit;
    report.residual = residual(p, state);
    report.mean_balance = mean_balance_check(p, state);
    return {std::move(state), report};
}

}  // namespace todacert
