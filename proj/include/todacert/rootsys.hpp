#pragma once

#include "todacert/ratlin.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace todacert {

/// A root in simple-root integer coordinates.
struct Root {
    std::vector<int> coords;

    int height() const { return std::accumulate(coords.begin(), coords.end(), 0); }
    bool operator==(const Root&) const = default;
};

inline Root operator-(const Root& a) {
    Root r = a;
    for (auto& c : r.coords) c = -c;
    return r;
}

/// Element of the Cartan space in simple-coroot coordinates.
struct CartanVector {
    RatVec coords;
    bool operator==(const CartanVector&) const = default;

    // hidden friends: found through ADL only, so they never take part in
    // overload resolution of unrelated (e.g. Eigen) expressions
    friend CartanVector operator+(const CartanVector& a, const CartanVector& b) {
        return {vadd(a.coords, b.coords)};
    }
    friend CartanVector operator-(const CartanVector& a) { return {vneg(a.coords)}; }
    friend CartanVector operator*(const Rational& c, const CartanVector& v) {
        return {vscale(c, v.coords)};
    }
};

/// Linear functional on the Cartan space in fundamental-weight coordinates
/// (the basis dual to the simple coroots), so pairings are exact dot products.
struct RootFunctional {
    RatVec coords;
    bool operator==(const RootFunctional&) const = default;
};

inline Rational pairing(const RootFunctional& f, const CartanVector& v) { return dot(f.coords, v.coords); }

struct RootSystemSpec {
    char type = 0;                                      // 'A'..'G' when named
    int rank = 0;                                       //   (named form only)
    std::optional<std::vector<std::vector<int>>> cartan;  // explicit form
    std::size_t closure_bound = 2000;                   // max |Δ| before giving up

    static RootSystemSpec named(char type, int rank) {
        RootSystemSpec s;
        s.type = type;
        s.rank = rank;
        return s;
    }
    static RootSystemSpec from_cartan(std::vector<std::vector<int>> matrix) {
        RootSystemSpec s;
        s.cartan = std::move(matrix);
        return s;
    }
};

namespace detail {

inline std::vector<std::vector<int>> simply_laced_chain(int l) {
    std::vector<std::vector<int>> a(l, std::vector<int>(l, 0));
    for (int i = 0; i < l; ++i) a[i][i] = 2;
    for (int i = 0; i + 1 < l; ++i) a[i][i + 1] = a[i + 1][i] = -1;
    return a;
}

inline std::vector<std::vector<int>> named_cartan(char type, int l) {
    auto need = [&](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("root system ") + type + std::to_string(l) + ": " + what);
    };
    switch (type) {
        case 'A':
            need(l >= 1, "rank must be >= 1");
            return simply_laced_chain(l);
        case 'B': {
            need(l >= 2, "rank must be >= 2");
            auto a = simply_laced_chain(l);
            a[l - 2][l - 1] = -2;  // short last simple root
            return a;
        }
        case 'C': {
            need(l >= 2, "rank must be >= 2");
            auto a = simply_laced_chain(l);
            a[l - 1][l - 2] = -2;  // long last simple root
            return a;
        }
        case 'D': {
            need(l >= 3, "rank must be >= 3");
            auto a = simply_laced_chain(l);
            a[l - 2][l - 1] = a[l - 1][l - 2] = 0;
            a[l - 3][l - 1] = a[l - 1][l - 3] = -1;  // fork at the tail node
            return a;
        }
        case 'E': {
            need(l == 6 || l == 7 || l == 8, "rank must be 6, 7 or 8");
            std::vector<std::vector<int>> a(l, std::vector<int>(l, 0));
            for (int i = 0; i < l; ++i) a[i][i] = 2;
            auto bond = [&](int i, int j) { a[i][j] = a[j][i] = -1; };
            bond(0, 2);
            for (int i = 2; i + 1 < l; ++i) bond(i, i + 1);
            bond(1, 3);  // branch node
            return a;
        }
        case 'F': {
            need(l == 4, "rank must be 4");
            auto a = simply_laced_chain(4);
            a[1][2] = -2;
            return a;
        }
        case 'G': {
            need(l == 2, "rank must be 2");
            return {{2, -1}, {-3, 2}};
        }
        default:
            throw std::invalid_argument(std::string("unknown root system type '") + type + "'");
    }
}

inline void validate_cartan(const std::vector<std::vector<int>>& a) {
    const std::size_t l = a.size();
    if (l == 0) throw std::invalid_argument("Cartan matrix: empty");
    for (std::size_t i = 0; i < l; ++i) {
        if (a[i].size() != l) throw std::invalid_argument("Cartan matrix: not square");
        if (a[i][i] != 2) throw std::invalid_argument("Cartan matrix: diagonal entry != 2");
        for (std::size_t j = 0; j < l; ++j) {
            if (i == j) continue;
            if (a[i][j] > 0) throw std::invalid_argument("Cartan matrix: positive off-diagonal entry");
            if ((a[i][j] == 0) != (a[j][i] == 0))
                throw std::invalid_argument("Cartan matrix: zero pattern not symmetric");
        }
    }
}

struct RootOrder {
    bool operator()(const Root& a, const Root& b) const {
        const int ha = a.height(), hb = b.height();
        if (ha != hb) return ha < hb;
        return a.coords < b.coords;
    }
};

}  // namespace detail

/// Finite root system built from Cartan data by reflection closure, together
/// with the Killing form B(u,v) = Σ_α α(u)α(v) on the Cartan space, its dual
/// form on functionals, and the coroot of every root.
class RootSystem {
  public:
    explicit RootSystem(const RootSystemSpec& spec) : spec_(spec) {
        cartan_ = spec.cartan ? *spec.cartan : detail::named_cartan(spec.type, spec.rank);
        detail::validate_cartan(cartan_);
        close_under_reflections(spec.closure_bound);
        std::sort(roots_.begin(), roots_.end(), detail::RootOrder{});
        for (std::size_t i = 0; i < roots_.size(); ++i) index_[roots_[i].coords] = i;
        build_forms();
        build_coroots();
        find_highest_root();
    }

    std::size_t rank() const { return cartan_.size(); }
    const std::vector<std::vector<int>>& cartan_matrix() const { return cartan_; }
    const std::vector<Root>& roots() const { return roots_; }
    std::size_t root_count() const { return roots_.size(); }

    Root simple_root(std::size_t i) const {
        if (i >= rank()) throw std::out_of_range("simple_root: index out of range");
        std::vector<int> c(rank(), 0);
        c[i] = 1;
        return Root{std::move(c)};
    }

    bool contains(std::span<const int> coords) const {
        if (coords.size() != rank()) throw std::invalid_argument("is_root: dimension mismatch");
        return index_.find(std::vector<int>(coords.begin(), coords.end())) != index_.end();
    }

    std::size_t index_of(const Root& r) const {
        auto it = index_.find(r.coords);
        if (it == index_.end()) throw std::invalid_argument("not a root of this system");
        return it->second;
    }

    /// α as a functional in fundamental-weight coordinates: f_j = α(h_{α_j}).
    RootFunctional functional_of(const Root& r) const {
        if (r.coords.size() != rank()) throw std::invalid_argument("functional_of: dimension mismatch");
        RatVec f(rank(), 0);
        for (std::size_t j = 0; j < rank(); ++j) {
            long v = 0;
            for (std::size_t k = 0; k < rank(); ++k) v += static_cast<long>(r.coords[k]) * cartan_[k][j];
            f[j] = v;
        }
        return RootFunctional{std::move(f)};
    }

    const CartanVector& coroot_of(const Root& r) const { return coroots_[index_of(r)]; }

    /// Killing form on Cartan vectors, B(u,v) = Σ_α α(u)α(v).
    Rational killing(const CartanVector& u, const CartanVector& v) const {
        if (u.coords.size() != rank() || v.coords.size() != rank())
            throw std::invalid_argument("killing: dimension mismatch");
        return dot(u.coords, mat_vec(killing_, v.coords));
    }

    /// Dual form B* on functionals.
    Rational killing_dual(const RootFunctional& f, const RootFunctional& g) const {
        if (f.coords.size() != rank() || g.coords.size() != rank())
            throw std::invalid_argument("killing_dual: dimension mismatch");
        return dot(f.coords, mat_vec(killing_inv_, g.coords));
    }

    const RatMat& killing_matrix() const { return killing_; }

    bool irreducible() const { return irreducible_; }

    /// Highest root (maximal height). Defined for irreducible systems only.
    const Root& highest_root() const {
        if (!highest_) throw std::logic_error("highest_root: system is not irreducible");
        return *highest_;
    }

    const RootSystemSpec& spec() const { return spec_; }

  private:
    void close_under_reflections(std::size_t bound) {
        const std::size_t l = rank();
        std::set<std::vector<int>> seen;
        std::vector<Root> work;
        for (std::size_t i = 0; i < l; ++i) {
            auto r = simple_root(i);
            seen.insert(r.coords);
            work.push_back(std::move(r));
        }
        while (!work.empty()) {
            const Root r = std::move(work.back());
            work.pop_back();
            for (std::size_t j = 0; j < l; ++j) {
                // s_j(r): only coordinate j changes, by -Σ_k c_k a_{kj}
                long p = 0;
                for (std::size_t k = 0; k < l; ++k) p += static_cast<long>(r.coords[k]) * cartan_[k][j];
                Root img = r;
                img.coords[j] -= static_cast<int>(p);
                if (seen.insert(img.coords).second) {
                    if (seen.size() > bound)
                        throw std::invalid_argument(
                            "reflection closure exceeds bound: Cartan matrix is not of finite type");
                    work.push_back(std::move(img));
                }
            }
        }
        roots_.assign(seen.size(), Root{});
        std::size_t i = 0;
        for (auto& c : seen) roots_[i++].coords = c;
    }

    void build_forms() {
        const std::size_t l = rank();
        killing_.assign(l, RatVec(l, 0));
        for (const auto& r : roots_) {
            const auto f = functional_of(r);
            for (std::size_t p = 0; p < l; ++p)
                for (std::size_t q = 0; q < l; ++q) killing_[p][q] += f.coords[p] * f.coords[q];
        }
        if (!is_positive_definite(killing_))
            throw std::invalid_argument("Killing form is not positive definite: not a finite root system");
        killing_inv_ = *invert(killing_);
    }

    void build_coroots() {
        coroots_.reserve(roots_.size());
        for (const auto& r : roots_) {
            const auto f = functional_of(r);
            RatVec u = mat_vec(killing_inv_, f.coords);  // α* in coroot coordinates
            const Rational nsq = dot(f.coords, u);       // B*(α, α)
            if (nsq <= 0) throw std::logic_error("coroot: nonpositive root norm");
            CartanVector h{vscale(Rational(2) / nsq, u)};
            if (pairing(f, h) != 2) throw std::logic_error("coroot: normalization failed");
            coroots_.push_back(std::move(h));
        }
    }

    void find_highest_root() {
        const std::size_t l = rank();
        // connectivity of the Cartan graph
        std::vector<bool> vis(l, false);
        std::vector<std::size_t> stack{0};
        vis[0] = true;
        while (!stack.empty()) {
            const auto i = stack.back();
            stack.pop_back();
            for (std::size_t j = 0; j < l; ++j)
                if (!vis[j] && cartan_[i][j] != 0) {
                    vis[j] = true;
                    stack.push_back(j);
                }
        }
        irreducible_ = std::all_of(vis.begin(), vis.end(), [](bool b) { return b; });
        if (!irreducible_) return;
        const Root* best = nullptr;
        for (const auto& r : roots_)
            if (!best || r.height() > best->height()) best = &r;
        highest_ = *best;
    }

    RootSystemSpec spec_;
    std::vector<std::vector<int>> cartan_;
    std::vector<Root> roots_;  // sorted by (height, lex)
    std::map<std::vector<int>, std::size_t> index_;
    RatMat killing_;
    RatMat killing_inv_;
    std::vector<CartanVector> coroots_;
    bool irreducible_ = false;
    std::optional<Root> highest_;
};

inline RootSystem build_root_system(const RootSystemSpec& spec) { return RootSystem(spec); }

inline Rational killing_cartan(const RootSystem& rs, const CartanVector& u, const CartanVector& v) {
    return rs.killing(u, v);
}

inline CartanVector coroot(const RootSystem& rs, const Root& alpha) { return rs.coroot_of(alpha); }

inline bool is_root(const RootSystem& rs, std::span<const int> coords) { return rs.contains(coords); }

inline bool is_root(const RootSystem& rs, const Root& r) { return rs.contains(r.coords); }

}  // namespace todacert
