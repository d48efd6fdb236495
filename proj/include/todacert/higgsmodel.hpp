#pragma once

#include "todacert/conecert.hpp"
#include "todacert/rootsys.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

namespace todacert {

/// Diagonally-decomposed Higgs datum: degrees m_1..m_r of the line-bundle
/// summands (total degree zero) and the set of arrows (i,j) with a nonzero
/// component L_j⁻¹L_i. Indices are 1-based.
struct DiagonalHiggsDatum {
    int rank = 0;
    RatVec degrees;
    std::set<std::pair<int, int>> arrows;

    DiagonalHiggsDatum(int r, RatVec m, std::set<std::pair<int, int>> a)
        : rank(r), degrees(std::move(m)), arrows(std::move(a)) {
        if (rank < 2) throw std::invalid_argument("HiggsDatum: rank must be >= 2");
        if (degrees.size() != static_cast<std::size_t>(rank))
            throw std::invalid_argument("HiggsDatum: degree vector length mismatch");
        Rational sum = 0;
        for (const auto& d : degrees) sum += d;
        if (sum != 0) throw std::invalid_argument("HiggsDatum: degrees must sum to zero");
        for (const auto& [i, j] : arrows) {
            if (i < 1 || i > rank || j < 1 || j > rank)
                throw std::invalid_argument("HiggsDatum: arrow index out of range");
            if (i == j) throw std::invalid_argument("HiggsDatum: diagonal arrows are not allowed");
        }
    }
};

/// Traceless rational weight, the one-parameter-subgroup direction s of the
/// orbit criteria.
struct WeightVector {
    RatVec values;

    explicit WeightVector(RatVec v) : values(std::move(v)) {
        Rational sum = 0;
        for (const auto& x : values) sum += x;
        if (sum != 0) throw std::invalid_argument("WeightVector: entries must sum to zero");
    }
};

struct SubbundleSelection {
    std::set<int> indices;  // 1-based

    Rational degree(const DiagonalHiggsDatum& d) const {
        Rational s = 0;
        for (int j : indices) s += d.degrees[static_cast<std::size_t>(j - 1)];
        return s;
    }
};

/// γ as a traceless rational vector in the diagonal coordinates.
inline RatVec gamma_of(const DiagonalHiggsDatum& d) { return d.degrees; }

/// h_{α_{i,j}} = e_i − e_j.
inline RatVec coroot_of_arrow(int i, int j, int r) {
    if (i < 1 || i > r || j < 1 || j > r || i == j)
        throw std::invalid_argument("coroot_of_arrow: invalid indices");
    RatVec v(static_cast<std::size_t>(r), 0);
    v[static_cast<std::size_t>(i - 1)] = 1;
    v[static_cast<std::size_t>(j - 1)] = -1;
    return v;
}

/// α_{i,j}(u) = u_i − u_j.
inline Rational arrow_pairing(int i, int j, const RatVec& u) {
    return u[static_cast<std::size_t>(i - 1)] - u[static_cast<std::size_t>(j - 1)];
}

/// Existence-side cone condition: −γ against the coroots of the arrows.
inline ConeVerdict cone_condition(const DiagonalHiggsDatum& d, bool strict) {
    ConeProblem p;
    p.dim = static_cast<std::size_t>(d.rank);
    for (const auto& [i, j] : d.arrows) p.generators.push_back(coroot_of_arrow(i, j, d.rank));
    p.target = vneg(gamma_of(d));
    return strict ? open_cone_member(p) : closed_cone_member(p);
}

namespace detail {

/// Strongly connected components (Tarjan) of the membership-propagation graph:
/// an arrow (i,j) forces j ∈ S ⇒ i ∈ S, i.e. an edge j → i.
inline std::vector<int> scc_components(int r, const std::set<std::pair<int, int>>& arrows, int& count) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(r));
    for (const auto& [i, j] : arrows) adj[static_cast<std::size_t>(j - 1)].push_back(i - 1);
    std::vector<int> comp(static_cast<std::size_t>(r), -1), low(static_cast<std::size_t>(r)),
        num(static_cast<std::size_t>(r), -1), stack;
    std::vector<bool> on_stack(static_cast<std::size_t>(r), false);
    int counter = 0;
    count = 0;
    std::function<void(int)> dfs = [&](int v) {
        num[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
        for (int w : adj[static_cast<std::size_t>(v)]) {
            if (num[w] < 0) {
                dfs(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], num[w]);
            }
        }
        if (low[v] == num[v]) {
            for (;;) {
                const int w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                comp[w] = count;
                if (w == v) break;
            }
            ++count;
        }
    };
    for (int v = 0; v < r; ++v)
        if (num[v] < 0) dfs(v);
    return comp;
}

/// Visits every proper nonempty arrow-closed vertex mask. The callback returns
/// false to abort the enumeration early (and so does this function).
inline bool for_each_closed_mask(const DiagonalHiggsDatum& d, int enumeration_bound,
                                 const std::function<bool(std::uint32_t)>& visit) {
    const int r = d.rank;
    if (r > enumeration_bound) throw std::invalid_argument("subset enumeration bound exceeded");
    int ncomp = 0;
    const auto comp = scc_components(r, d.arrows, ncomp);
    // condensation successor masks: closed sets are successor-closed unions of SCCs
    std::vector<std::uint32_t> succ(static_cast<std::size_t>(ncomp), 0),
        members(static_cast<std::size_t>(ncomp), 0);
    for (int v = 0; v < r; ++v) members[static_cast<std::size_t>(comp[v])] |= 1u << v;
    for (const auto& [i, j] : d.arrows) {
        const int cj = comp[static_cast<std::size_t>(j - 1)], ci = comp[static_cast<std::size_t>(i - 1)];
        if (ci != cj) succ[static_cast<std::size_t>(cj)] |= 1u << ci;
    }
    const std::uint32_t full = ncomp >= 32 ? 0xffffffffu : (1u << ncomp) - 1;
    for (std::uint32_t cm = 1; cm < full; ++cm) {
        bool closed = true;
        for (int c = 0; c < ncomp && closed; ++c)
            if ((cm >> c) & 1u) closed = (succ[static_cast<std::size_t>(c)] & ~cm) == 0;
        if (!closed) continue;
        std::uint32_t vmask = 0;
        for (int c = 0; c < ncomp; ++c)
            if ((cm >> c) & 1u) vmask |= members[static_cast<std::size_t>(c)];
        if (!visit(vmask)) return false;
    }
    return true;
}

inline Rational mask_degree(const DiagonalHiggsDatum& d, std::uint32_t mask) {
    Rational s = 0;
    for (int v = 0; v < d.rank; ++v)
        if ((mask >> v) & 1u) s += d.degrees[static_cast<std::size_t>(v)];
    return s;
}

}  // namespace detail

/// All proper nonempty coordinate subsets closed under the arrows
/// ((i,j) ∈ A and j ∈ S imply i ∈ S), in ascending bitmask order.
inline std::vector<SubbundleSelection> arrow_closed_subsets(const DiagonalHiggsDatum& d,
                                                            int enumeration_bound = 20) {
    std::vector<std::uint32_t> masks;
    detail::for_each_closed_mask(d, enumeration_bound, [&](std::uint32_t m) {
        masks.push_back(m);
        return true;
    });
    std::sort(masks.begin(), masks.end());
    std::vector<SubbundleSelection> out;
    out.reserve(masks.size());
    for (const auto m : masks) {
        SubbundleSelection s;
        for (int v = 0; v < d.rank; ++v)
            if ((m >> v) & 1u) s.indices.insert(v + 1);
        out.push_back(std::move(s));
    }
    return out;
}

/// deg(E_S) ≤ 0 for every proper nonempty arrow-closed S.
inline bool is_semistable(const DiagonalHiggsDatum& d, int enumeration_bound = 20) {
    return detail::for_each_closed_mask(d, enumeration_bound, [&](std::uint32_t m) {
        return detail::mask_degree(d, m) <= 0;
    });
}

/// deg(E_S) < 0 for every proper nonempty arrow-closed S.
inline bool is_stable(const DiagonalHiggsDatum& d, int enumeration_bound = 20) {
    return detail::for_each_closed_mask(d, enumeration_bound, [&](std::uint32_t m) {
        return detail::mask_degree(d, m) < 0;
    });
}

/// γ^∨(s) = −n·B(γ,s) with B = 2r·Tr, evaluated both directly and through the
/// telescoping sum over the descents of s; the two routes must agree exactly.
inline Rational gamma_vee_eval(const DiagonalHiggsDatum& d, std::int64_t n, const WeightVector& s) {
    if (n < 1) throw std::invalid_argument("gamma_vee_eval: n must be >= 1");
    if (s.values.size() != static_cast<std::size_t>(d.rank))
        throw std::invalid_argument("gamma_vee_eval: weight length mismatch");
    const auto r = static_cast<std::size_t>(d.rank);
    const Rational factor = Rational(-2) * d.rank * n;

    Rational direct = 0;
    for (std::size_t k = 0; k < r; ++k) direct += d.degrees[k] * s.values[k];
    direct *= factor;

    // sort s descending (stable), permute the degrees along, telescope over descents
    std::vector<std::size_t> perm(r);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::stable_sort(perm.begin(), perm.end(),
                     [&](std::size_t a, std::size_t b) { return s.values[a] > s.values[b]; });
    Rational telescoped = 0, partial = 0;
    for (std::size_t j = 0; j + 1 < r; ++j) {
        partial += d.degrees[perm[j]];
        const Rational gap = s.values[perm[j]] - s.values[perm[j + 1]];
        if (gap > 0) telescoped += gap * partial;
    }
    telescoped *= factor;

    if (direct != telescoped)
        throw std::logic_error("gamma_vee_eval: telescoping route disagrees with the direct route");
    return direct;
}

/// Smallest n ≥ 1 with n·γ* integral on the lattice basis e_k − e_{k+1}.
inline BigInt minimal_n(const RatVec& gamma) {
    const auto r = gamma.size();
    BigInt n = 1;
    for (std::size_t k = 0; k + 1 < r; ++k) {
        const Rational v = Rational(2) * static_cast<long>(r) * (gamma[k] - gamma[k + 1]);
        n = boost::multiprecision::lcm(n, boost::multiprecision::denominator(v));
    }
    return n;
}

inline BigInt minimal_n(const DiagonalHiggsDatum& d) { return minimal_n(d.degrees); }

/// γ^∨ = −nγ*, stored as the covector −2rn·γ (pairing = plain dot product).
struct DualCharacter {
    RatVec coefficients;
    std::int64_t n = 1;

    DualCharacter(const DiagonalHiggsDatum& d, std::int64_t n_in) : n(n_in) {
        if (n < 1) throw std::invalid_argument("DualCharacter: n must be >= 1");
        const Rational factor = Rational(-2) * d.rank * n;
        coefficients.reserve(d.degrees.size());
        for (const auto& m : d.degrees) coefficients.push_back(factor * m);
        for (std::size_t k = 0; k + 1 < coefficients.size(); ++k) {
            const Rational gap = coefficients[k] - coefficients[k + 1];
            if (boost::multiprecision::denominator(gap) != 1)
                throw std::invalid_argument("DualCharacter: n does not clear denominators on the lattice");
        }
    }

    Rational operator()(const WeightVector& s) const { return dot(coefficients, s.values); }
};

enum class OrbitClass { Violates, Tight, Strict };

/// Classification of an admissible direction s: strict when γ^∨(s) > 0, tight
/// when γ^∨(s) = 0 and every arrow pairing vanishes, violating otherwise.
/// Directions with a negative arrow pairing are rejected as inadmissible.
inline OrbitClass orbit_criterion(const DiagonalHiggsDatum& d, std::int64_t n, const WeightVector& s) {
    for (const auto& [i, j] : d.arrows)
        if (arrow_pairing(i, j, s.values) < 0)
            throw std::invalid_argument("orbit_criterion: inadmissible s (an arrow pairing is negative)");
    const Rational g = gamma_vee_eval(d, n, s);
    if (g > 0) return OrbitClass::Strict;
    if (g < 0) return OrbitClass::Violates;
    for (const auto& [i, j] : d.arrows)
        if (arrow_pairing(i, j, s.values) != 0) return OrbitClass::Violates;
    return OrbitClass::Tight;
}

/// Sufficient combinatorial criterion for the off-diagonal part of
/// Λ[Φ∧(−σ₀)(Φ)] to vanish: no difference of two distinct active roots is a root.
inline bool offdiagonal_check(const std::vector<Root>& active, const RootSystem& rs) {
    std::set<std::vector<int>> uniq;
    for (const auto& a : active) {
        rs.index_of(a);  // throws when not a root
        uniq.insert(a.coords);
    }
    std::vector<std::vector<int>> list(uniq.begin(), uniq.end());
    for (std::size_t a = 0; a < list.size(); ++a) {
        for (std::size_t b = a + 1; b < list.size(); ++b) {
            std::vector<int> diff(list[a].size());
            for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = list[a][k] - list[b][k];
            if (rs.contains(diff)) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Exhaustive semistability/cone equivalence sweep.

struct ScanOptions {
    int rmax = 4;
    int degree_bound = 3;
    bool memoize = true;       // cache cone verdicts by canonicalized instance
    std::ostream* csv = nullptr;
};

struct ScanResult {
    std::uint64_t instances = 0;
    std::uint64_t semistable_mismatches = 0;
    std::uint64_t stable_mismatches = 0;          // weakly connected data only
    std::uint64_t disconnected_degree_violations = 0;
    std::uint64_t disconnected_stable_violations = 0;

    bool clean() const {
        return semistable_mismatches == 0 && stable_mismatches == 0 &&
               disconnected_degree_violations == 0 && disconnected_stable_violations == 0;
    }
};

namespace detail {

/// Transitive closure of the arrow set as a bitmask over ordered pairs
/// (composition (i,j),(j,k) → (i,k)); adding implied arrows changes neither
/// the generated cone nor its relative interior.
inline std::uint32_t arrow_transitive_closure(int r, std::uint32_t mask) {
    auto bit = [r](int i, int j) { return static_cast<std::uint32_t>(1) << (i * r + j); };
    bool grew = true;
    while (grew) {
        grew = false;
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
                if (i == j || !(mask & bit(i, j))) continue;
                for (int k = 0; k < r; ++k) {
                    if (k == i || k == j) continue;
                    if ((mask & bit(j, k)) && !(mask & bit(i, k))) {
                        mask |= bit(i, k);
                        grew = true;
                    }
                }
            }
    }
    return mask;
}

inline std::uint64_t encode_instance(int r, std::uint32_t tc_mask, const std::vector<int>& degs,
                                     int bound) {
    std::uint64_t key = tc_mask;
    for (int k = 0; k < r; ++k)
        key = key * static_cast<std::uint64_t>(2 * bound + 2) +
              static_cast<std::uint64_t>(degs[static_cast<std::size_t>(k)] + bound);
    return key;
}

}  // namespace detail

/// Exhaustive comparison of the subset stability oracles against the exact cone
/// certificates over all arrow sets and bounded integral degree vectors:
///   semistable ⇔ closed membership, and on weakly connected arrow graphs
///   stable ⇔ open membership; disconnected strict-membership instances must
///   have every weak component of total degree zero and cannot be stable.
inline ScanResult equivalence_scan(const ScanOptions& opts) {
    if (opts.rmax < 2 || opts.rmax > 4)
        throw std::invalid_argument("equivalence_scan: rmax must be between 2 and 4");
    if (opts.degree_bound < 1) throw std::invalid_argument("equivalence_scan: degree bound must be >= 1");

    ScanResult result;
    if (opts.csv)
        *opts.csv << "r,degrees,arrows,semistable,closed_member,weakly_connected,stable,open_member,ok\n";

    std::unordered_map<std::uint64_t, std::pair<bool, bool>> memo;

    for (int r = 2; r <= opts.rmax; ++r) {
        // all ordered pairs (1-based), lexicographic
        std::vector<std::pair<int, int>> universe;
        for (int i = 1; i <= r; ++i)
            for (int j = 1; j <= r; ++j)
                if (i != j) universe.emplace_back(i, j);
        const int npairs = static_cast<int>(universe.size());

        // degree vectors with entries in [-bound, bound] summing to zero
        std::vector<std::vector<int>> degree_vectors;
        std::vector<int> cur(static_cast<std::size_t>(r), -opts.degree_bound);
        for (;;) {
            if (std::accumulate(cur.begin(), cur.end(), 0) == 0) degree_vectors.push_back(cur);
            int k = r - 1;
            while (k >= 0 && cur[static_cast<std::size_t>(k)] == opts.degree_bound) {
                cur[static_cast<std::size_t>(k)] = -opts.degree_bound;
                --k;
            }
            if (k < 0) break;
            ++cur[static_cast<std::size_t>(k)];
        }

        std::vector<std::vector<int>> perms;
        {
            std::vector<int> p(static_cast<std::size_t>(r));
            std::iota(p.begin(), p.end(), 0);
            do perms.push_back(p);
            while (std::next_permutation(p.begin(), p.end()));
        }

        for (std::uint32_t amask = 0; amask < (1u << npairs); ++amask) {
            std::set<std::pair<int, int>> arrows;
            std::uint32_t pair_mask = 0;  // indexed i0*r + j0
            for (int a = 0; a < npairs; ++a)
                if ((amask >> a) & 1u) {
                    arrows.insert(universe[static_cast<std::size_t>(a)]);
                    pair_mask |= 1u << ((universe[static_cast<std::size_t>(a)].first - 1) * r +
                                        (universe[static_cast<std::size_t>(a)].second - 1));
                }
            const std::uint32_t tc = detail::arrow_transitive_closure(r, pair_mask);

            // weak connectivity (isolated vertices count as their own component)
            std::vector<int> parent(static_cast<std::size_t>(r));
            std::iota(parent.begin(), parent.end(), 0);
            std::function<int(int)> find = [&](int v) {
                while (parent[static_cast<std::size_t>(v)] != v) {
                    parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
                    v = parent[static_cast<std::size_t>(v)];
                }
                return v;
            };
            for (const auto& [i, j] : arrows) parent[static_cast<std::size_t>(find(i - 1))] = find(j - 1);
            std::set<int> comps;
            for (int v = 0; v < r; ++v) comps.insert(find(v));
            const bool connected = comps.size() == 1;

            for (const auto& degs : degree_vectors) {
                RatVec m(degs.begin(), degs.end());
                const DiagonalHiggsDatum datum(r, m, arrows);
                const bool semi = is_semistable(datum);
                const bool stab = is_stable(datum);

                bool closed = false, open = false;
                bool have = false;
                if (opts.memoize) {
                    // canonicalize by transitive closure + simultaneous relabeling
                    std::uint64_t key = ~std::uint64_t{0};
                    for (const auto& p : perms) {
                        std::uint32_t ptc = 0;
                        for (int i = 0; i < r; ++i)
                            for (int j = 0; j < r; ++j)
                                if (i != j && ((tc >> (i * r + j)) & 1u))
                                    ptc |= 1u << (p[static_cast<std::size_t>(i)] * r +
                                                  p[static_cast<std::size_t>(j)]);
                        std::vector<int> pd(static_cast<std::size_t>(r));
                        for (int k = 0; k < r; ++k)
                            pd[static_cast<std::size_t>(p[static_cast<std::size_t>(k)])] =
                                degs[static_cast<std::size_t>(k)];
                        key = std::min(key, detail::encode_instance(r, ptc, pd, opts.degree_bound));
                    }
                    if (auto it = memo.find(key); it != memo.end()) {
                        closed = it->second.first;
                        open = it->second.second;
                        have = true;
                    } else {
                        closed = cone_condition(datum, false).answer;
                        open = cone_condition(datum, true).answer;
                        memo.emplace(key, std::make_pair(closed, open));
                        have = true;
                    }
                }
                if (!have) {
                    closed = cone_condition(datum, false).answer;
                    open = cone_condition(datum, true).answer;
                }

                ++result.instances;
                bool ok = true;
                if (semi != closed) {
                    ++result.semistable_mismatches;
                    ok = false;
                }
                if (connected) {
                    if (stab != open) {
                        ++result.stable_mismatches;
                        ok = false;
                    }
                } else if (open) {
                    for (int c : comps) {
                        Rational degsum = 0;
                        for (int v = 0; v < r; ++v)
                            if (find(v) == c) degsum += m[static_cast<std::size_t>(v)];
                        if (degsum != 0) {
                            ++result.disconnected_degree_violations;
                            ok = false;
                        }
                    }
                    if (stab) {
                        ++result.disconnected_stable_violations;
                        ok = false;
                    }
                }

                if (opts.csv) {
                    auto& os = *opts.csv;
                    os << r << ',';
                    for (std::size_t k = 0; k < m.size(); ++k)
                        os << (k ? " " : "") << degs[k];
                    os << ',';
                    bool first = true;
                    for (const auto& [i, j] : arrows) {
                        os << (first ? "" : " ") << i << '>' << j;
                        first = false;
                    }
                    os << ',' << semi << ',' << closed << ',' << connected << ',' << stab << ','
                       << open << ',' << ok << '\n';
                }
            }
        }
    }
    return result;
}

}  // namespace todacert
