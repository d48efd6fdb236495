#pragma once

#include "todacert/conecert.hpp"
#include "todacert/higgsmodel.hpp"
#include "todacert/rootsys.hpp"
#include "todacert/todasolver.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

namespace todacert {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// scalar formats: rationals as "p/q" strings, doubles as shortest round-trip

inline json rat_to_json(const Rational& r) { return to_string(r); }

inline Rational rat_from_json(const json& j) {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<long long>());
    throw std::invalid_argument("expected a rational as \"p/q\" string or integer");
}

inline json ratvec_to_json(const RatVec& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(rat_to_json(x));
    return a;
}

inline RatVec ratvec_from_json(const json& j) {
    RatVec v;
    for (const auto& x : j) v.push_back(rat_from_json(x));
    return v;
}

inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double x = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("not a double: '" + std::string(s) + "'");
    return x;
}

// ---------------------------------------------------------------------------
// files

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Write via a sibling temp file and rename, so readers never see a torn file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.parent_path() / (path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

inline std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 1469598103934665603ull) {
    std::uint64_t h = seed;
    for (const unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// ---------------------------------------------------------------------------
// root systems

inline json to_json(const RootSystemSpec& spec) {
    json j;
    if (spec.cartan) {
        j["cartan"] = *spec.cartan;
    } else {
        j["type"] = std::string(1, spec.type);
        j["rank"] = spec.rank;
    }
    return j;
}

inline RootSystemSpec rs_spec_from_json(const json& j) {
    if (j.contains("cartan")) {
        return RootSystemSpec::from_cartan(j.at("cartan").get<std::vector<std::vector<int>>>());
    }
    const auto type = j.at("type").get<std::string>();
    if (type.size() != 1) throw std::invalid_argument("root system type must be a single letter A..G");
    return RootSystemSpec::named(type[0], j.at("rank").get<int>());
}

/// One root per line, integer simple-root coordinates.
inline std::string roots_to_csv(const RootSystem& rs) {
    std::ostringstream os;
    for (const auto& r : rs.roots()) {
        for (std::size_t k = 0; k < r.coords.size(); ++k) os << (k ? "," : "") << r.coords[k];
        os << '\n';
    }
    return os.str();
}

inline Root root_from_json(const json& j) { return Root{j.get<std::vector<int>>()}; }

inline std::vector<Root> roots_from_json(const json& j) {
    std::vector<Root> roots;
    for (const auto& r : j) roots.push_back(root_from_json(r));
    return roots;
}

// ---------------------------------------------------------------------------
// cone problems and verdicts

inline json to_json(const ConeProblem& p) {
    json j;
    j["dim"] = p.dim;
    j["generators"] = json::array();
    for (const auto& g : p.generators) j["generators"].push_back(ratvec_to_json(g));
    j["target"] = ratvec_to_json(p.target);
    return j;
}

inline ConeProblem cone_problem_from_json(const json& j) {
    ConeProblem p;
    p.dim = j.at("dim").get<std::size_t>();
    for (const auto& g : j.at("generators")) p.generators.push_back(ratvec_from_json(g));
    p.target = ratvec_from_json(j.at("target"));
    detail::validate_problem(p);
    return p;
}

inline json cone_verdict_to_json(const ConeVerdict& v, bool open_query) {
    json j;
    j["query"] = open_query ? "open" : "closed";
    j["answer"] = v.answer;
    if (v.has_membership()) {
        const auto& c = v.membership();
        j["certificate"] = {{"type", "membership"},
                            {"open", c.open},
                            {"coefficients", ratvec_to_json(c.coefficients)}};
    } else {
        const auto& s = v.separation();
        j["certificate"] = {
            {"type", "separation"},
            {"mode", s.mode == SeparationMode::RefutesClosed ? "refutes-closed" : "refutes-open"},
            {"functional", ratvec_to_json(s.functional)}};
    }
    return j;
}

inline std::pair<ConeVerdict, bool> cone_verdict_from_json(const json& j) {
    ConeVerdict v;
    const bool open_query = j.at("query").get<std::string>() == "open";
    v.answer = j.at("answer").get<bool>();
    const auto& c = j.at("certificate");
    if (c.at("type").get<std::string>() == "membership") {
        v.certificate = MembershipCertificate{ratvec_from_json(c.at("coefficients")), c.at("open").get<bool>()};
    } else {
        const auto mode = c.at("mode").get<std::string>() == "refutes-closed" ? SeparationMode::RefutesClosed
                                                                              : SeparationMode::RefutesOpen;
        v.certificate = SeparationCertificate{ratvec_from_json(c.at("functional")), mode};
    }
    return {v, open_query};
}

// ---------------------------------------------------------------------------
// Higgs data

inline json to_json(const DiagonalHiggsDatum& d) {
    json j;
    j["r"] = d.rank;
    j["degrees"] = ratvec_to_json(d.degrees);
    j["arrows"] = json::array();
    for (const auto& [i, k] : d.arrows) j["arrows"].push_back(json::array({i, k}));
    return j;
}

inline DiagonalHiggsDatum datum_from_json(const json& j) {
    const int r = j.at("r").get<int>();
    RatVec degrees = ratvec_from_json(j.at("degrees"));
    std::set<std::pair<int, int>> arrows;
    for (const auto& a : j.at("arrows")) {
        if (!a.is_array() || a.size() != 2) throw std::invalid_argument("arrow must be a pair [i,j]");
        arrows.emplace(a[0].get<int>(), a[1].get<int>());
    }
    return DiagonalHiggsDatum(r, std::move(degrees), std::move(arrows));
}

// ---------------------------------------------------------------------------
// Toda problems

namespace detail {

inline ScalarField preset_field(const TorusGrid& grid, const std::string& name, double offset,
                                double scale) {
    ScalarField f(grid.cells());
    constexpr double two_pi = 6.283185307179586476925286766559;
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            const double x = (ix + 0.5) * grid.hx();
            const double y = (iy + 0.5) * grid.hy();
            double v = 0;
            if (name == "one") {
                v = 1.0;
            } else if (name == "sin2x") {
                const double s = std::sin(two_pi * x / grid.lx);
                v = s * s;
            } else if (name == "sin2y") {
                const double s = std::sin(two_pi * y / grid.ly);
                v = s * s;
            } else {
                throw std::invalid_argument("unknown field preset '" + name + "'");
            }
            f(grid.index(ix, iy)) = offset + scale * v;
        }
    }
    return f;
}

/// "ix,iy,v" rows (one scalar column) or "ix,iy,v1..vk"; a header line is skipped.
inline Eigen::MatrixXd grid_csv_read(const std::string& text, const TorusGrid& grid, Eigen::Index cols) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Constant(cols, grid.cells(), std::numeric_limits<double>::quiet_NaN());
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> parts;
        std::string cur;
        for (char ch : line) {
            if (ch == ',') {
                parts.push_back(cur);
                cur.clear();
            } else if (ch != '\r') {
                cur.push_back(ch);
            }
        }
        parts.push_back(cur);
        if (first) {
            first = false;
            bool numeric = !parts.empty();
            for (const auto& p : parts)
                if (p.find_first_not_of("0123456789+-.eE") != std::string::npos) numeric = false;
            if (!numeric) continue;  // header
        }
        if (parts.size() != static_cast<std::size_t>(cols) + 2)
            throw std::invalid_argument("grid csv: wrong column count");
        const int ix = static_cast<int>(parse_double(parts[0]));
        const int iy = static_cast<int>(parse_double(parts[1]));
        if (ix < 0 || ix >= grid.nx || iy < 0 || iy >= grid.ny)
            throw std::invalid_argument("grid csv: cell index out of range");
        for (Eigen::Index k = 0; k < cols; ++k)
            out(k, grid.index(ix, iy)) = parse_double(parts[static_cast<std::size_t>(k) + 2]);
    }
    if (out.hasNaN()) throw std::invalid_argument("grid csv: missing cells");
    return out;
}

}  // namespace detail

/// For a type-A system on traceless diagonals, h_{α_k} = e_k − e_{k+1}; a
/// traceless diagonal vector has coroot coordinates given by partial sums.
inline RatVec diagonal_to_coroot(const RatVec& diag) {
    if (diag.size() < 2) throw std::invalid_argument("diagonal_to_coroot: need r >= 2");
    RatVec out(diag.size() - 1);
    Rational partial = 0;
    for (std::size_t k = 0; k + 1 < diag.size(); ++k) {
        partial += diag[k];
        out[k] = partial;
    }
    return out;
}

inline TodaProblem toda_problem_from_json(const json& j, const std::filesystem::path& base_dir) {
    const auto rs = std::make_shared<RootSystem>(rs_spec_from_json(j.at("root_system")));
    TorusGrid grid;
    const auto& gj = j.at("grid");
    grid.nx = gj.at("nx").get<int>();
    grid.ny = gj.at("ny").get<int>();
    grid.lx = gj.value("lx", 1.0);
    grid.ly = gj.value("ly", 1.0);

    const auto active = roots_from_json(j.at("active"));

    auto scalar_from_spec = [&](const json& spec) -> ScalarField {
        const auto kind = spec.at("kind").get<std::string>();
        if (kind == "constant") return ScalarField::Constant(grid.cells(), spec.at("value").get<double>());
        if (kind == "expr")
            return detail::preset_field(grid, spec.at("expr").get<std::string>(), spec.value("offset", 0.0),
                                        spec.value("scale", 1.0));
        if (kind == "csv") {
            const auto m = detail::grid_csv_read(read_file(base_dir / spec.at("path").get<std::string>()), grid, 1);
            return m.row(0).array().transpose();
        }
        throw std::invalid_argument("unknown coefficient field kind '" + kind + "'");
    };

    std::vector<ScalarField> coeffs(active.size(), ScalarField());
    std::vector<bool> assigned(active.size(), false);
    for (const auto& spec : j.at("coefficients")) {
        const Root root = root_from_json(spec.at("root"));
        bool found = false;
        for (std::size_t a = 0; a < active.size(); ++a)
            if (active[a] == root) {
                if (assigned[a]) throw std::invalid_argument("duplicate coefficient field for a root");
                coeffs[a] = scalar_from_spec(spec);
                assigned[a] = true;
                found = true;
            }
        if (!found) throw std::invalid_argument("coefficient field for a root that is not active");
    }
    for (std::size_t a = 0; a < active.size(); ++a)
        if (!assigned[a]) throw std::invalid_argument("missing coefficient field for an active root");

    const auto l = static_cast<Eigen::Index>(rs->rank());
    Field source;
    const auto& sj = j.at("source");
    const auto skind = sj.at("kind").get<std::string>();
    if (skind == "constant") {
        const auto vals = sj.at("value").get<std::vector<double>>();
        if (vals.size() != static_cast<std::size_t>(l)) throw std::invalid_argument("source constant: wrong length");
        source.resize(l, grid.cells());
        for (Eigen::Index k = 0; k < l; ++k) source.row(k).setConstant(vals[static_cast<std::size_t>(k)]);
    } else if (skind == "coroot") {
        // F = f(x,y) · h_root with f = offset + scale · preset
        const Root root = root_from_json(sj.at("root"));
        const auto h = rs->coroot_of(root);
        const ScalarField f = detail::preset_field(grid, sj.value("expr", "one"), sj.value("offset", 0.0),
                                                   sj.value("scale", 1.0));
        source.resize(l, grid.cells());
        for (Eigen::Index k = 0; k < l; ++k)
            source.row(k) = to_double(h.coords[static_cast<std::size_t>(k)]) * f.matrix().transpose();
    } else if (skind == "csv") {
        source = detail::grid_csv_read(read_file(base_dir / sj.at("path").get<std::string>()), grid, l);
    } else if (skind == "degrees") {
        // bundle-driven front end: constant F = 2π·(−γ)/(Lx·Ly), type A only
        const RatVec degrees = ratvec_from_json(sj.at("degrees"));
        if (degrees.size() != rs->rank() + 1)
            throw std::invalid_argument("source degrees: need rank+1 entries (type A_{r-1})");
        Rational sum = 0;
        for (const auto& m : degrees) sum += m;
        if (sum != 0) throw std::invalid_argument("source degrees: must sum to zero");
        const RatVec gamma_coroot = diagonal_to_coroot(degrees);
        source.resize(l, grid.cells());
        constexpr double two_pi = 6.283185307179586476925286766559;
        for (Eigen::Index k = 0; k < l; ++k)
            source.row(k).setConstant(-two_pi * to_double(gamma_coroot[static_cast<std::size_t>(k)]) /
                                      grid.volume());
    } else {
        throw std::invalid_argument("unknown source kind '" + skind + "'");
    }

    return assemble_problem(rs, grid, active, std::move(coeffs), std::move(source));
}

// ---------------------------------------------------------------------------
// solver output

inline std::string omega_to_csv(const TorusGrid& grid, const Field& omega) {
    std::ostringstream os;
    os << "ix,iy";
    for (Eigen::Index k = 0; k < omega.rows(); ++k) os << ",h_alpha_" << (k + 1);
    os << '\n';
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix) {
            os << ix << ',' << iy;
            for (Eigen::Index k = 0; k < omega.rows(); ++k)
                os << ',' << format_double(omega(k, grid.index(ix, iy)));
            os << '\n';
        }
    return os.str();
}

inline Field omega_from_csv(const std::string& text, const TorusGrid& grid, Eigen::Index rank) {
    return detail::grid_csv_read(text, grid, rank);
}

inline json report_to_json(const SolveReport& rep, const SolveOptions& opts) {
    json j;
    j["verdict"] = to_string(rep.verdict);
    j["residual"] = rep.residual;
    j["mean_balance"] = rep.mean_balance;
    j["iterations"] = rep.iterations;
    j["tol"] = opts.tol;
    j["max_iter"] = opts.max_iter;
    j["energy_trace"] = rep.energy_trace;
    j["precheck"] = {{"feasible", rep.precheck_feasible},
                     {"margin", rep.precheck_margin},
                     {"boundary_undetermined", rep.boundary_undetermined}};
    if (rep.boundary_undetermined) j["precheck"]["note"] = "boundary case: existence undetermined by the open-cone criterion";
    if (rep.recession) {
        json r = json::array();
        for (Eigen::Index k = 0; k < rep.recession->size(); ++k) r.push_back((*rep.recession)(k));
        j["recession"] = r;
    } else {
        j["recession"] = nullptr;
    }
    return j;
}

}  // namespace todacert
