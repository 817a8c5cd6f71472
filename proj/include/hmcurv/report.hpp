#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hmcurv/conformal.hpp"
#include "hmcurv/errors.hpp"
#include "hmcurv/geometry.hpp"
#include "hmcurv/psi.hpp"
#include "hmcurv/solver.hpp"
#include "hmcurv/verify.hpp"

namespace hmcurv {

using Json = nlohmann::ordered_json;

inline std::string format_double(double x)
{
    if (!std::isfinite(x))
        return "null";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline void dump_json_to(const Json& j, std::string& out, int indent, int depth)
{
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first)
                out += ",\n";
            first = false;
            out += pad + Json(it.key()).dump() + ": ";
            dump_json_to(it.value(), out, indent, depth + 1);
        }
        out += "\n" + close_pad + "}";
        return;
    }
    case Json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i)
                out += ",\n";
            out += pad;
            dump_json_to(j[i], out, indent, depth + 1);
        }
        out += "\n" + close_pad + "]";
        return;
    }
    case Json::value_t::number_float: out += format_double(j.get<double>()); return;
    default: out += j.dump(); return;
    }
}

} // namespace detail

/// Deterministic text form: insertion-ordered keys, floats at 17 significant digits,
/// non-finite numbers as null.
inline std::string dump_json(const Json& j, int indent = 2)
{
    std::string out;
    detail::dump_json_to(j, out, indent, 0);
    out += "\n";
    return out;
}

inline void write_text(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error(ErrorCode::ConfigError, "cannot write " + path);
    f << text;
    if (!f)
        throw Error(ErrorCode::ConfigError, "failed writing " + path);
}

inline Json to_json(const SolveReport& r)
{
    Json j;
    j["converged"] = r.converged;
    j["status"] = to_string(r.status);
    j["message"] = r.message;
    j["iterations"] = r.iterations;
    j["residual_history"] = r.residual_history;
    j["residual_sup"] = r.residual_sup;
    j["residual_l2"] = r.residual_l2;
    j["residual_sup_spherical"] = r.residual_sup_spherical;
    j["admissible"] = r.admissible;
    j["admissibility_warnings"] = r.admissibility_warnings;
    j["annulus_ok"] = r.annulus_ok;
    j["annulus_margin_low"] = r.annulus_margin_low;
    j["annulus_margin_high"] = r.annulus_margin_high;
    j["elliptic"] = r.elliptic;
    j["ellipticity_max_eigenvalue"] = r.ellipticity_max;
    j["ellipticity_min_abs"] = r.ellipticity_min_abs;
    j["linear_iterations"] = r.linear_iterations;
    return j;
}

inline Json to_json(const ConditionReport& r)
{
    Json j;
    j["all_ok"] = r.all_ok();
    j["positive_ok"] = r.positive_ok;
    j["barrier_low_ok"] = r.barrier_low_ok;
    j["barrier_high_ok"] = r.barrier_high_ok;
    j["monotone_ok"] = r.monotone_ok;
    j["strict_monotone"] = r.strict_monotone;
    j["min_value"] = r.min_value;
    j["worst_margin"] = {{"barrier_low", r.low_margin}, {"barrier_high", r.high_margin}, {"monotone_max", r.monotone_max}};
    j["violations"] = {{"barrier_low", r.low_violations},
                       {"barrier_high", r.high_violations},
                       {"monotone", r.monotone_violations}};
    return j;
}

inline Json to_json(const ExtensionReport& r)
{
    return Json{{"bound_ok", r.bound_ok},
                {"monotone_ok", r.monotone_ok},
                {"bound_margin", r.bound_margin},
                {"monotone_max", r.monotone_max}};
}

inline Json to_json(const ScalingFit& f)
{
    return Json{{"c", f.c},           {"residual", f.residual}, {"ratio_min", f.ratio_min},
                {"ratio_max", f.ratio_max}, {"spread", f.spread},   {"tolerance", f.tolerance},
                {"related", f.related}, {"identical", f.identical}};
}

inline Json to_json(const BoundaryTouchReport& r)
{
    return Json{{"node", r.node},
                {"radius", r.radius},
                {"mu", r.mu},
                {"gradient_norm", r.gradient_norm},
                {"s", r.s},
                {"direct", r.direct},
                {"interpolated", r.interpolated},
                {"max_discrepancy", r.max_discrepancy},
                {"positive", r.positive}};
}

/// Solution table: node_index, coordinates, z, v, lambda_1..n, S_1..S_n, residual.
template <int N>
std::string solution_csv(const RadialGraph<N>& graph, const ScalarField& residual)
{
    const ShapeData<N> shape = compute_shape(graph);
    std::ostringstream out;
    out << "node_index,theta";
    if constexpr (N == 2)
        out << ",phi";
    out << ",z,v";
    for (int i = 1; i <= N; ++i)
        out << ",lambda_" << i;
    for (int i = 1; i <= N; ++i)
        out << ",S_" << i;
    out << ",residual\n";
    const auto& grid = *graph.grid;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        out << k;
        for (int i = 0; i < N; ++i)
            out << ',' << format_double(grid.node(k)[static_cast<std::size_t>(i)]);
        out << ',' << format_double(graph.z[k]) << ',' << format_double(graph.form.to_conformal(graph.z[k]));
        for (int i = 0; i < N; ++i)
            out << ',' << format_double(shape.lambda[k](i));
        for (int i = 1; i <= N; ++i)
            out << ',' << format_double(shape.S[k][static_cast<std::size_t>(i)]);
        out << ',' << format_double(k < residual.size() ? residual[k] : std::nan(""));
        out << '\n';
    }
    return out.str();
}

struct SolutionTable {
    int n = 0;
    std::vector<std::vector<double>> coords;
    std::vector<double> z;
};

inline SolutionTable read_solution_csv(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw Error(ErrorCode::ConfigError, "cannot read " + path);
    std::string line;
    if (!std::getline(f, line))
        throw Error(ErrorCode::ParseError, path + ": empty file");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            header.push_back(cell);
    }
    SolutionTable t;
    t.n = header.size() > 2 && header[2] == "phi" ? 2 : 1;
    std::size_t z_col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == "z")
            z_col = i;
    if (header.empty() || header[0] != "node_index" || header[1] != "theta" || z_col == header.size())
        throw Error(ErrorCode::ParseError, path + ": not a solution table");
    while (std::getline(f, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (cells.size() != header.size())
            throw Error(ErrorCode::ParseError, path + ": ragged row");
        try {
            std::vector<double> c;
            for (int i = 0; i < t.n; ++i)
                c.push_back(std::stod(cells[1 + static_cast<std::size_t>(i)]));
            t.coords.push_back(std::move(c));
            t.z.push_back(std::stod(cells[z_col]));
        } catch (const std::exception&) {
            throw Error(ErrorCode::ParseError, path + ": bad number in row " + std::to_string(t.z.size() + 1));
        }
    }
    return t;
}

/// Rebuilds the radial graph a table was written from. The grid resolution is recovered
/// from the row count and the node coordinates must match.
template <int N>
RadialGraph<N> graph_from_table(const SolutionTable& t, const SpaceForm& form)
{
    if (t.n != N)
        throw Error(ErrorCode::GridMismatch, "solution table has the wrong sphere dimension");
    int res = 0;
    if constexpr (N == 1) {
        res = static_cast<int>(t.z.size());
    } else {
        res = static_cast<int>(std::lround(std::sqrt(t.z.size() / 2.0)));
        if (static_cast<std::size_t>(2 * res * res) != t.z.size())
            throw Error(ErrorCode::GridMismatch, "solution table row count is not a latitude-longitude grid");
    }
    auto grid = std::make_shared<const SphereGrid<N>>(res);
    for (std::size_t k = 0; k < grid->size(); ++k)
        for (int i = 0; i < N; ++i)
            if (std::abs(grid->node(k)[static_cast<std::size_t>(i)] - t.coords[k][static_cast<std::size_t>(i)]) > 1e-12)
                throw Error(ErrorCode::GridMismatch, "solution table coordinates do not match the grid");
    return RadialGraph<N>{grid, form, ScalarField(t.z)};
}

} // namespace hmcurv
