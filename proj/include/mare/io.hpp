#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "json.hpp"

#include "mare/dadda.hpp"
#include "mare/error.hpp"
#include "mare/matrix.hpp"
#include "mare/problem.hpp"
#include "mare/structured.hpp"

namespace mare {

using Json = nlohmann::json;

namespace detail {

inline const Json& field(const Json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) {
        throw InvalidArgument(std::string("problem file: missing field '") + key + "'");
    }
    return j.at(key);
}

inline std::size_t count_field(const Json& j, const char* key)
{
    const Json& v = field(j, key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw InvalidArgument(std::string("problem file: '") + key + "' must be a nonnegative integer");
    }
    return v.get<std::size_t>();
}

inline Vector numbers(const Json& v, std::size_t expected, const std::string& what)
{
    if (!v.is_array() || v.size() != expected) {
        throw InvalidArgument("problem file: '" + what + "' must be an array of " +
                              std::to_string(expected) + " numbers");
    }
    Vector out;
    out.reserve(expected);
    for (const auto& x : v) {
        if (!x.is_number()) {
            throw InvalidArgument("problem file: '" + what + "' holds a non-number");
        }
        out.push_back(x.get<double>());
    }
    return out;
}

inline Matrix matrix_field(const Json& j, const char* key, std::size_t rows, std::size_t cols)
{
    return Matrix(rows, cols, numbers(field(j, key), rows * cols, key));
}

inline StructuredSquare structured_from_json(const Json& j, std::size_t order, const char* name)
{
    const std::string kind = field(j, "kind").get<std::string>();
    if (kind == "dense") {
        return StructuredSquare::dense(Matrix(order, order, numbers(field(j, "data"), order * order,
                                                                    std::string(name) + ".data")));
    }
    if (kind == "banded") {
        const std::size_t lo = count_field(j, "lower");
        const std::size_t hi = count_field(j, "upper");
        return StructuredSquare::banded(
            order, lo, hi,
            numbers(field(j, "diagonals"), (lo + hi + 1) * order, std::string(name) + ".diagonals"));
    }
    if (kind == "diag_plus_lowrank") {
        const std::size_t r = count_field(j, "rank");
        const int sign = field(j, "sign").get<int>();
        return StructuredSquare::diag_plus_low_rank(
            numbers(field(j, "diag"), order, std::string(name) + ".diag"),
            matrix_field(j, "left", order, r), matrix_field(j, "right", order, r), sign);
    }
    throw InvalidArgument("problem file: unknown kind '" + kind + "' for " + name);
}

inline Json to_array(std::span<const double> data) { return Json(std::vector<double>(data.begin(), data.end())); }

inline Json structured_to_json(const StructuredSquare& s)
{
    if (const auto* d = s.as_dense()) {
        return {{"kind", "dense"}, {"data", to_array(d->entries.data())}};
    }
    if (const auto* b = s.as_banded()) {
        return {{"kind", "banded"}, {"lower", b->lower}, {"upper", b->upper},
                {"diagonals", b->band}};
    }
    const auto& lr = *s.as_low_rank();
    return {{"kind", "diag_plus_lowrank"}, {"diag", lr.diag},
            {"rank", lr.left.cols()},      {"left", to_array(lr.left.data())},
            {"right", to_array(lr.right.data())}, {"sign", lr.sign}};
}

} // namespace detail

struct LoadedProblem {
    MareProblem problem;
    std::optional<Matrix> x_true;
};

/// Parses the problem format: m, n, p, q; A and D as structured objects;
/// Bl, Br, Cl, Cr as row-major arrays; u1, u2, v1, v2; optional X_true
/// (row-major m x n). Throws InvalidArgument on malformed content.
inline LoadedProblem problem_from_json(const Json& j)
{
    try {
        const std::size_t m = detail::count_field(j, "m");
        const std::size_t n = detail::count_field(j, "n");
        const std::size_t p = detail::count_field(j, "p");
        const std::size_t q = detail::count_field(j, "q");
        LoadedProblem out;
        MareProblem& prob = out.problem;
        prob.a = detail::structured_from_json(detail::field(j, "A"), m, "A");
        prob.d = detail::structured_from_json(detail::field(j, "D"), n, "D");
        prob.bl = detail::matrix_field(j, "Bl", m, p);
        prob.br = detail::matrix_field(j, "Br", n, p);
        prob.cl = detail::matrix_field(j, "Cl", n, q);
        prob.cr = detail::matrix_field(j, "Cr", m, q);
        prob.u1 = detail::numbers(detail::field(j, "u1"), n, "u1");
        prob.u2 = detail::numbers(detail::field(j, "u2"), m, "u2");
        prob.v1 = detail::numbers(detail::field(j, "v1"), n, "v1");
        prob.v2 = detail::numbers(detail::field(j, "v2"), m, "v2");
        if (j.contains("X_true") && !j.at("X_true").is_null()) {
            out.x_true = detail::matrix_field(j, "X_true", m, n);
        }
        return out;
    } catch (const Json::exception& e) {
        throw InvalidArgument(std::string("problem file: ") + e.what());
    } catch (const DimensionError& e) {
        throw InvalidArgument(std::string("problem file: ") + e.what());
    }
}

inline Json problem_to_json(const MareProblem& prob, const std::optional<Matrix>& x_true = {})
{
    Json j = {
        {"m", prob.m()},
        {"n", prob.n()},
        {"p", prob.p()},
        {"q", prob.q()},
        {"A", detail::structured_to_json(prob.a)},
        {"D", detail::structured_to_json(prob.d)},
        {"Bl", detail::to_array(prob.bl.data())},
        {"Br", detail::to_array(prob.br.data())},
        {"Cl", detail::to_array(prob.cl.data())},
        {"Cr", detail::to_array(prob.cr.data())},
        {"u1", prob.u1},
        {"u2", prob.u2},
        {"v1", prob.v1},
        {"v2", prob.v2},
    };
    if (x_true) {
        j["X_true"] = detail::to_array(x_true->data());
    }
    return j;
}

inline LoadedProblem load_problem(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("cannot open problem file '" + path + "'");
    }
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        throw InvalidArgument("problem file '" + path + "': " + e.what());
    }
    return problem_from_json(j);
}

inline void save_json(const Json& j, const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw InvalidArgument("cannot write '" + path + "'");
    }
    out << j.dump(2) << '\n';
}

/// Non-finite values become null in JSON.
inline Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json report_to_json(const SolveReport& rep, const StopCriteria& crit)
{
    Json records = Json::array();
    for (const auto& r : rep.records) {
        records.push_back({{"k", r.k},
                           {"value", number_or_null(r.value)},
                           {"kernel_order", r.kernel_order},
                           {"seconds", r.seconds}});
    }
    return {{"termination", to_string(rep.termination)},
            {"iterations", rep.iterations},
            {"criterion", to_string(crit.kind)},
            {"tolerance", crit.tolerance},
            {"max_iterations", crit.max_iterations},
            {"kernel_row_cap", crit.kernel_row_cap},
            {"alpha", rep.shifts.alpha},
            {"beta", rep.shifts.beta},
            {"gamma", rep.shifts.gamma()},
            {"max_decrease", rep.max_decrease},
            {"records", records}};
}

/// Dense matrix as CSV, one row per line, 17 significant digits.
inline std::string matrix_to_csv(const Matrix& m)
{
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) {
                os << ',';
            }
            os << m(i, j);
        }
        os << '\n';
    }
    return os.str();
}

} // namespace mare
