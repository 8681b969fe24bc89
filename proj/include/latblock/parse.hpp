// Text forms: matrices "a,b;c,d" and quaternions "x+yi+zj+wk", with exact
// rational (or decimal) coefficients.

#pragma once

#include "latblock/error.hpp"
#include "latblock/mat2.hpp"
#include "latblock/quat.hpp"

#include <cctype>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace latblock {

namespace detail {

inline std::size_t skip_space(std::string_view s, std::size_t i) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    return i;
}

inline bool number_char(char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '/'; }

/// Reads an optionally signed number starting at i; advances i.
inline Rational read_number(std::string_view s, std::size_t& i, bool allow_sign = true) {
    const std::size_t start = i;
    std::size_t j = i;
    if (allow_sign && j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
    const std::size_t digits = j;
    while (j < s.size() && number_char(s[j])) ++j;
    if (j < s.size() && (s[j] == 'e' || s[j] == 'E') && j > digits) {
        std::size_t e = j + 1;
        if (e < s.size() && (s[e] == '+' || s[e] == '-')) ++e;
        if (e < s.size() && std::isdigit(static_cast<unsigned char>(s[e]))) {
            j = e;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        }
    }
    if (j == digits) throw parse_error("expected a number", start);
    try {
        Rational r = Rational::parse(s.substr(start, j - start));
        i = j;
        return r;
    } catch (const std::invalid_argument&) {
        throw parse_error("malformed number '" + std::string(s.substr(start, j - start)) + "'", start);
    }
}

}  // namespace detail

/// "a,b;c,d" (whitespace allowed) into an exact matrix.
inline Mat2q parse_matrix(std::string_view s) {
    Rational v[4];
    const char seps[3] = {',', ';', ','};
    std::size_t i = 0;
    for (int k = 0; k < 4; ++k) {
        i = detail::skip_space(s, i);
        v[k] = detail::read_number(s, i);
        i = detail::skip_space(s, i);
        if (k < 3) {
            if (i >= s.size() || s[i] != seps[k])
                throw parse_error(std::string("expected '") + seps[k] + "' in matrix", i);
            ++i;
        }
    }
    if (i != s.size()) throw parse_error("trailing characters after matrix", i);
    return {v[0], v[1], v[2], v[3]};
}

/// Signed terms c, c i, c j, c k in any order; a bare unit has coefficient 1.
inline Quatq parse_quaternion(std::string_view s, const QuatAlgebra& alg) {
    Rational c[4];
    bool seen[4] = {false, false, false, false};
    std::size_t i = detail::skip_space(s, 0);
    if (i == s.size()) throw parse_error("empty quaternion", i);
    bool first = true;
    while (i < s.size()) {
        const std::size_t term_start = i;
        int sign = 1;
        if (s[i] == '+' || s[i] == '-') {
            sign = s[i] == '-' ? -1 : 1;
            i = detail::skip_space(s, i + 1);
        } else if (!first) {
            throw parse_error("expected '+' or '-' between terms", i);
        }
        Rational coef(1);
        bool has_number = false;
        if (i < s.size() && detail::number_char(s[i])) {
            coef = detail::read_number(s, i, false);
            has_number = true;
            i = detail::skip_space(s, i);
            if (i < s.size() && s[i] == '*') i = detail::skip_space(s, i + 1);
        }
        int slot = 0;
        if (i < s.size() && (s[i] == 'i' || s[i] == 'j' || s[i] == 'k')) {
            slot = s[i] == 'i' ? 1 : (s[i] == 'j' ? 2 : 3);
            ++i;
        } else if (!has_number) {
            throw parse_error("expected a coefficient or one of i, j, k", i);
        }
        if (seen[slot]) throw parse_error("repeated quaternion component", term_start);
        seen[slot] = true;
        c[slot] = sign < 0 ? -coef : coef;
        i = detail::skip_space(s, i);
        first = false;
    }
    return {c[0], c[1], c[2], c[3], alg};
}

/// Lines of a blocking-points file; blank lines and '#' comments skipped.
/// Parse errors are reported with their line number.
template <class F>
void for_each_point_line(std::istream& in, F&& f) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        try {
            f(std::string_view(line).substr(b, e - b + 1));
        } catch (const parse_error& ex) {
            throw parse_error("blocking file line " + std::to_string(lineno) + ": " + ex.message(), ex.position());
        }
    }
}

inline std::vector<Mat2d> read_matrix_points(std::istream& in) {
    std::vector<Mat2d> out;
    for_each_point_line(in, [&](std::string_view s) { out.push_back(to_double(parse_matrix(s))); });
    return out;
}

inline std::vector<Quatd> read_quaternion_points(std::istream& in, const QuatAlgebra& alg) {
    std::vector<Quatd> out;
    for_each_point_line(in, [&](std::string_view s) { out.push_back(to_double(parse_quaternion(s, alg))); });
    return out;
}

}  // namespace latblock
