// Sparse bivariate polynomials with exact rational coefficients.

#pragma once

#include "latblock/numeric.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <utility>

namespace latblock {

class BivariatePoly {
public:
    using Monomial = std::pair<int, int>;  // (degree in x, degree in y)

    BivariatePoly() = default;
    explicit BivariatePoly(const Rational& c) { add_term(c, 0, 0); }

    static BivariatePoly x() { return monomial(Rational(1), 1, 0); }
    static BivariatePoly y() { return monomial(Rational(1), 0, 1); }
    static BivariatePoly monomial(const Rational& c, int dx, int dy) {
        BivariatePoly p;
        p.add_term(c, dx, dy);
        return p;
    }

    void add_term(const Rational& c, int dx, int dy) {
        if (c.is_zero()) return;
        auto [it, inserted] = terms_.try_emplace({dx, dy}, c);
        if (!inserted) {
            it->second += c;
            if (it->second.is_zero()) terms_.erase(it);
        }
    }

    Rational coefficient(int dx, int dy) const {
        auto it = terms_.find({dx, dy});
        return it == terms_.end() ? Rational(0) : it->second;
    }

    bool is_zero() const { return terms_.empty(); }

    int degree_x() const {
        int d = -1;
        for (const auto& [m, c] : terms_) d = std::max(d, m.first);
        return d;
    }

    /// Coefficient of x^degree as a polynomial in y alone.
    BivariatePoly leading_x() const {
        const int d = degree_x();
        BivariatePoly out;
        for (const auto& [m, c] : terms_)
            if (m.first == d) out.add_term(c, 0, m.second);
        return out;
    }

    Rational operator()(const Rational& xv, const Rational& yv) const {
        Rational acc(0);
        for (const auto& [m, c] : terms_) acc += c * pow(xv, m.first) * pow(yv, m.second);
        return acc;
    }

    BivariatePoly operator-() const {
        BivariatePoly out;
        for (const auto& [m, c] : terms_) out.terms_.emplace(m, -c);
        return out;
    }
    BivariatePoly& operator+=(const BivariatePoly& o) {
        for (const auto& [m, c] : o.terms_) add_term(c, m.first, m.second);
        return *this;
    }
    BivariatePoly& operator-=(const BivariatePoly& o) { return *this += -o; }

    friend BivariatePoly operator+(BivariatePoly a, const BivariatePoly& b) { return a += b; }
    friend BivariatePoly operator-(BivariatePoly a, const BivariatePoly& b) { return a -= b; }
    friend BivariatePoly operator*(const BivariatePoly& a, const BivariatePoly& b) {
        BivariatePoly out;
        for (const auto& [ma, ca] : a.terms_)
            for (const auto& [mb, cb] : b.terms_) out.add_term(ca * cb, ma.first + mb.first, ma.second + mb.second);
        return out;
    }
    friend BivariatePoly operator*(const Rational& s, const BivariatePoly& a) { return BivariatePoly(s) * a; }
    friend bool operator==(const BivariatePoly& a, const BivariatePoly& b) { return a.terms_ == b.terms_; }

    const std::map<Monomial, Rational>& terms() const { return terms_; }

    std::string str() const {
        if (terms_.empty()) return "0";
        std::string s;
        for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
            if (!s.empty()) s += " + ";
            s += "(" + it->second.str() + ")";
            if (it->first.first) s += "*x^" + std::to_string(it->first.first);
            if (it->first.second) s += "*y^" + std::to_string(it->first.second);
        }
        return s;
    }

private:
    static Rational pow(const Rational& v, int e) {
        Rational r(1);
        for (int i = 0; i < e; ++i) r *= v;
        return r;
    }

    std::map<Monomial, Rational> terms_;
};

}  // namespace latblock
