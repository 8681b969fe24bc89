// 2x2 matrices over an arbitrary scalar (double, Rational, QuadExt, BigInt).

#pragma once

#include "latblock/numeric.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace latblock {

/// Row-major [[x, y], [z, w]].
template <class T>
struct Mat2 {
    T x, y, z, w;

    static Mat2 identity(const T& like) { return {one_like(like), zero_like(like), zero_like(like), one_like(like)}; }
    static Mat2 identity() { return identity(T(0)); }
    static Mat2 zero(const T& like) { return {zero_like(like), zero_like(like), zero_like(like), zero_like(like)}; }

    T det() const { return x * w - y * z; }
    T trace() const { return x + w; }

    Mat2 operator-() const { return {-x, -y, -z, -w}; }
    Mat2& operator+=(const Mat2& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        w += o.w;
        return *this;
    }
    Mat2& operator-=(const Mat2& o) {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        w -= o.w;
        return *this;
    }

    friend Mat2 operator+(Mat2 a, const Mat2& b) { return a += b; }
    friend Mat2 operator-(Mat2 a, const Mat2& b) { return a -= b; }
    friend Mat2 operator*(const Mat2& a, const Mat2& b) {
        return {a.x * b.x + a.y * b.z, a.x * b.y + a.y * b.w, a.z * b.x + a.w * b.z, a.z * b.y + a.w * b.w};
    }
    friend Mat2 operator*(const T& s, const Mat2& a) { return {s * a.x, s * a.y, s * a.z, s * a.w}; }
    friend bool operator==(const Mat2& a, const Mat2& b) {
        return a.x == b.x && a.y == b.y && a.z == b.z && a.w == b.w;
    }
    friend bool operator!=(const Mat2& a, const Mat2& b) { return !(a == b); }

    /// Adjugate; equals the inverse for determinant-one matrices.
    Mat2 adjugate() const { return {w, -y, -z, x}; }

    Mat2 inverse() const {
        T d = det();
        if (d == zero_like(x)) throw std::domain_error("singular 2x2 matrix");
        return {w / d, -y / d, -z / d, x / d};
    }

    template <class F>
    auto map(F&& f) const -> Mat2<decltype(f(x))> {
        return {f(x), f(y), f(z), f(w)};
    }
};

using Mat2d = Mat2<double>;
using Mat2q = Mat2<Rational>;
using Mat2z = Mat2<BigInt>;

template <class T>
Mat2d to_double(const Mat2<T>& m) {
    return m.map([](const T& v) { return to_double(v); });
}
inline Mat2d to_double(const Mat2d& m) { return m; }

inline Mat2q to_rational(const Mat2z& m) {
    return m.map([](const BigInt& v) { return Rational(v); });
}

inline double frobenius(const Mat2d& m) { return std::sqrt(m.x * m.x + m.y * m.y + m.z * m.z + m.w * m.w); }
inline double max_abs_diff(const Mat2d& a, const Mat2d& b) {
    return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z), std::abs(a.w - b.w)});
}

inline bool is_integer_matrix(const Mat2q& m) {
    return m.x.is_integer() && m.y.is_integer() && m.z.is_integer() && m.w.is_integer();
}

inline Mat2z to_integer(const Mat2q& m) {
    if (!is_integer_matrix(m)) throw std::invalid_argument("matrix has non-integer entries");
    return m.map([](const Rational& v) { return v.num(); });
}

/// "a,b;c,d" text form (exact entries).
inline std::string format_mat(const Mat2q& m) {
    return m.x.str() + "," + m.y.str() + ";" + m.z.str() + "," + m.w.str();
}
inline std::string format_mat(const Mat2z& m) {
    return m.x.get_str() + "," + m.y.get_str() + ";" + m.z.get_str() + "," + m.w.get_str();
}

template <class T>
std::ostream& operator<<(std::ostream& os, const Mat2<T>& m) {
    return os << "[[" << m.x << ", " << m.y << "], [" << m.z << ", " << m.w << "]]";
}

inline std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }
inline std::ostream& operator<<(std::ostream& os, const QuadExt& u) { return os << u.str(); }

}  // namespace latblock
