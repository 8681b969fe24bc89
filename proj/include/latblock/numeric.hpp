// Exact scalar tower: big integers, rationals, real quadratic extensions,
// plus the floating embedding used by the analytic code.

#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace latblock {

using BigInt = mpz_class;

/// Default tolerance for comparisons between floating and exact values.
inline constexpr double kDefaultEpsilon = 1e-9;

inline bool is_perfect_square(const BigInt& n) {
    return n >= 0 && mpz_perfect_square_p(n.get_mpz_t()) != 0;
}

inline BigInt isqrt(const BigInt& n) {
    if (n < 0) throw std::domain_error("isqrt of negative integer");
    BigInt r;
    mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
    return r;
}

inline BigInt gcd(const BigInt& a, const BigInt& b) {
    BigInt r;
    mpz_gcd(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return r;
}

inline BigInt lcm(const BigInt& a, const BigInt& b) {
    BigInt r;
    mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return r;
}

/// Extended gcd: returns g = gcd(a, b) >= 0 and sets s, t with a*s + b*t = g.
inline BigInt ext_gcd(const BigInt& a, const BigInt& b, BigInt& s, BigInt& t) {
    BigInt g;
    mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return g;
}

/// Arbitrary-precision rational, always in lowest terms with positive denominator.
class Rational {
public:
    Rational() = default;
    Rational(int v) : q_(v) {}
    Rational(long v) : q_(v) {}
    Rational(long long v) : q_(BigInt(std::to_string(v))) {}
    Rational(const BigInt& v) : q_(v) {}
    Rational(const BigInt& num, const BigInt& den) {
        if (den == 0) throw std::domain_error("rational with zero denominator");
        q_ = mpq_class(num, den);
        q_.canonicalize();
    }

    /// Parses "p", "p/q" or a finite decimal such as "-1.25" (converted exactly).
    static Rational parse(std::string_view text);

    const BigInt& num() const { return q_.get_num(); }
    const BigInt& den() const { return q_.get_den(); }
    bool is_integer() const { return q_.get_den() == 1; }
    bool is_zero() const { return q_ == 0; }
    int sign() const { return sgn(q_); }
    /// Nearest double (mpq's own conversion truncates).
    double to_double() const {
        const double t = q_.get_d();
        if (!std::isfinite(t) || mpq_class(t) == q_) return t;
        const double u = std::nextafter(t, sgn(q_) > 0 ? HUGE_VAL : -HUGE_VAL);
        if (!std::isfinite(u)) return t;
        const mpq_class dt = abs(q_ - mpq_class(t)), du = abs(mpq_class(u) - q_);
        if (dt != du) return dt < du ? t : u;
        std::uint64_t bits;
        std::memcpy(&bits, &t, sizeof bits);
        return (bits & 1) == 0 ? t : u;
    }
    std::string str() const { return q_.get_str(); }
    /// Always "num/den", including integers ("3/1").
    std::string fraction_str() const { return num().get_str() + "/" + den().get_str(); }

    Rational operator-() const { return from_raw(-q_); }
    Rational& operator+=(const Rational& o) { q_ += o.q_; return *this; }
    Rational& operator-=(const Rational& o) { q_ -= o.q_; return *this; }
    Rational& operator*=(const Rational& o) { q_ *= o.q_; return *this; }
    Rational& operator/=(const Rational& o) {
        if (o.is_zero()) throw std::domain_error("rational division by zero");
        q_ /= o.q_;
        return *this;
    }

    friend Rational operator+(Rational a, const Rational& b) { return a += b; }
    friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

    friend bool operator==(const Rational& a, const Rational& b) { return a.q_ == b.q_; }
    friend bool operator!=(const Rational& a, const Rational& b) { return a.q_ != b.q_; }
    friend bool operator<(const Rational& a, const Rational& b) { return a.q_ < b.q_; }
    friend bool operator<=(const Rational& a, const Rational& b) { return a.q_ <= b.q_; }
    friend bool operator>(const Rational& a, const Rational& b) { return a.q_ > b.q_; }
    friend bool operator>=(const Rational& a, const Rational& b) { return a.q_ >= b.q_; }

    const mpq_class& raw() const { return q_; }

private:
    static Rational from_raw(mpq_class q) {
        Rational r;
        r.q_ = std::move(q);
        return r;
    }
    mpq_class q_{0};
};

inline Rational abs(const Rational& r) { return r.sign() < 0 ? -r : r; }
inline double to_double(const Rational& r) { return r.to_double(); }
inline double to_double(const BigInt& n) { return Rational(n).to_double(); }

/// Floor of a rational as a big integer.
inline BigInt floor(const Rational& r) {
    BigInt q;
    mpz_fdiv_q(q.get_mpz_t(), r.num().get_mpz_t(), r.den().get_mpz_t());
    return q;
}

inline BigInt ceil(const Rational& r) {
    BigInt q;
    mpz_cdiv_q(q.get_mpz_t(), r.num().get_mpz_t(), r.den().get_mpz_t());
    return q;
}

inline Rational Rational::parse(std::string_view text) {
    auto fail = [&](const char* why) {
        throw std::invalid_argument("bad rational '" + std::string(text) + "': " + why);
    };
    if (text.empty()) fail("empty");
    std::size_t i = 0;
    bool negative = false;
    if (text[i] == '+' || text[i] == '-') {
        negative = text[i] == '-';
        ++i;
    }
    auto digits = [&](std::size_t from) {
        std::size_t j = from;
        while (j < text.size() && text[j] >= '0' && text[j] <= '9') ++j;
        return j;
    };
    std::size_t int_end = digits(i);
    if (int_end < text.size() && text[int_end] == '/') {
        if (int_end == i) fail("missing numerator");
        std::size_t den_end = digits(int_end + 1);
        if (den_end != text.size() || den_end == int_end + 1) fail("malformed denominator");
        BigInt num(std::string(text.substr(i, int_end - i)), 10);
        BigInt den(std::string(text.substr(int_end + 1)), 10);
        if (den == 0) throw std::domain_error("rational with zero denominator");
        Rational r(num, den);
        return negative ? -r : r;
    }
    std::string mantissa(text.substr(i, int_end - i));
    std::size_t frac_len = 0;
    std::size_t pos = int_end;
    if (pos < text.size() && text[pos] == '.') {
        std::size_t frac_end = digits(pos + 1);
        mantissa += std::string(text.substr(pos + 1, frac_end - pos - 1));
        frac_len = frac_end - pos - 1;
        pos = frac_end;
    }
    if (mantissa.empty()) fail("no digits");
    long exponent = 0;
    if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
        std::size_t e = pos + 1;
        bool eneg = false;
        if (e < text.size() && (text[e] == '+' || text[e] == '-')) {
            eneg = text[e] == '-';
            ++e;
        }
        std::size_t e_end = digits(e);
        if (e_end == e || e_end - e > 6) fail("malformed exponent");
        exponent = std::stol(std::string(text.substr(e, e_end - e)));
        if (eneg) exponent = -exponent;
        pos = e_end;
    }
    if (pos != text.size()) fail("trailing characters");
    exponent -= static_cast<long>(frac_len);
    BigInt m(mantissa, 10);
    BigInt scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
    Rational r = exponent >= 0 ? Rational(BigInt(m * scale)) : Rational(m, scale);
    return negative ? -r : r;
}

/// Element p + q*sqrt(d) of the real quadratic field Q(sqrt d), d a positive non-square.
class QuadExt {
public:
    QuadExt(Rational rational_part, Rational radical_part, BigInt radicand)
        : p_(std::move(rational_part)), q_(std::move(radical_part)), d_(std::move(radicand)) {
        if (d_ <= 0 || is_perfect_square(d_))
            throw std::invalid_argument("radicand must be a positive non-square, got " + d_.get_str());
    }
    QuadExt(const Rational& r, const BigInt& radicand) : QuadExt(r, Rational(0), radicand) {}

    const Rational& rational_part() const { return p_; }
    const Rational& radical_part() const { return q_; }
    const BigInt& radicand() const { return d_; }

    QuadExt conj() const { return {p_, -q_, d_}; }
    /// Galois norm p^2 - d q^2.
    Rational norm() const { return p_ * p_ - Rational(d_) * q_ * q_; }
    bool is_zero() const { return p_.is_zero() && q_.is_zero(); }
    bool is_rational() const { return q_.is_zero(); }

    /// Exact sign of p + q sqrt(d).
    int sign() const {
        int sp = p_.sign(), sq = q_.sign();
        if (sq == 0) return sp;
        if (sp == 0) return sq;
        if (sp == sq) return sp;
        // Opposite signs: compare p^2 with d q^2.
        int cmp = (p_ * p_ > Rational(d_) * q_ * q_) ? 1 : (p_ * p_ < Rational(d_) * q_ * q_ ? -1 : 0);
        return cmp > 0 ? sp : sq;
    }

    QuadExt operator-() const { return {-p_, -q_, d_}; }
    QuadExt& operator+=(const QuadExt& o) {
        check(o);
        p_ += o.p_;
        q_ += o.q_;
        return *this;
    }
    QuadExt& operator-=(const QuadExt& o) {
        check(o);
        p_ -= o.p_;
        q_ -= o.q_;
        return *this;
    }
    QuadExt& operator*=(const QuadExt& o) {
        check(o);
        Rational p = p_ * o.p_ + q_ * o.q_ * Rational(d_);
        Rational q = p_ * o.q_ + q_ * o.p_;
        p_ = std::move(p);
        q_ = std::move(q);
        return *this;
    }
    QuadExt& operator/=(const QuadExt& o) {
        check(o);
        Rational n = o.norm();
        if (n.is_zero()) throw std::domain_error("quadratic extension division by zero");
        *this *= o.conj();
        p_ /= n;
        q_ /= n;
        return *this;
    }
    QuadExt& operator*=(const Rational& r) {
        p_ *= r;
        q_ *= r;
        return *this;
    }

    friend QuadExt operator+(QuadExt a, const QuadExt& b) { return a += b; }
    friend QuadExt operator-(QuadExt a, const QuadExt& b) { return a -= b; }
    friend QuadExt operator*(QuadExt a, const QuadExt& b) { return a *= b; }
    friend QuadExt operator/(QuadExt a, const QuadExt& b) { return a /= b; }
    friend QuadExt operator*(QuadExt a, const Rational& r) { return a *= r; }
    friend QuadExt operator*(const Rational& r, QuadExt a) { return a *= r; }

    friend bool operator==(const QuadExt& a, const QuadExt& b) {
        return a.d_ == b.d_ && a.p_ == b.p_ && a.q_ == b.q_;
    }
    friend bool operator!=(const QuadExt& a, const QuadExt& b) { return !(a == b); }

    /// Double image. When p and q*sqrt(d) have opposite signs the value is
    /// evaluated as norm / (p - q sqrt d) so that no cancellation occurs.
    double to_double() const {
        double root = std::sqrt(to_double_exact_int(d_));
        double p = p_.to_double(), q = q_.to_double();
        if (p_.sign() * q_.sign() >= 0) return p + q * root;
        return norm().to_double() / (p - q * root);
    }

    std::string str() const {
        return p_.str() + (q_.sign() < 0 ? "-" : "+") + abs(q_).str() + "*sqrt(" + d_.get_str() + ")";
    }

private:
    static double to_double_exact_int(const BigInt& n) { return n.get_d(); }
    void check(const QuadExt& o) const {
        if (o.d_ != d_)
            throw std::invalid_argument("radicand mismatch: " + d_.get_str() + " vs " + o.d_.get_str());
    }

    Rational p_;
    Rational q_;
    BigInt d_;
};

inline double to_double(const QuadExt& u) { return u.to_double(); }

/// A double together with the tolerance used whenever it is compared against
/// another value.
struct ApproxReal {
    double value = 0.0;
    double epsilon = kDefaultEpsilon;

    ApproxReal() = default;
    ApproxReal(double v, double eps = kDefaultEpsilon) : value(v), epsilon(eps) {
        if (!(eps > 0)) throw std::invalid_argument("ApproxReal tolerance must be positive");
    }

    bool near(double other) const { return std::abs(value - other) <= epsilon; }
    bool near(const Rational& other) const { return near(other.to_double()); }
    bool near(const QuadExt& other) const { return near(other.to_double()); }
};

inline ApproxReal embed_real(const Rational& r, double eps = kDefaultEpsilon) { return {r.to_double(), eps}; }
inline ApproxReal embed_real(const QuadExt& u, double eps = kDefaultEpsilon) { return {u.to_double(), eps}; }

// Identity elements that carry the context of their sibling (the radicand
// for QuadExt).
inline double one_like(double) { return 1.0; }
inline double zero_like(double) { return 0.0; }
inline Rational one_like(const Rational&) { return Rational(1); }
inline Rational zero_like(const Rational&) { return Rational(0); }
inline BigInt one_like(const BigInt&) { return BigInt(1); }
inline BigInt zero_like(const BigInt&) { return BigInt(0); }
inline QuadExt one_like(const QuadExt& u) { return {Rational(1), u.radicand()}; }
inline QuadExt zero_like(const QuadExt& u) { return {Rational(0), u.radicand()}; }

/// Dense row-major matrix used for the small exact linear algebra
/// (at most 8x8 in practice).
template <class T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, const T& fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::initializer_list<std::initializer_list<T>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_) throw std::invalid_argument("ragged matrix initializer");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw std::invalid_argument("matrix shape mismatch");
        Matrix out(a.rows_, b.cols_, T(0));
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k)
                for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += a(i, k) * b(k, j);
        return out;
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n, T(0));
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
        return m;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

/// Exact determinant by fraction-free (Bareiss) elimination.
inline Rational determinant(Matrix<Rational> m) {
    const std::size_t n = m.rows();
    if (m.cols() != n) throw std::invalid_argument("determinant of non-square matrix");
    if (n == 0) return Rational(1);
    Rational prev(1);
    int sign = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (m(k, k).is_zero()) {
            std::size_t swap = k + 1;
            while (swap < n && m(swap, k).is_zero()) ++swap;
            if (swap == n) return Rational(0);
            for (std::size_t c = 0; c < n; ++c) std::swap(m(k, c), m(swap, c));
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            for (std::size_t j = k + 1; j < n; ++j)
                m(i, j) = (m(i, j) * m(k, k) - m(i, k) * m(k, j)) / prev;
            m(i, k) = Rational(0);
        }
        prev = m(k, k);
    }
    return sign > 0 ? m(n - 1, n - 1) : -m(n - 1, n - 1);
}

namespace detail {

/// Fraction-free row echelon form of an integer matrix. Returns pivot columns.
inline std::vector<std::size_t> bareiss_echelon(Matrix<BigInt>& m) {
    const std::size_t rows = m.rows(), cols = m.cols();
    std::vector<std::size_t> pivots;
    BigInt prev(1);
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t p = r;
        while (p < rows && m(p, c) == 0) ++p;
        if (p == rows) continue;
        if (p != r)
            for (std::size_t j = 0; j < cols; ++j) std::swap(m(r, j), m(p, j));
        for (std::size_t i = r + 1; i < rows; ++i) {
            for (std::size_t j = c + 1; j < cols; ++j) {
                BigInt v = m(i, j) * m(r, c) - m(i, c) * m(r, j);
                mpz_divexact(v.get_mpz_t(), v.get_mpz_t(), prev.get_mpz_t());
                m(i, j) = v;
            }
            m(i, c) = 0;
        }
        prev = m(r, c);
        pivots.push_back(c);
        ++r;
    }
    return pivots;
}

inline Matrix<BigInt> clear_denominators(const Matrix<Rational>& m) {
    Matrix<BigInt> out(m.rows(), m.cols(), BigInt(0));
    for (std::size_t i = 0; i < m.rows(); ++i) {
        BigInt l(1);
        for (std::size_t j = 0; j < m.cols(); ++j) l = lcm(l, m(i, j).den());
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j).num() * (l / m(i, j).den());
    }
    return out;
}

}  // namespace detail

inline std::size_t rational_rank(const Matrix<Rational>& m) {
    auto ints = detail::clear_denominators(m);
    return detail::bareiss_echelon(ints).size();
}

/// Basis of the right kernel {v : M v = 0}. Each vector is scaled to coprime
/// integers with its first non-zero entry positive. Full column rank gives an
/// empty list.
inline std::vector<std::vector<BigInt>> rational_nullspace(const Matrix<Rational>& m) {
    if (m.rows() == 0 || m.cols() == 0) throw std::invalid_argument("nullspace of empty matrix");
    auto ech = detail::clear_denominators(m);
    const auto pivots = detail::bareiss_echelon(ech);
    const std::size_t cols = m.cols();
    std::vector<bool> is_pivot(cols, false);
    for (auto c : pivots) is_pivot[c] = true;

    std::vector<std::vector<BigInt>> basis;
    for (std::size_t free = 0; free < cols; ++free) {
        if (is_pivot[free]) continue;
        std::vector<Rational> v(cols, Rational(0));
        v[free] = Rational(1);
        for (std::size_t k = pivots.size(); k-- > 0;) {
            const std::size_t pc = pivots[k];
            Rational acc(0);
            for (std::size_t j = pc + 1; j < cols; ++j)
                if (!v[j].is_zero()) acc += Rational(ech(k, j)) * v[j];
            v[pc] = -acc / Rational(ech(k, pc));
        }
        BigInt l(1);
        for (const auto& e : v) l = lcm(l, e.den());
        std::vector<BigInt> iv(cols);
        BigInt g(0);
        for (std::size_t j = 0; j < cols; ++j) {
            iv[j] = v[j].num() * (l / v[j].den());
            g = gcd(g, iv[j]);
        }
        int lead = 0;
        for (const auto& e : iv)
            if (e != 0) {
                lead = sgn(e);
                break;
            }
        for (auto& e : iv) {
            e /= g;
            if (lead < 0) e = -e;
        }
        basis.push_back(std::move(iv));
    }
    return basis;
}

/// Inverse of a square rational matrix by Gauss-Jordan elimination.
inline Matrix<Rational> inverse(const Matrix<Rational>& m) {
    const std::size_t n = m.rows();
    if (m.cols() != n) throw std::invalid_argument("inverse of non-square matrix");
    Matrix<Rational> a = m;
    Matrix<Rational> inv = Matrix<Rational>::identity(n);
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        while (p < n && a(p, c).is_zero()) ++p;
        if (p == n) throw std::domain_error("singular matrix");
        if (p != c)
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a(c, j), a(p, j));
                std::swap(inv(c, j), inv(p, j));
            }
        const Rational piv = a(c, c);
        for (std::size_t j = 0; j < n; ++j) {
            a(c, j) /= piv;
            inv(c, j) /= piv;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i == c || a(i, c).is_zero()) continue;
            const Rational f = a(i, c);
            for (std::size_t j = 0; j < n; ++j) {
                a(i, j) -= f * a(c, j);
                inv(i, j) -= f * inv(c, j);
            }
        }
    }
    return inv;
}

}  // namespace latblock
