#pragma once

// Truncated multivariate Taylor polynomials ("jets") of degree <= 4.
//
// A Jet stores the coefficients c_alpha = (d^alpha f / alpha!) of a scalar
// quantity at a chart point, for all multi-indices |alpha| <= degree.
// Coefficients are kept in graded lexicographic order: grade 0 first, then
// grade 1, ...; within a grade, exponent vectors are ordered lexicographically
// descending, e.g. for d=2, D=2: (0,0); (1,0),(0,1); (2,0),(1,1),(0,2).
// The order for degree D is a prefix of the order for any higher degree, so
// truncation is a prefix copy and tables are shared per dimension.

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace qcurv {

inline constexpr int kMaxJetDegree = 4;
inline constexpr int kMaxJetDim = 8;

namespace detail {

struct JetTable {
    int dim = 0;
    int ncoef[kMaxJetDegree + 2] = {};        // ncoef[D] = #coeffs for degree D-1... see init
    std::vector<std::array<uint8_t, kMaxJetDim>> alpha;  // exponent vectors
    std::vector<double> alpha_factorial;
    std::vector<int> grade;                    // |alpha| per coefficient index
    // product structure: for result index k, pairs (i,j) with alpha_i+alpha_j = alpha_k
    std::vector<int> pair_begin;               // size ncoef_total+1
    std::vector<int> pair_i, pair_j;
    // derivative wrt var v: dst k (grade<=3) pulls src index and integer factor
    std::array<std::vector<std::pair<int, int>>, kMaxJetDim> deriv;
    std::unordered_map<uint32_t, int> index_of;  // base-5 packed exponents -> index

    static uint32_t pack(std::span<const uint8_t> a, int dim) {
        uint32_t key = 0;
        for (int i = dim - 1; i >= 0; --i) key = key * 5u + a[i];
        return key;
    }

    static const JetTable& get(int dim) {
        static std::atomic<JetTable*> cache[kMaxJetDim + 1] = {};
        if (dim < 1 || dim > kMaxJetDim) throw std::invalid_argument("jet dimension out of range");
        JetTable* t = cache[dim].load(std::memory_order_acquire);
        if (!t) {
            static std::mutex m;
            std::lock_guard<std::mutex> lock(m);
            t = cache[dim].load(std::memory_order_acquire);
            if (!t) {
                t = build(dim);
                cache[dim].store(t, std::memory_order_release);
            }
        }
        return *t;
    }

    static JetTable* build(int dim);
};

inline void enumerate_grade(int dim, int pos, int left, std::array<uint8_t, kMaxJetDim>& cur,
                            std::vector<std::array<uint8_t, kMaxJetDim>>& out) {
    if (pos == dim - 1) {
        cur[pos] = uint8_t(left);
        out.push_back(cur);
        cur[pos] = 0;
        return;
    }
    for (int e = left; e >= 0; --e) {
        cur[pos] = uint8_t(e);
        enumerate_grade(dim, pos + 1, left - e, cur, out);
    }
    cur[pos] = 0;
}

inline JetTable* JetTable::build(int dim) {
    auto* t = new JetTable();
    t->dim = dim;
    std::array<uint8_t, kMaxJetDim> cur{};
    std::vector<std::array<uint8_t, kMaxJetDim>> bucket;
    for (int g = 0; g <= kMaxJetDegree; ++g) {
        bucket.clear();
        enumerate_grade(dim, 0, g, cur, bucket);
        t->ncoef[g + 1] = static_cast<int>(t->alpha.size() + bucket.size());
        for (auto& a : bucket) t->alpha.push_back(a);
    }
    const int n = static_cast<int>(t->alpha.size());
    t->alpha_factorial.resize(n);
    t->grade.resize(n);
    t->index_of.clear();
    for (int k = 0; k < n; ++k) {
        double f = 1.0;
        int g = 0;
        for (int v = 0; v < dim; ++v) {
            for (int j = 2; j <= t->alpha[k][v]; ++j) f *= j;
            g += t->alpha[k][v];
        }
        t->alpha_factorial[k] = f;
        t->grade[k] = g;
        t->index_of.emplace(pack(t->alpha[k], dim), k);
    }
    std::vector<std::vector<std::pair<int, int>>> pairs(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (t->grade[i] + t->grade[j] > kMaxJetDegree) continue;
            std::array<uint8_t, kMaxJetDim> s{};
            for (int v = 0; v < dim; ++v) s[v] = uint8_t(t->alpha[i][v] + t->alpha[j][v]);
            pairs[t->index_of.at(pack(s, dim))].emplace_back(i, j);
        }
    t->pair_begin.assign(n + 1, 0);
    for (int k = 0; k < n; ++k) t->pair_begin[k + 1] = t->pair_begin[k] + static_cast<int>(pairs[k].size());
    t->pair_i.resize(t->pair_begin[n]);
    t->pair_j.resize(t->pair_begin[n]);
    for (int k = 0; k < n; ++k)
        for (size_t q = 0; q < pairs[k].size(); ++q) {
            t->pair_i[t->pair_begin[k] + q] = pairs[k][q].first;
            t->pair_j[t->pair_begin[k] + q] = pairs[k][q].second;
        }
    for (int v = 0; v < dim; ++v) {
        auto& dv = t->deriv[v];
        dv.resize(t->ncoef[kMaxJetDegree]);
        for (int k = 0; k < t->ncoef[kMaxJetDegree]; ++k) {
            std::array<uint8_t, kMaxJetDim> b = t->alpha[k];
            b[v]++;
            dv[k] = {t->index_of.at(pack(b, dim)), int(b[v])};
        }
    }
    return t;
}

}  // namespace detail

class Jet {
public:
    Jet() = default;

    static Jet constant(double v, int dim, int degree) {
        Jet j(dim, degree);
        j.c_[0] = v;
        j.zero_ = (v == 0.0);
        return j;
    }

    static Jet zero(int dim, int degree) { return constant(0.0, dim, degree); }

    // Jet of the coordinate function x_index at base value `value`.
    static Jet variable(int index, double value, int dim, int degree) {
        if (index < 0 || index >= dim) throw std::invalid_argument("jet variable index out of range");
        Jet j(dim, degree);
        j.c_[0] = value;
        if (degree >= 1) j.c_[idx_of_unit(j.tab(), index)] = 1.0;
        j.zero_ = false;
        return j;
    }

    int dim() const { return dim_; }
    int degree() const { return degree_; }
    int size() const { return static_cast<int>(c_.size()); }
    double value() const { return c_.empty() ? 0.0 : c_[0]; }
    bool structurally_zero() const { return zero_; }
    std::span<const double> coeffs() const { return c_; }
    double& raw(int k) { return c_[k]; }
    double raw(int k) const { return c_[k]; }

    bool finite() const {
        for (double v : c_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    Jet truncated(int new_degree) const {
        if (new_degree > degree_) throw std::invalid_argument("cannot truncate upward");
        if (new_degree == degree_) return *this;
        Jet r(dim_, new_degree);
        for (int k = 0; k < r.size(); ++k) r.c_[k] = c_[k];
        r.zero_ = zero_;
        return r;
    }

    // ---- arithmetic -------------------------------------------------------

    friend Jet operator+(const Jet& a, const Jet& b) {
        check_compatible(a, b);
        if (a.zero_) return b;
        if (b.zero_) return a;
        Jet r(a.dim_, a.degree_);
        for (int k = 0; k < r.size(); ++k) r.c_[k] = a.c_[k] + b.c_[k];
        r.zero_ = false;
        return r;
    }

    friend Jet operator-(const Jet& a, const Jet& b) {
        check_compatible(a, b);
        if (b.zero_) return a;
        Jet r(a.dim_, a.degree_);
        for (int k = 0; k < r.size(); ++k) r.c_[k] = a.c_[k] - b.c_[k];
        r.zero_ = a.zero_ && b.zero_;
        return r;
    }

    Jet operator-() const {
        Jet r(dim_, degree_);
        for (int k = 0; k < size(); ++k) r.c_[k] = -c_[k];
        r.zero_ = zero_;
        return r;
    }

    friend Jet operator*(const Jet& a, const Jet& b) {
        check_compatible(a, b);
        Jet r(a.dim_, a.degree_);
        if (a.zero_ || b.zero_) return r;
        const auto& t = a.tab();
        for (int k = 0; k < r.size(); ++k) {
            double s = 0.0;
            for (int q = t.pair_begin[k]; q < t.pair_begin[k + 1]; ++q)
                s += a.c_[t.pair_i[q]] * b.c_[t.pair_j[q]];
            r.c_[k] = s;
        }
        r.zero_ = false;
        return r;
    }

    friend Jet operator/(const Jet& a, const Jet& b) {
        check_compatible(a, b);
        if (b.value() == 0.0) throw std::runtime_error("jet division by zero constant term");
        if (a.zero_) return a;
        return a * reciprocal(b);
    }

    friend Jet operator*(const Jet& a, double s) {
        Jet r(a.dim_, a.degree_);
        if (a.zero_ || s == 0.0) return r;
        for (int k = 0; k < r.size(); ++k) r.c_[k] = a.c_[k] * s;
        r.zero_ = false;
        return r;
    }
    friend Jet operator*(double s, const Jet& a) { return a * s; }
    friend Jet operator/(const Jet& a, double s) { return a * (1.0 / s); }
    friend Jet operator+(const Jet& a, double s) {
        Jet r = a;
        r.c_[0] += s;
        r.zero_ = r.zero_ && (s == 0.0);
        return r;
    }
    friend Jet operator+(double s, const Jet& a) { return a + s; }
    friend Jet operator-(const Jet& a, double s) { return a + (-s); }
    friend Jet operator-(double s, const Jet& a) { return (-a) + s; }

    Jet& operator+=(const Jet& b) { return *this = *this + b; }
    Jet& operator-=(const Jet& b) { return *this = *this - b; }
    Jet& operator*=(const Jet& b) { return *this = *this * b; }

    // d/dx_v, degree drops by one
    friend Jet partial(const Jet& a, int v) {
        if (a.degree_ < 1) throw std::invalid_argument("cannot differentiate degree-0 jet");
        if (v < 0 || v >= a.dim_) throw std::invalid_argument("partial index out of range");
        Jet r(a.dim_, a.degree_ - 1);
        if (a.zero_) return r;
        const auto& dv = a.tab().deriv[v];
        for (int k = 0; k < r.size(); ++k) r.c_[k] = a.c_[dv[k].first] * dv[k].second;
        r.zero_ = false;
        return r;
    }

    // partial derivative value d^alpha f at the base point (= alpha! * coeff)
    friend double extract_partial(const Jet& a, std::span<const int> alpha) {
        const auto& t = a.tab();
        std::array<uint8_t, kMaxJetDim> key{};
        int g = 0;
        if (static_cast<int>(alpha.size()) != a.dim_)
            throw std::invalid_argument("multi-index length does not match jet dimension");
        for (int v = 0; v < a.dim_; ++v) {
            if (alpha[v] < 0) throw std::invalid_argument("negative multi-index entry");
            key[v] = uint8_t(alpha[v]);
            g += alpha[v];
        }
        if (g > a.degree_) throw std::invalid_argument("multi-index order exceeds jet degree");
        const int k = t.index_of.at(detail::JetTable::pack(key, a.dim_));
        return a.c_[k] * t.alpha_factorial[k];
    }

    // Taylor composition f(a) given the series s[k] = f^(k)(a.value())/k!
    static Jet compose(const Jet& a, std::span<const double> series) {
        Jet u = a;
        u.c_[0] = 0.0;
        u.zero_ = false;
        Jet r = Jet::constant(series[a.degree_], a.dim_, a.degree_);
        for (int k = a.degree_ - 1; k >= 0; --k) {
            r = r * u;
            r.c_[0] += series[k];
            r.zero_ = false;
        }
        return r;
    }

private:
    Jet(int dim, int degree) : dim_(dim), degree_(degree), zero_(true) {
        if (degree < 0 || degree > kMaxJetDegree) throw std::invalid_argument("jet degree out of range");
        c_.assign(detail::JetTable::get(dim).ncoef[degree + 1], 0.0);
    }

    const detail::JetTable& tab() const { return detail::JetTable::get(dim_); }

    static void check_compatible(const Jet& a, const Jet& b) {
        if (a.dim_ != b.dim_ || a.degree_ != b.degree_)
            throw std::invalid_argument("jet dimension/degree mismatch");
    }

    static int idx_of_unit(const detail::JetTable& t, int v) {
        std::array<uint8_t, kMaxJetDim> key{};
        key[v] = 1;
        return t.index_of.at(detail::JetTable::pack(key, t.dim));
    }

    static Jet reciprocal(const Jet& b) {
        const double b0 = b.value();
        std::array<double, kMaxJetDegree + 1> s{};
        double p = 1.0 / b0;
        for (int k = 0; k <= b.degree_; ++k) {
            s[k] = p;
            p *= -1.0 / b0;
        }
        return compose(b, std::span<const double>(s.data(), b.degree_ + 1));
    }

    int dim_ = 0;
    int degree_ = 0;
    bool zero_ = true;
    std::vector<double> c_;
};

inline Jet exp(const Jet& a) {
    std::array<double, kMaxJetDegree + 1> s{};
    const double e = std::exp(a.value());
    double f = 1.0;
    for (int k = 0; k <= a.degree(); ++k) {
        s[k] = e / f;
        f *= (k + 1);
    }
    return Jet::compose(a, std::span<const double>(s.data(), a.degree() + 1));
}

inline Jet log(const Jet& a) {
    if (a.value() <= 0.0) throw std::runtime_error("jet log requires positive constant term");
    std::array<double, kMaxJetDegree + 1> s{};
    s[0] = std::log(a.value());
    double p = 1.0 / a.value();
    for (int k = 1; k <= a.degree(); ++k) {
        s[k] = ((k % 2) ? 1.0 : -1.0) * p / k;
        p /= a.value();
    }
    return Jet::compose(a, std::span<const double>(s.data(), a.degree() + 1));
}

inline Jet sin(const Jet& a) {
    std::array<double, kMaxJetDegree + 1> s{};
    const double sv = std::sin(a.value()), cv = std::cos(a.value());
    const double tab[4] = {sv, cv, -sv, -cv};
    double f = 1.0;
    for (int k = 0; k <= a.degree(); ++k) {
        s[k] = tab[k % 4] / f;
        f *= (k + 1);
    }
    return Jet::compose(a, std::span<const double>(s.data(), a.degree() + 1));
}

inline Jet cos(const Jet& a) {
    std::array<double, kMaxJetDegree + 1> s{};
    const double sv = std::sin(a.value()), cv = std::cos(a.value());
    const double tab[4] = {cv, -sv, -cv, sv};
    double f = 1.0;
    for (int k = 0; k <= a.degree(); ++k) {
        s[k] = tab[k % 4] / f;
        f *= (k + 1);
    }
    return Jet::compose(a, std::span<const double>(s.data(), a.degree() + 1));
}

// a^p for real exponent, positive base
inline Jet powr(const Jet& a, double p) {
    if (a.value() <= 0.0) throw std::runtime_error("jet powr requires positive constant term");
    std::array<double, kMaxJetDegree + 1> s{};
    double coef = 1.0, base = std::pow(a.value(), p);
    for (int k = 0; k <= a.degree(); ++k) {
        s[k] = coef * base;
        coef *= (p - k) / (k + 1);
        base /= a.value();
    }
    return Jet::compose(a, std::span<const double>(s.data(), a.degree() + 1));
}

inline Jet sqrt(const Jet& a) {
    if (a.value() <= 0.0) throw std::runtime_error("jet sqrt requires positive constant term");
    return powr(a, 0.5);
}

}  // namespace qcurv
