#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <compare>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

namespace sspde::rs {

using Rat = boost::rational<long long>;

// a + b kappa with kappa a positive infinitesimal: compared lexicographically.
struct Degree {
    Rat a{0}, b{0};

    friend Degree operator+(Degree x, Degree y) { return {x.a + y.a, x.b + y.b}; }
    friend Degree operator-(Degree x, Degree y) { return {x.a - y.a, x.b - y.b}; }
    friend bool operator==(const Degree& x, const Degree& y) { return x.a == y.a && x.b == y.b; }
    friend bool operator<(const Degree& x, const Degree& y) { return x.a < y.a || (x.a == y.a && x.b < y.b); }
    friend bool operator<=(const Degree& x, const Degree& y) { return !(y < x); }
    friend bool operator>(const Degree& x, const Degree& y) { return y < x; }
    bool positive() const { return Degree{} < *this; }
};

inline std::string to_string(const Rat& r)
{
    std::ostringstream os;
    os << r.numerator();
    if (r.denominator() != 1)
        os << "/" << r.denominator();
    return os.str();
}

inline std::string to_string(const Degree& d)
{
    std::string s = to_string(d.a);
    if (d.b != Rat(0)) {
        s += d.b < Rat(0) ? " - " : " + ";
        const Rat m = d.b < Rat(0) ? -d.b : d.b;
        if (m != Rat(1))
            s += to_string(m);
        s += "k";
    }
    return s;
}

// Multi-index of X^k: component 0 is time (weight 2), 1..3 space (weight 1).
using Multi = std::array<int, 4>;

inline int weight(const Multi& k) { return 2 * k[0] + k[1] + k[2] + k[3]; }
inline bool is_zero(const Multi& k) { return k == Multi{0, 0, 0, 0}; }
inline Multi operator+(const Multi& x, const Multi& y) { return {x[0] + y[0], x[1] + y[1], x[2] + y[2], x[3] + y[3]}; }

inline long long factorial(const Multi& k)
{
    long long f = 1;
    for (int v : k)
        for (int j = 2; j <= v; ++j)
            f *= j;
    return f;
}

inline Rat binomial(const Multi& k, const Multi& l)
{
    return Rat(factorial(k), factorial(l) * factorial(Multi{k[0] - l[0], k[1] - l[1], k[2] - l[2], k[3] - l[3]}));
}

// All multi-indices of parabolic weight < w (lexicographic with kappa), i.e. with
// Degree{w} - weight positive.
inline std::vector<Multi> multis_below(const Degree& bound)
{
    std::vector<Multi> out;
    const long long top = static_cast<long long>(boost::rational_cast<double>(bound.a)) + 2;
    for (int t = 0; 2 * t <= top; ++t)
        for (int i = 0; i <= top; ++i)
            for (int j = 0; j <= top; ++j)
                for (int l = 0; l <= top; ++l) {
                    Multi k{t, i, j, l};
                    if ((bound - Degree{Rat(weight(k)), 0}).positive())
                        out.push_back(k);
                }
    return out;
}

// Multi-indices l <= k componentwise.
inline std::vector<Multi> submultis(const Multi& k)
{
    std::vector<Multi> out;
    for (int a = 0; a <= k[0]; ++a)
        for (int b = 0; b <= k[1]; ++b)
            for (int c = 0; c <= k[2]; ++c)
                for (int d = 0; d <= k[3]; ++d)
                    out.push_back({a, b, c, d});
    return out;
}

// A symbol is either the noise Xi or a product X^mono * prod_j I(planted_j).
// Children are kept sorted so that equality is structural.
struct Symbol {
    bool noise = false;
    Multi mono{0, 0, 0, 0};
    std::vector<Symbol> planted;

    bool is_monomial() const { return !noise && planted.empty(); }
};

inline std::strong_ordering compare(const Symbol& x, const Symbol& y)
{
    if (x.noise != y.noise)
        return x.noise ? std::strong_ordering::less : std::strong_ordering::greater;
    if (auto c = x.mono <=> y.mono; c != 0)
        return c;
    if (auto c = x.planted.size() <=> y.planted.size(); c != 0)
        return c;
    for (std::size_t i = 0; i < x.planted.size(); ++i)
        if (auto c = compare(x.planted[i], y.planted[i]); c != 0)
            return c;
    return std::strong_ordering::equal;
}

inline bool operator<(const Symbol& x, const Symbol& y) { return compare(x, y) < 0; }
inline bool operator==(const Symbol& x, const Symbol& y) { return compare(x, y) == 0; }

inline Symbol xi() { return Symbol{true, {}, {}}; }
inline Symbol one() { return Symbol{}; }
inline Symbol monomial(const Multi& k) { return Symbol{false, k, {}}; }
inline Symbol X(int i)
{
    Multi k{0, 0, 0, 0};
    k.at(static_cast<std::size_t>(i)) = 1;
    return monomial(k);
}

// I(tau); I(X^k) is zero, signalled by an exception since callers never form it
// on purpose.
inline Symbol I(const Symbol& tau)
{
    if (tau.is_monomial())
        throw std::invalid_argument("I(X^k) vanishes");
    return Symbol{false, {0, 0, 0, 0}, {tau}};
}

inline Symbol multiply(const Symbol& x, const Symbol& y)
{
    if (x.noise || y.noise)
        throw std::invalid_argument("Xi cannot appear in a product");
    Symbol s{false, x.mono + y.mono, x.planted};
    s.planted.insert(s.planted.end(), y.planted.begin(), y.planted.end());
    std::sort(s.planted.begin(), s.planted.end());
    return s;
}

inline Symbol power(const Symbol& x, int n)
{
    Symbol s = one();
    for (int i = 0; i < n; ++i)
        s = multiply(s, x);
    return s;
}

// Degree parameters; d = 3 Allen-Cahn by default, alpha_0 = -3/2 - kappa in d = 2.
struct Grading {
    Degree noise{Rat(-5, 2), Rat(-1)};
};

inline Degree degree(const Symbol& s, const Grading& g = {})
{
    if (s.noise)
        return g.noise;
    Degree d{Rat(weight(s.mono)), 0};
    for (const auto& c : s.planted)
        d = d + degree(c, g) + Degree{Rat(2), 0};
    return d;
}

// Named symbols of the tables.
inline Symbol RSI() { return I(xi()); }
inline Symbol RSV() { return power(RSI(), 2); }
inline Symbol RSW() { return power(RSI(), 3); }
inline Symbol RSIW() { return I(RSW()); }
inline Symbol RSY() { return I(RSV()); }
inline Symbol RSII() { return I(RSI()); }
inline Symbol RSWW() { return multiply(RSIW(), RSV()); }
inline Symbol RSVW() { return multiply(RSIW(), RSI()); }
inline Symbol RSWV() { return multiply(RSY(), RSV()); }
inline Symbol RSVV() { return multiply(RSY(), RSI()); }
inline Symbol RSWI() { return multiply(RSII(), RSV()); }
inline Symbol RSVI() { return multiply(RSII(), RSI()); }

inline const std::vector<std::pair<std::string, Symbol>>& aliases()
{
    static const std::vector<std::pair<std::string, Symbol>> a = {
        {"RSI", RSI()},   {"RSV", RSV()},   {"RSW", RSW()},   {"RSIW", RSIW()},
        {"RSY", RSY()},   {"RSII", RSII()}, {"RSWW", RSWW()}, {"RSVW", RSVW()},
        {"RSWV", RSWV()}, {"RSVV", RSVV()}, {"RSWI", RSWI()}, {"RSVI", RSVI()},
    };
    return a;
}

inline std::string to_string(const Symbol& s);

inline std::string monomial_string(const Multi& k)
{
    std::string out;
    for (int i = 0; i < 4; ++i) {
        if (k[i] == 0)
            continue;
        if (!out.empty())
            out += "*";
        out += "X" + std::to_string(i);
        if (k[i] > 1)
            out += "^" + std::to_string(k[i]);
    }
    return out;
}

inline std::string to_string(const Symbol& s)
{
    if (s.noise)
        return "Xi";
    if (s.is_monomial())
        return is_zero(s.mono) ? "1" : monomial_string(s.mono);
    std::string out;
    for (std::size_t i = 0; i < s.planted.size();) {
        std::size_t j = i;
        while (j < s.planted.size() && s.planted[j] == s.planted[i])
            ++j;
        if (!out.empty())
            out += "*";
        out += "I(" + to_string(s.planted[i]) + ")";
        if (j - i > 1)
            out += "^" + std::to_string(j - i);
        i = j;
    }
    if (!is_zero(s.mono))
        out += "*" + monomial_string(s.mono);
    return out;
}

// Alias such as RSWW when the symbol has one, else the ASCII form.
inline std::string display_name(const Symbol& s)
{
    for (const auto& [name, sym] : aliases())
        if (sym == s)
            return name;
    const Symbol bare{false, {0, 0, 0, 0}, s.planted};
    if (!s.noise && !s.planted.empty() && !is_zero(s.mono))
        for (const auto& [name, sym] : aliases())
            if (sym == bare)
                return name + "*" + monomial_string(s.mono);
    return to_string(s);
}

// Grammar: product := factor ('*' factor)*; factor := atom ['^' n];
// atom := 'Xi' | '1' | 'X'digit | 'I(' product ')' | alias.
class SymbolParser {
public:
    explicit SymbolParser(std::string text) : t_(std::move(text)) {}

    Symbol parse()
    {
        Symbol s = product();
        skip();
        if (p_ != t_.size())
            fail("trailing input");
        return s;
    }

private:
    [[noreturn]] void fail(const std::string& why)
    {
        throw std::invalid_argument("cannot parse symbol '" + t_ + "' at " + std::to_string(p_) + ": " + why);
    }
    void skip()
    {
        while (p_ < t_.size() && std::isspace(static_cast<unsigned char>(t_[p_])))
            ++p_;
    }
    bool eat(char c)
    {
        skip();
        if (p_ < t_.size() && t_[p_] == c) {
            ++p_;
            return true;
        }
        return false;
    }
    Symbol product()
    {
        Symbol s = factor();
        while (eat('*')) {
            Symbol f = factor();
            if (s.noise || f.noise)
                fail("Xi cannot be multiplied");
            s = multiply(s, f);
        }
        return s;
    }
    Symbol factor()
    {
        Symbol a = atom();
        if (eat('^')) {
            skip();
            std::size_t start = p_;
            while (p_ < t_.size() && std::isdigit(static_cast<unsigned char>(t_[p_])))
                ++p_;
            if (start == p_)
                fail("expected exponent");
            const int n = std::stoi(t_.substr(start, p_ - start));
            if (a.noise && n != 1)
                fail("Xi cannot be multiplied");
            if (!a.noise)
                a = power(a, n);
        }
        return a;
    }
    Symbol atom()
    {
        skip();
        if (t_.compare(p_, 2, "Xi") == 0) {
            p_ += 2;
            return xi();
        }
        if (eat('1'))
            return one();
        if (t_.compare(p_, 2, "I(") == 0) {
            p_ += 2;
            Symbol inner = product();
            if (!eat(')'))
                fail("expected ')'");
            if (inner.is_monomial())
                fail("I(X^k) vanishes");
            return I(inner);
        }
        if (p_ + 1 < t_.size() && t_[p_] == 'X' && t_[p_ + 1] >= '0' && t_[p_ + 1] <= '3') {
            const int i = t_[p_ + 1] - '0';
            p_ += 2;
            return X(i);
        }
        std::size_t start = p_;
        while (p_ < t_.size() && std::isalnum(static_cast<unsigned char>(t_[p_])))
            ++p_;
        const std::string word = t_.substr(start, p_ - start);
        for (const auto& [name, sym] : aliases())
            if (name == word)
                return sym;
        p_ = start;
        fail("unknown atom");
    }

    std::string t_;
    std::size_t p_ = 0;
};

inline Symbol parse_symbol(const std::string& text) { return SymbolParser(text).parse(); }

enum class Truncation {
    full,   // the whole closure up to the degree cap
    table,  // the curated subset listed in the notes' table of symbols
};

namespace detail {

inline bool pure_noise_power(const Symbol& s)
{
    if (s.noise || !is_zero(s.mono) || s.planted.empty())
        return false;
    return std::all_of(s.planted.begin(), s.planted.end(), [](const Symbol& c) { return c.noise; });
}

// Table rows have at most one planted factor besides I(Xi); that factor is
// I of a power of I(Xi); monomial factors only on symbols of degree <= 0 or alone.
inline bool in_table(const Symbol& s, const Grading& g)
{
    if (s.noise || s.is_monomial())
        return true;
    int others = 0;
    for (const auto& c : s.planted) {
        if (c.noise)
            continue;
        ++others;
        if (!pure_noise_power(c))
            return false;
    }
    if (others > 1)
        return false;
    if (!is_zero(s.mono) && degree(s, g) > Degree{})
        return false;
    return true;
}

} // namespace detail

// Closure of tau -> I(Xi + tau^3) + sum_k X^k up to degree `cap`. Returned
// symbols are sorted by degree, then canonically.
inline std::vector<Symbol> generate_fac(Degree cap, Truncation trunc = Truncation::full, const Grading& g = {})
{
    std::set<Symbol> F{xi()};
    std::vector<Multi> monos;
    for (const auto& k : multis_below(cap + Degree{Rat(3), 0}))
        monos.push_back(k);
    for (;;) {
        std::vector<Symbol> U;
        for (const auto& t : F)
            if (!t.is_monomial())
                U.push_back(I(t));
        std::set<Symbol> next{xi()};
        auto consider = [&](const std::vector<Symbol>& factors, bool allow_mono) {
            Symbol base = one();
            for (const auto& f : factors)
                base = multiply(base, f);
            for (const auto& k : monos) {
                if (!is_zero(k) && !allow_mono)
                    continue;
                Symbol s = base;
                s.mono = k;
                if (degree(s, g) <= cap)
                    next.insert(s);
            }
        };
        const std::size_t n = U.size();
        consider({}, true);
        for (std::size_t i = 0; i < n; ++i) {
            consider({U[i]}, true);
            for (std::size_t j = i; j < n; ++j) {
                consider({U[i], U[j]}, true);
                for (std::size_t l = j; l < n; ++l)
                    consider({U[i], U[j], U[l]}, false);
            }
        }
        if (next == F)
            break;
        F = std::move(next);
    }
    std::vector<Symbol> out;
    for (const auto& s : F)
        if (trunc == Truncation::full || detail::in_table(s, g))
            out.push_back(s);
    std::stable_sort(out.begin(), out.end(), [&](const Symbol& x, const Symbol& y) { return degree(x, g) < degree(y, g); });
    return out;
}

// Elements X^k prod_j J_{k_j} tau_j of T+.
struct PlusSymbol {
    Multi mono{0, 0, 0, 0};
    std::vector<std::pair<Multi, Symbol>> J;

    bool is_unit() const { return is_zero(mono) && J.empty(); }
};

inline std::strong_ordering compare(const PlusSymbol& x, const PlusSymbol& y)
{
    if (auto c = x.mono <=> y.mono; c != 0)
        return c;
    if (auto c = x.J.size() <=> y.J.size(); c != 0)
        return c;
    for (std::size_t i = 0; i < x.J.size(); ++i) {
        if (auto c = x.J[i].first <=> y.J[i].first; c != 0)
            return c;
        if (auto c = compare(x.J[i].second, y.J[i].second); c != 0)
            return c;
    }
    return std::strong_ordering::equal;
}

inline bool operator<(const PlusSymbol& x, const PlusSymbol& y) { return compare(x, y) < 0; }
inline bool operator==(const PlusSymbol& x, const PlusSymbol& y) { return compare(x, y) == 0; }

inline PlusSymbol plus_unit() { return {}; }
inline PlusSymbol plus_monomial(const Multi& k) { return PlusSymbol{k, {}}; }
inline PlusSymbol plus_J(const Multi& k, const Symbol& tau) { return PlusSymbol{{0, 0, 0, 0}, {{k, tau}}}; }

inline PlusSymbol multiply(const PlusSymbol& x, const PlusSymbol& y)
{
    PlusSymbol s{x.mono + y.mono, x.J};
    s.J.insert(s.J.end(), y.J.begin(), y.J.end());
    std::sort(s.J.begin(), s.J.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first)
            return a.first < b.first;
        return a.second < b.second;
    });
    return s;
}

inline Degree degree(const PlusSymbol& s, const Grading& g = {})
{
    Degree d{Rat(weight(s.mono)), 0};
    for (const auto& [k, tau] : s.J)
        d = d + degree(tau, g) + Degree{Rat(2 - weight(k)), 0};
    return d;
}

// J_k tau is admissible when |tau| + 2 - |k| > 0 and tau is not a monomial.
inline bool admissible_J(const Multi& k, const Symbol& tau, const Grading& g = {})
{
    return !tau.is_monomial() && (degree(tau, g) + Degree{Rat(2 - weight(k)), 0}).positive();
}

inline std::string multi_index_string(const Multi& k)
{
    if (is_zero(k))
        return "0";
    if (weight(k) == 1 && k[0] == 0)
        for (int i = 1; i < 4; ++i)
            if (k[i] == 1)
                return std::to_string(i);
    return "[" + std::to_string(k[0]) + "," + std::to_string(k[1]) + "," + std::to_string(k[2]) + "," +
        std::to_string(k[3]) + "]";
}

inline std::string to_string(const PlusSymbol& s)
{
    std::string out;
    if (!is_zero(s.mono))
        out = monomial_string(s.mono);
    for (const auto& [k, tau] : s.J) {
        if (!out.empty())
            out += "*";
        out += "J" + multi_index_string(k) + "(" + display_name(tau) + ")";
    }
    return out.empty() ? "1" : out;
}

using TensorKey = std::pair<Symbol, PlusSymbol>;

struct TensorLess {
    bool operator()(const TensorKey& x, const TensorKey& y) const
    {
        if (auto c = compare(x.first, y.first); c != 0)
            return c < 0;
        return compare(x.second, y.second) < 0;
    }
};

// Formal sum of Symbol (x) PlusSymbol with rational coefficients.
using TensorSum = std::map<TensorKey, Rat, TensorLess>;

inline void add_term(TensorSum& t, const Symbol& l, const PlusSymbol& r, const Rat& c)
{
    if (c == Rat(0))
        return;
    auto [it, inserted] = t.emplace(TensorKey{l, r}, c);
    if (!inserted) {
        it->second += c;
        if (it->second == Rat(0))
            t.erase(it);
    }
}

inline TensorSum tensor_multiply(const TensorSum& x, const TensorSum& y)
{
    TensorSum out;
    for (const auto& [kx, cx] : x)
        for (const auto& [ky, cy] : y)
            add_term(out, multiply(kx.first, ky.first), multiply(kx.second, ky.second), cx * cy);
    return out;
}

// Delta+(X^k) = sum_l binom(k,l) X^l (x) X^{k-l}.
inline TensorSum coproduct_monomial(const Multi& k)
{
    TensorSum t;
    for (const auto& l : submultis(k))
        add_term(t, monomial(l), plus_monomial(Multi{k[0] - l[0], k[1] - l[1], k[2] - l[2], k[3] - l[3]}),
                 binomial(k, l));
    return t;
}

inline TensorSum coproduct(const Symbol& s, const Grading& g = {});

// Delta+(I tau) = (I (x) Id) Delta+ tau + sum_{l,m} X^l/l! (x) X^m/m! J_{l+m} tau.
inline TensorSum coproduct_planted(const Symbol& tau, const Grading& g = {})
{
    TensorSum t;
    for (const auto& [key, c] : coproduct(tau, g))
        if (!key.first.is_monomial())
            add_term(t, I(key.first), key.second, c);
    const Degree room = degree(tau, g) + Degree{Rat(2), 0};
    for (const auto& n : multis_below(room))
        for (const auto& l : submultis(n)) {
            const Multi m{n[0] - l[0], n[1] - l[1], n[2] - l[2], n[3] - l[3]};
            add_term(t, monomial(l), multiply(plus_monomial(m), plus_J(n, tau)),
                     Rat(1, factorial(l) * factorial(m)));
        }
    return t;
}

inline TensorSum coproduct(const Symbol& s, const Grading& g)
{
    if (s.noise) {
        TensorSum t;
        add_term(t, s, plus_unit(), Rat(1));
        return t;
    }
    TensorSum t = coproduct_monomial(s.mono);
    for (const auto& c : s.planted)
        t = tensor_multiply(t, coproduct_planted(c, g));
    return t;
}

// T+ (x) T+ sums for the coproduct on T+.
using PlusKey = std::pair<PlusSymbol, PlusSymbol>;

struct PlusLess {
    bool operator()(const PlusKey& x, const PlusKey& y) const
    {
        if (auto c = compare(x.first, y.first); c != 0)
            return c < 0;
        return compare(x.second, y.second) < 0;
    }
};

using PlusTensor = std::map<PlusKey, Rat, PlusLess>;

inline void add_term(PlusTensor& t, const PlusSymbol& l, const PlusSymbol& r, const Rat& c)
{
    if (c == Rat(0))
        return;
    auto [it, inserted] = t.emplace(PlusKey{l, r}, c);
    if (!inserted) {
        it->second += c;
        if (it->second == Rat(0))
            t.erase(it);
    }
}

inline PlusTensor plus_multiply(const PlusTensor& x, const PlusTensor& y)
{
    PlusTensor out;
    for (const auto& [kx, cx] : x)
        for (const auto& [ky, cy] : y)
            add_term(out, multiply(kx.first, ky.first), multiply(kx.second, ky.second), cx * cy);
    return out;
}

inline Rat sign_of(const Multi& k) { return (k[0] + k[1] + k[2] + k[3]) % 2 == 0 ? Rat(1) : Rat(-1); }

// Delta+ J_n tau = sum_b (J_{n+b} (x) (-X)^b/b!) Delta+ tau + 1 (x) J_n tau.
// The recentred generators of coproduct_planted turn the usual X^l/l! (x) J_{n+l}
// sum into the single last term.
inline PlusTensor coproduct_J(const Multi& n, const Symbol& tau, const Grading& g = {})
{
    PlusTensor t;
    for (const auto& [key, c] : coproduct(tau, g)) {
        const Symbol& left = key.first;
        if (left.is_monomial())
            continue;
        const Degree room = degree(left, g) + Degree{Rat(2 - weight(n)), 0};
        for (const auto& b : multis_below(room))
            add_term(t, plus_J(n + b, left), multiply(plus_monomial(b), key.second),
                     c * sign_of(b) / Rat(factorial(b)));
    }
    if (admissible_J(n, tau, g))
        add_term(t, plus_unit(), plus_J(n, tau), Rat(1));
    return t;
}

inline PlusTensor coproduct_plus(const PlusSymbol& s, const Grading& g = {})
{
    PlusTensor t;
    for (const auto& l : submultis(s.mono))
        add_term(t, plus_monomial(l), plus_monomial(Multi{s.mono[0] - l[0], s.mono[1] - l[1], s.mono[2] - l[2], s.mono[3] - l[3]}),
                 binomial(s.mono, l));
    for (const auto& [k, tau] : s.J)
        t = plus_multiply(t, coproduct_J(k, tau, g));
    return t;
}

// A multiplicative functional on T+, fixed by its values on X_i and J_k tau.
class GroupElement {
public:
    GroupElement() = default;
    // Values on generators drawn on demand from a seeded stream of small integers.
    explicit GroupElement(std::uint64_t seed) : seed_(seed), random_(true) {}

    void set_X(int i, Rat v) { x_[static_cast<std::size_t>(i)] = v; }
    void set_J(const Multi& k, const Symbol& tau, Rat v) { j_[{k, tau}] = v; }

    Rat on_X(int i) const { return random_ && !x_set(i) ? draw("X" + std::to_string(i)) : x_[static_cast<std::size_t>(i)]; }
    Rat on_J(const Multi& k, const Symbol& tau) const
    {
        auto it = j_.find({k, tau});
        if (it != j_.end())
            return it->second;
        return random_ ? draw("J" + multi_index_string(k) + to_string(tau)) : Rat(0);
    }

    Rat operator()(const PlusSymbol& s) const
    {
        Rat v(1);
        for (int i = 0; i < 4; ++i)
            for (int e = 0; e < s.mono[i]; ++e)
                v *= on_X(i);
        for (const auto& [k, tau] : s.J)
            v *= on_J(k, tau);
        return v;
    }

private:
    struct JLess {
        bool operator()(const std::pair<Multi, Symbol>& a, const std::pair<Multi, Symbol>& b) const
        {
            if (a.first != b.first)
                return a.first < b.first;
            return a.second < b.second;
        }
    };
    bool x_set(int i) const { return x_[static_cast<std::size_t>(i)] != Rat(0); }
    Rat draw(const std::string& key) const
    {
        std::uint64_t h = seed_ ^ 0x9e3779b97f4a7c15ULL;
        for (unsigned char c : key)
            h = (h ^ c) * 0x100000001b3ULL;
        std::mt19937_64 rng(h);
        std::uniform_int_distribution<int> num(-4, 4), den(1, 3);
        return Rat(num(rng), den(rng));
    }

    std::array<Rat, 4> x_{};
    std::map<std::pair<Multi, Symbol>, Rat, JLess> j_;
    std::uint64_t seed_ = 0;
    bool random_ = false;
};

using SymbolSum = std::map<Symbol, Rat>;

inline void add_term(SymbolSum& s, const Symbol& x, const Rat& c)
{
    if (c == Rat(0))
        return;
    auto [it, inserted] = s.emplace(x, c);
    if (!inserted) {
        it->second += c;
        if (it->second == Rat(0))
            s.erase(it);
    }
}

// Gamma_g tau = (Id (x) g) Delta+ tau.
inline SymbolSum gamma_action(const GroupElement& g, const Symbol& tau, const Grading& gr = {})
{
    SymbolSum out;
    for (const auto& [key, c] : coproduct(tau, gr))
        add_term(out, key.first, c * g(key.second));
    return out;
}

inline SymbolSum gamma_action(const GroupElement& g, const SymbolSum& v, const Grading& gr = {})
{
    SymbolSum out;
    for (const auto& [s, c] : v)
        for (const auto& [t, d] : gamma_action(g, s, gr))
            add_term(out, t, c * d);
    return out;
}

// (g h)(s) = (g (x) h) Delta+ s on T+.
inline Rat convolve(const GroupElement& g, const GroupElement& h, const PlusSymbol& s, const Grading& gr = {})
{
    Rat v(0);
    for (const auto& [key, c] : coproduct_plus(s, gr))
        v += c * g(key.first) * h(key.second);
    return v;
}

// Gamma_{g h} tau with the product functional evaluated through Delta+ on T+.
inline SymbolSum gamma_action_product(const GroupElement& g, const GroupElement& h, const Symbol& tau,
                                      const Grading& gr = {})
{
    SymbolSum out;
    for (const auto& [key, c] : coproduct(tau, gr))
        add_term(out, key.first, c * convolve(g, h, key.second, gr));
    return out;
}

// Polynomials in the constants c1, c2: exponent pair -> coefficient.
using Poly = std::map<std::pair<int, int>, Rat>;
using RenormSum = std::map<Symbol, Poly>;

inline std::string to_string(const Poly& p)
{
    std::string out;
    for (const auto& [e, c] : p) {
        std::string mon;
        auto pw = [](const char* name, int n) {
            return n == 0 ? std::string() : std::string(name) + (n > 1 ? "^" + std::to_string(n) : "");
        };
        mon = pw("c1", e.first);
        const std::string m2 = pw("c2", e.second);
        if (!m2.empty())
            mon += (mon.empty() ? "" : "*") + m2;
        std::string coef = to_string(c < Rat(0) ? -c : c);
        std::string term = mon.empty() ? coef : (coef == "1" ? mon : coef + "*" + mon);
        out += out.empty() ? (c < Rat(0) ? "-" : "") + term : (c < Rat(0) ? " - " : " + ") + term;
    }
    return out.empty() ? "0" : out;
}

namespace detail {

inline void push(SymbolSum& out, const Symbol& s, const Rat& c) { add_term(out, s, c); }

// Extractions at this node and recursively inside planted arguments. The
// callback returns the rewritten node, or nothing when the pattern is absent.
template <class AtNode>
void extract(const Symbol& s, bool inside_I, const AtNode& at_node, SymbolSum& out)
{
    if (s.noise)
        return;
    at_node(s, inside_I, out);
    for (std::size_t p = 0; p < s.planted.size(); ++p) {
        SymbolSum sub;
        extract(s.planted[p], true, at_node, sub);
        for (const auto& [child, c] : sub) {
            Symbol t = s;
            t.planted[p] = child;
            std::sort(t.planted.begin(), t.planted.end());
            push(out, t, c);
        }
    }
}

inline std::vector<std::size_t> noise_children(const Symbol& s)
{
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < s.planted.size(); ++i)
        if (s.planted[i].noise)
            idx.push_back(i);
    return idx;
}

inline Symbol without(const Symbol& s, std::vector<std::size_t> drop)
{
    std::sort(drop.begin(), drop.end());
    Symbol t{false, s.mono, {}};
    for (std::size_t i = 0; i < s.planted.size(); ++i)
        if (!std::binary_search(drop.begin(), drop.end(), i))
            t.planted.push_back(s.planted[i]);
    return t;
}

} // namespace detail

// L1 replaces a pair of I(Xi) factors at one node by 1, in every possible way.
inline SymbolSum apply_L1(const Symbol& s)
{
    SymbolSum out;
    auto at_node = [](const Symbol& n, bool inside_I, SymbolSum& o) {
        const auto idx = detail::noise_children(n);
        for (std::size_t a = 0; a < idx.size(); ++a)
            for (std::size_t b = a + 1; b < idx.size(); ++b) {
                Symbol t = detail::without(n, {idx[a], idx[b]});
                if (inside_I && t.is_monomial())
                    continue;
                detail::push(o, t, Rat(1));
            }
    };
    detail::extract(s, false, at_node, out);
    return out;
}

// L2 replaces the pattern I(I(Xi)^2) I(Xi)^2, rooted at a node with two I(Xi)
// factors and a planted factor holding two I(Xi), by 1; what remains of the
// planted factor is attached to the node.
inline SymbolSum apply_L2(const Symbol& s)
{
    SymbolSum out;
    auto at_node = [](const Symbol& n, bool inside_I, SymbolSum& o) {
        const auto idx = detail::noise_children(n);
        for (std::size_t a = 0; a < idx.size(); ++a)
            for (std::size_t b = a + 1; b < idx.size(); ++b)
                for (std::size_t p = 0; p < n.planted.size(); ++p) {
                    const Symbol& c = n.planted[p];
                    if (c.noise)
                        continue;
                    const auto cidx = detail::noise_children(c);
                    for (std::size_t u = 0; u < cidx.size(); ++u)
                        for (std::size_t v = u + 1; v < cidx.size(); ++v) {
                            Symbol t = detail::without(n, {idx[a], idx[b], p});
                            const Symbol rest = detail::without(c, {cidx[u], cidx[v]});
                            t = multiply(t, rest);
                            if (inside_I && t.is_monomial())
                                continue;
                            detail::push(o, t, Rat(1));
                        }
                }
    };
    detail::extract(s, false, at_node, out);
    return out;
}

// M = exp(-c1 L1 - c2 L2) applied to s; the series stops once no pattern is left.
inline RenormSum renormalize(const Symbol& s)
{
    RenormSum total;
    RenormSum term{{s, Poly{{{0, 0}, Rat(1)}}}};
    for (int n = 0; !term.empty(); ++n) {
        for (const auto& [sym, p] : term)
            for (const auto& [e, c] : p) {
                auto& slot = total[sym][e];
                slot += c;
                if (slot == Rat(0))
                    total[sym].erase(e);
            }
        RenormSum next;
        for (const auto& [sym, p] : term) {
            auto apply = [&](const SymbolSum& img, std::pair<int, int> shift) {
                for (const auto& [t, m] : img)
                    for (const auto& [e, c] : p) {
                        auto& slot = next[t][{e.first + shift.first, e.second + shift.second}];
                        slot += -c * m / Rat(n + 1);
                    }
            };
            apply(apply_L1(sym), {1, 0});
            apply(apply_L2(sym), {0, 1});
        }
        for (auto it = next.begin(); it != next.end();) {
            for (auto jt = it->second.begin(); jt != it->second.end();)
                jt = jt->second == Rat(0) ? it->second.erase(jt) : std::next(jt);
            it = it->second.empty() ? next.erase(it) : std::next(it);
        }
        term = std::move(next);
    }
    for (auto it = total.begin(); it != total.end();)
        it = it->second.empty() ? total.erase(it) : std::next(it);
    return total;
}

} // namespace sspde::rs
