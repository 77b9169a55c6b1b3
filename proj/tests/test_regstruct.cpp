#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "sspde/regstruct.hpp"

using namespace sspde::rs;

namespace {

const Degree cap32{Rat(3, 2), Rat(0)};

Multi e(int i)
{
    Multi k{0, 0, 0, 0};
    k[static_cast<std::size_t>(i)] = 1;
    return k;
}

const Multi zero{0, 0, 0, 0};

PlusSymbol J(const Multi& k, const Symbol& tau) { return plus_J(k, tau); }
PlusSymbol XJ(int i, const Symbol& tau) { return multiply(plus_monomial(e(i)), plus_J(e(i), tau)); }

TensorSum tensor(std::initializer_list<std::pair<Symbol, PlusSymbol>> terms)
{
    TensorSum t;
    for (const auto& [l, r] : terms)
        add_term(t, l, r, Rat(1));
    return t;
}

Symbol with_X(const Symbol& s, int i) { return multiply(s, X(i)); }

// Table of symbols of degree at most 3/2 with their degrees a + b kappa.
struct Row {
    const char* symbol;
    Rat a, b;
};

const std::vector<Row>& table_rows()
{
    static const std::vector<Row> rows = {
        {"Xi", Rat(-5, 2), Rat(-1)},    {"RSW", Rat(-3, 2), Rat(-3)},     {"RSV", Rat(-1), Rat(-2)},
        {"RSWW", Rat(-1, 2), Rat(-5)},  {"RSI", Rat(-1, 2), Rat(-1)},     {"RSVW", Rat(0), Rat(-4)},
        {"RSWV", Rat(0), Rat(-4)},      {"RSV*X1", Rat(0), Rat(-2)},      {"RSV*X2", Rat(0), Rat(-2)},
        {"RSV*X3", Rat(0), Rat(-2)},    {"1", Rat(0), Rat(0)},            {"RSIW", Rat(1, 2), Rat(-3)},
        {"RSVV", Rat(1, 2), Rat(-3)},   {"RSWI", Rat(1, 2), Rat(-3)},     {"RSY", Rat(1), Rat(-2)},
        {"RSVI", Rat(1), Rat(-2)},      {"X1", Rat(1), Rat(0)},           {"X2", Rat(1), Rat(0)},
        {"X3", Rat(1), Rat(0)},         {"RSII", Rat(3, 2), Rat(-1)},
    };
    return rows;
}

// Symbols of the full closure up to degree 3/2 that the table omits.
const std::vector<std::string>& closure_extras()
{
    static const std::vector<std::string> extras = {
        "I(Xi)^2*I(I(Xi)^2*I(I(Xi)^3))", "I(Xi)*I(I(Xi)^3)^2", "I(Xi)*X3", "I(Xi)*X2", "I(Xi)*X1",
        "I(Xi)*I(I(Xi)^2*I(I(Xi)^3))", "I(I(Xi)^3)^2", "I(Xi)^2*I(I(Xi)*I(I(Xi)^3))",
        "I(Xi)^2*I(I(Xi)^2*I(I(Xi)^2))", "I(Xi)*I(I(Xi)^2)*I(I(Xi)^3)", "I(Xi)^2*I(I(Xi)^2*X3)",
        "I(Xi)^2*I(I(Xi)^2*X2)", "I(Xi)^2*I(I(Xi)^2*X1)", "I(Xi)*I(I(Xi)^3)*X3", "I(Xi)*I(I(Xi)^3)*X2",
        "I(Xi)*I(I(Xi)^3)*X1", "I(Xi)^2*X3^2", "I(Xi)^2*X2*X3", "I(Xi)^2*X2^2", "I(Xi)^2*X1*X3",
        "I(Xi)^2*X1*X2", "I(Xi)^2*X1^2", "I(Xi)^2*X0", "I(Xi)^2*I(I(Xi)^2*I(I(Xi)^2*I(I(Xi)^3)))",
        "I(Xi)^2*I(I(Xi)*I(I(Xi)^3)^2)", "I(Xi)*I(I(Xi)^3)*I(I(Xi)^2*I(I(Xi)^3))", "I(I(Xi)^3)^3",
        "I(I(Xi)^2*I(I(Xi)^3))", "I(Xi)*I(I(Xi)*I(I(Xi)^3))", "I(Xi)*I(I(Xi)^2*I(I(Xi)^2))",
        "I(I(Xi)^2)*I(I(Xi)^3)", "I(Xi)^2*I(I(I(Xi)^3))", "I(Xi)^2*I(I(Xi)*I(I(Xi)^2))",
        "I(Xi)^2*I(I(Xi)^2*I(I(Xi)))", "I(Xi)*I(I(Xi))*I(I(Xi)^3)", "I(Xi)*I(I(Xi)^2)^2",
        "I(Xi)*I(I(Xi)^2*X3)", "I(Xi)*I(I(Xi)^2*X2)", "I(Xi)*I(I(Xi)^2*X1)", "I(Xi)^2*I(I(Xi)*X3)",
        "I(Xi)^2*I(I(Xi)*X2)", "I(Xi)^2*I(I(Xi)*X1)", "I(I(Xi)^3)*X3", "I(Xi)*I(I(Xi)^2)*X3", "I(I(Xi)^3)*X2",
        "I(Xi)*I(I(Xi)^2)*X2", "I(I(Xi)^3)*X1", "I(Xi)*I(I(Xi)^2)*X1", "I(Xi)*X3^2", "I(Xi)*X2*X3",
        "I(Xi)*X2^2", "I(Xi)*X1*X3", "I(Xi)*X1*X2", "I(Xi)*X1^2", "I(Xi)*X0",
    };
    return extras;
}

struct Tri {
    Symbol a;
    PlusSymbol b, c;
};

bool operator<(const Tri& x, const Tri& y)
{
    if (auto r = compare(x.a, y.a); r != 0)
        return r < 0;
    if (auto r = compare(x.b, y.b); r != 0)
        return r < 0;
    return compare(x.c, y.c) < 0;
}

using TriSum = std::map<Tri, Rat>;

void clean(TriSum& m)
{
    for (auto it = m.begin(); it != m.end();)
        it = it->second == Rat(0) ? m.erase(it) : std::next(it);
}

bool same(const TriSum& x, const TriSum& y)
{
    if (x.size() != y.size())
        return false;
    for (const auto& [k, v] : x) {
        auto it = y.find(k);
        if (it == y.end() || it->second != v)
            return false;
    }
    return true;
}

Poly poly(std::initializer_list<std::tuple<int, int, Rat>> terms)
{
    Poly p;
    for (const auto& [a, b, c] : terms)
        p[{a, b}] = c;
    return p;
}

} // namespace

TEST(Degree, TableExamples)
{
    EXPECT_EQ(degree(RSW()), (Degree{Rat(-3, 2), Rat(-3)}));
    EXPECT_EQ(degree(X(2)), (Degree{Rat(1), Rat(0)}));
    EXPECT_EQ(degree(X(0)), (Degree{Rat(2), Rat(0)}));
    EXPECT_EQ(degree(RSWW()), (Degree{Rat(-1, 2), Rat(-5)}));
    EXPECT_EQ(degree(I(RSW())), (degree(RSW()) + Degree{Rat(2), Rat(0)}));
    EXPECT_EQ(degree(multiply(RSV(), RSY())), degree(RSV()) + degree(RSY()));
    EXPECT_EQ(to_string(degree(RSW())), "-3/2 - 3k");
}

TEST(Degree, KappaOrdering)
{
    EXPECT_LT((Degree{Rat(0), Rat(-4)}), (Degree{Rat(0), Rat(0)}));
    EXPECT_LT((Degree{Rat(-1, 2), Rat(5)}), (Degree{Rat(0), Rat(-100)}));
    EXPECT_FALSE((Degree{Rat(0), Rat(-1)}).positive());
}

TEST(Symbols, MonomialIntegrationVanishes)
{
    EXPECT_THROW(I(X(1)), std::invalid_argument);
    EXPECT_THROW(I(one()), std::invalid_argument);
    EXPECT_THROW(multiply(xi(), RSI()), std::invalid_argument);
}

TEST(Symbols, ProductsAreCanonical)
{
    EXPECT_EQ(multiply(RSI(), RSY()), multiply(RSY(), RSI()));
    EXPECT_EQ(multiply(multiply(RSI(), X(1)), RSI()), multiply(RSV(), X(1)));
    EXPECT_NE(RSVW(), RSWV());
}

TEST(Generation, TableReproduction)
{
    const auto tab = generate_fac(cap32, Truncation::table);
    ASSERT_EQ(tab.size(), table_rows().size());
    std::set<Symbol> got(tab.begin(), tab.end());
    for (const auto& r : table_rows()) {
        const Symbol s = parse_symbol(r.symbol);
        EXPECT_TRUE(got.count(s)) << r.symbol;
        EXPECT_EQ(degree(s), (Degree{r.a, r.b})) << r.symbol;
    }
    for (std::size_t i = 1; i < tab.size(); ++i)
        EXPECT_LE(degree(tab[i - 1]), degree(tab[i]));
}

TEST(Generation, LowDegreeSet)
{
    const auto low = generate_fac(Degree{Rat(-1, 2), Rat(0)});
    const std::set<Symbol> got(low.begin(), low.end());
    const std::set<Symbol> want{xi(), RSW(), RSV(), RSWW(), RSI()};
    EXPECT_EQ(got, want);
}

TEST(Generation, FullClosureIsFrozen)
{
    const auto full = generate_fac(cap32);
    const auto tab = generate_fac(cap32, Truncation::table);
    EXPECT_EQ(full.size(), tab.size() + closure_extras().size());
    std::set<Symbol> expected(tab.begin(), tab.end());
    for (const auto& s : closure_extras())
        expected.insert(parse_symbol(s));
    EXPECT_EQ(std::set<Symbol>(full.begin(), full.end()), expected);
    for (const auto& s : full) {
        EXPECT_LE(degree(s), cap32);
        EXPECT_LE(degree(xi()), degree(s));
    }
    EXPECT_EQ(full.front(), xi());
}

TEST(Generation, ClosedUnderTheGeneratingMap)
{
    const auto full = generate_fac(cap32);
    const std::set<Symbol> F(full.begin(), full.end());
    std::vector<Symbol> U;
    for (const auto& t : F)
        if (!t.is_monomial())
            U.push_back(I(t));
    for (std::size_t i = 0; i < U.size(); ++i)
        for (std::size_t j = i; j < U.size(); ++j)
            for (std::size_t l = j; l < U.size(); ++l) {
                const Symbol s = multiply(multiply(U[i], U[j]), U[l]);
                if (degree(s) <= cap32) {
                    EXPECT_TRUE(F.count(s)) << to_string(s);
                }
            }
}

TEST(Generation, TwoDimensionalGrading)
{
    const Grading g2{Degree{Rat(-3, 2), Rat(-1)}};
    EXPECT_EQ(degree(RSI(), g2), (Degree{Rat(1, 2), Rat(-1)}));
    EXPECT_EQ(degree(RSW(), g2), (Degree{Rat(3, 2), Rat(-3)}));
    const auto s = generate_fac(Degree{Rat(0), Rat(0)}, Truncation::full, g2);
    EXPECT_EQ(std::set<Symbol>(s.begin(), s.end()), (std::set<Symbol>{xi(), one()}));
    const auto t = generate_fac(Degree{Rat(1), Rat(0)}, Truncation::full, g2);
    EXPECT_EQ(std::set<Symbol>(t.begin(), t.end()), (std::set<Symbol>{xi(), one(), RSI(), RSV(), X(1), X(2), X(3)}));
}

TEST(Coproduct, TableTwoRows)
{
    const PlusSymbol u = plus_unit();
    EXPECT_EQ(coproduct(xi()), tensor({{xi(), u}}));
    EXPECT_EQ(coproduct(RSV()), tensor({{RSV(), u}}));
    EXPECT_EQ(coproduct(X(2)), tensor({{X(2), u}, {one(), plus_monomial(e(2))}}));
    EXPECT_EQ(coproduct(RSWW()), tensor({{RSWW(), u}, {RSV(), J(zero, RSW())}}));
    EXPECT_EQ(coproduct(RSVW()), tensor({{RSVW(), u}, {RSI(), J(zero, RSW())}}));
    EXPECT_EQ(coproduct(RSWV()), tensor({{RSWV(), u}, {RSV(), J(zero, RSV())}}));
    for (int i = 1; i <= 3; ++i)
        EXPECT_EQ(coproduct(with_X(RSV(), i)), tensor({{with_X(RSV(), i), u}, {RSV(), plus_monomial(e(i))}}));
    EXPECT_EQ(coproduct(RSIW()), tensor({{RSIW(), u}, {one(), J(zero, RSW())}}));
    EXPECT_EQ(coproduct(RSVV()), tensor({{RSVV(), u}, {RSI(), J(zero, RSV())}}));
    EXPECT_EQ(coproduct(RSY()), tensor({{RSY(), u}, {one(), J(zero, RSV())}}));

    auto first_order = [&](const Symbol& tau, const Symbol& base) {
        TensorSum t = tensor({{tau, u}, {base, J(zero, RSI())}});
        for (int i = 1; i <= 3; ++i) {
            add_term(t, multiply(base, X(i)), J(e(i), RSI()), Rat(1));
            add_term(t, base, XJ(i, RSI()), Rat(1));
        }
        return t;
    };
    EXPECT_EQ(coproduct(RSWI()), first_order(RSWI(), RSV()));
    EXPECT_EQ(coproduct(RSVI()), first_order(RSVI(), RSI()));
    EXPECT_EQ(coproduct(RSII()), first_order(RSII(), one()));
}

TEST(Coproduct, AdmissibilityOfJ)
{
    EXPECT_TRUE(admissible_J(zero, RSW()));
    EXPECT_FALSE(admissible_J(e(1), RSW()));  // -3/2 + 2 - 1 < 0
    EXPECT_TRUE(admissible_J(e(1), RSI()));
    EXPECT_FALSE(admissible_J(e(0), RSI()));   // time derivative has weight 2
    EXPECT_FALSE(admissible_J(zero, xi()));
}

TEST(Coproduct, DegreeBookkeeping)
{
    for (const auto& s : generate_fac(cap32))
        for (const auto& [key, c] : coproduct(s)) {
            EXPECT_NE(c, Rat(0));
            EXPECT_EQ(degree(key.first) + degree(key.second), degree(s)) << to_string(s);
            for (const auto& [k, tau] : key.second.J)
                EXPECT_TRUE((degree(tau) + Degree{Rat(2 - weight(k)), Rat(0)}).positive());
        }
}

TEST(Coproduct, JIndicesOnTableSymbols)
{
    for (const auto& s : generate_fac(cap32, Truncation::table))
        for (const auto& [key, c] : coproduct(s))
            for (const auto& [k, tau] : key.second.J)
                EXPECT_TRUE(k == zero || k == e(1) || k == e(2) || k == e(3))
                    << to_string(s) << " -> J" << multi_index_string(k);
}

TEST(Coproduct, SecondOrderJIndicesInFullClosure)
{
    // Only RSV * I(tau) with |tau| = 1/2 - n kappa admits J_k tau with |k| = 2.
    const std::set<Symbol> expected{
        parse_symbol("I(Xi)^2*I(I(Xi)^2*I(I(Xi)^2*I(I(Xi)^3)))"), parse_symbol("I(Xi)^2*I(I(Xi)*I(I(Xi)^3)^2)"),
        parse_symbol("I(Xi)^2*I(I(I(Xi)^3))"),  parse_symbol("I(Xi)^2*I(I(Xi)*I(I(Xi)^2))"),
        parse_symbol("I(Xi)^2*I(I(Xi)^2*I(I(Xi)))"), parse_symbol("I(Xi)^2*I(I(Xi)*X1)"),
        parse_symbol("I(Xi)^2*I(I(Xi)*X2)"),   parse_symbol("I(Xi)^2*I(I(Xi)*X3)"),
    };
    std::set<Symbol> found;
    for (const auto& s : generate_fac(cap32))
        for (const auto& [key, c] : coproduct(s))
            for (const auto& [k, tau] : key.second.J) {
                EXPECT_LE(weight(k), 2);
                if (weight(k) == 2)
                    found.insert(s);
            }
    EXPECT_EQ(found, expected);
}

TEST(Coproduct, Coassociativity)
{
    int checked = 0;
    for (const auto& s : generate_fac(cap32)) {
        TriSum L, R;
        for (const auto& [k, c] : coproduct(s)) {
            for (const auto& [k2, c2] : coproduct(k.first))
                L[{k2.first, k2.second, k.second}] += c * c2;
            for (const auto& [k2, c2] : coproduct_plus(k.second))
                R[{k.first, k2.first, k2.second}] += c * c2;
        }
        clean(L);
        clean(R);
        EXPECT_TRUE(same(L, R)) << to_string(s);
        ++checked;
    }
    EXPECT_EQ(checked, 75);
}

TEST(StructureGroup, NoiseInvariantAndTableExamples)
{
    GroupElement g;
    g.set_J(zero, RSW(), Rat(7, 3));
    g.set_J(zero, RSI(), Rat(-2));
    g.set_J(zero, RSV(), Rat(5));
    g.set_X(1, Rat(3));
    g.set_X(2, Rat(-1, 2));
    g.set_J(e(1), RSI(), Rat(4));
    g.set_J(e(3), RSI(), Rat(1, 5));
    EXPECT_EQ(gamma_action(g, xi()), (SymbolSum{{xi(), Rat(1)}}));
    EXPECT_EQ(gamma_action(GroupElement(11), xi()), (SymbolSum{{xi(), Rat(1)}}));
    EXPECT_EQ(gamma_action(g, RSIW()), (SymbolSum{{RSIW(), Rat(1)}, {one(), Rat(7, 3)}}));
    EXPECT_EQ(gamma_action(g, RSWW()), (SymbolSum{{RSWW(), Rat(1)}, {RSV(), Rat(7, 3)}}));
    EXPECT_EQ(gamma_action(g, RSVV()), (SymbolSum{{RSVV(), Rat(1)}, {RSI(), Rat(5)}}));
    EXPECT_EQ(gamma_action(g, X(1)), (SymbolSum{{X(1), Rat(1)}, {one(), Rat(3)}}));
    EXPECT_EQ(gamma_action(g, with_X(RSV(), 2)), (SymbolSum{{with_X(RSV(), 2), Rat(1)}, {RSV(), Rat(-1, 2)}}));
    // RSWI + RSV g(J0 RSI) + RSV X_i g(J_i RSI) + RSV g(X_i) g(J_i RSI).
    const SymbolSum want{{RSWI(), Rat(1)},
                         {RSV(), Rat(-2) + Rat(3) * Rat(4) + Rat(0)},
                         {with_X(RSV(), 1), Rat(4)},
                         {with_X(RSV(), 3), Rat(1, 5)}};
    EXPECT_EQ(gamma_action(g, RSWI()), want);
}

TEST(StructureGroup, LowersDegree)
{
    const GroupElement g(5);
    for (const auto& s : generate_fac(cap32))
        for (const auto& [t, c] : gamma_action(g, s)) {
            if (t == s) {
                EXPECT_EQ(c, Rat(1));
                continue;
            }
            EXPECT_LT(degree(t), degree(s)) << to_string(s) << " -> " << to_string(t);
        }
}

TEST(StructureGroup, GroupLaw)
{
    for (std::uint64_t seed : {1, 2, 3}) {
        const GroupElement g(seed), h(seed + 100);
        for (const auto& s : generate_fac(cap32)) {
            const auto lhs = gamma_action(g, gamma_action(h, SymbolSum{{s, Rat(1)}}));
            EXPECT_EQ(lhs, gamma_action_product(g, h, s)) << to_string(s);
        }
    }
}

TEST(StructureGroup, UnitFunctionalActsTrivially)
{
    const GroupElement zero_g;
    for (const auto& s : generate_fac(cap32))
        EXPECT_EQ(gamma_action(zero_g, s), (SymbolSum{{s, Rat(1)}})) << to_string(s);
}

TEST(Renormalization, EquationLines)
{
    EXPECT_EQ(renormalize(RSV()), (RenormSum{{RSV(), poly({{0, 0, Rat(1)}})}, {one(), poly({{1, 0, Rat(-1)}})}}));
    EXPECT_EQ(renormalize(RSW()), (RenormSum{{RSW(), poly({{0, 0, Rat(1)}})}, {RSI(), poly({{1, 0, Rat(-3)}})}}));
    EXPECT_EQ(renormalize(RSWW()), (RenormSum{{RSWW(), poly({{0, 0, Rat(1)}})},
                                              {RSWI(), poly({{1, 0, Rat(-3)}})},
                                              {RSIW(), poly({{1, 0, Rat(-1)}})},
                                              {RSII(), poly({{2, 0, Rat(3)}})},
                                              {RSI(), poly({{0, 1, Rat(-3)}})}}));
    EXPECT_EQ(renormalize(RSVW()), (RenormSum{{RSVW(), poly({{0, 0, Rat(1)}})}, {RSVI(), poly({{1, 0, Rat(-3)}})}}));
    EXPECT_EQ(renormalize(RSWV()), (RenormSum{{RSWV(), poly({{0, 0, Rat(1)}})},
                                              {RSY(), poly({{1, 0, Rat(-1)}})},
                                              {one(), poly({{0, 1, Rat(-1)}})}}));
    EXPECT_EQ(renormalize(RSI()), (RenormSum{{RSI(), poly({{0, 0, Rat(1)}})}}));
    EXPECT_EQ(renormalize(xi()), (RenormSum{{xi(), poly({{0, 0, Rat(1)}})}}));
}

TEST(Renormalization, SubstitutionMultiplicities)
{
    EXPECT_EQ(apply_L1(RSW()), (SymbolSum{{RSI(), Rat(3)}}));
    EXPECT_EQ(apply_L1(RSV()), (SymbolSum{{one(), Rat(1)}}));
    EXPECT_TRUE(apply_L1(RSY()).empty());  // I(1) is not formed
    EXPECT_EQ(apply_L2(RSWV()), (SymbolSum{{one(), Rat(1)}}));
    EXPECT_EQ(apply_L2(RSWW()), (SymbolSum{{RSI(), Rat(3)}}));
    EXPECT_EQ(to_string(renormalize(RSWW())[RSII()]), "3*c1^2");
}

TEST(Renormalization, CorrectionsRaiseDegree)
{
    for (const auto& s : generate_fac(cap32))
        for (const auto& [t, p] : renormalize(s)) {
            if (t == s) {
                EXPECT_EQ(p, poly({{0, 0, Rat(1)}}));
                continue;
            }
            EXPECT_GT(degree(t), degree(s)) << to_string(s) << " -> " << to_string(t);
        }
}

TEST(Parser, RoundTripAndAliases)
{
    for (const auto& s : generate_fac(cap32)) {
        EXPECT_EQ(parse_symbol(to_string(s)), s) << to_string(s);
        EXPECT_EQ(parse_symbol(display_name(s)), s) << display_name(s);
    }
    EXPECT_EQ(parse_symbol("I(Xi)^3"), RSW());
    EXPECT_EQ(parse_symbol(" I( I(Xi)^3 ) * RSV "), RSWW());
    EXPECT_EQ(parse_symbol("X1^2*X0"), monomial(Multi{1, 2, 0, 0}));
    EXPECT_EQ(parse_symbol("1"), one());
    EXPECT_EQ(display_name(RSWW()), "RSWW");
    EXPECT_EQ(display_name(with_X(RSV(), 3)), "RSV*X3");
}

TEST(Parser, Errors)
{
    for (const char* bad : {"", "I(", "I(Xi", "Xi*Xi", "Xi^2", "X7", "I(X1)", "I(1)", "Foo", "RSV^", "RSV)", "I(Xi)**X1"})
        EXPECT_THROW(parse_symbol(bad), std::invalid_argument) << bad;
}
