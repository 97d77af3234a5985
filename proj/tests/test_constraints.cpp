#include <catch2/catch_amalgamated.hpp>
#include <nomcheck/constraints.hpp>
#include "support.hpp"

using namespace nomcheck;
using ts::mini_fixture;

namespace {

struct cfix {
    mini_fixture fx;
    name_reach nr;
    cstate cs;
    cfix() : nr{&fx.p.sig, {}}, cs{&fx.p.st, &fx.p.sig, &nr} {}
    uint32_t var(const char* n) { return fx.p.st.fresh_var(ty_base(fx.d), n); }
    uint32_t nvar(const char* n) { return fx.p.st.fresh_var(ty_name(fx.nm), n); }
};

// Independent ground alpha-equivalence oracle (no solver machinery).
bool g_freshp(uint32_t a, const term& t) {
    switch (t->k) {
        case tkind::name: return t->id != a;
        case tkind::unit: return true;
        case tkind::pair: return g_freshp(a, t->a) && g_freshp(a, t->b);
        case tkind::abs:  return t->id == a || g_freshp(a, t->a);
        case tkind::app:  return g_freshp(a, t->a);
        default: return false;
    }
}
bool g_alpha(const term& s, const term& t) {
    if (s->k != t->k) return false;
    switch (s->k) {
        case tkind::name: return s->id == t->id;
        case tkind::unit: return true;
        case tkind::pair: return g_alpha(s->a, t->a) && g_alpha(s->b, t->b);
        case tkind::app:  return s->f == t->f && g_alpha(s->a, t->a);
        case tkind::abs:
            if (s->id == t->id) return g_alpha(s->a, t->a);
            return g_freshp(s->id, t->a) && g_alpha(s->a, swap_names(s->id, t->id, t->a));
        default: return false;
    }
}

} // namespace

TEST_CASE("ground unification decides alpha-equivalence (size <= 3 oracle)") {
    cfix f;
    auto terms = ts::ground_terms(f.fx.p, ty_base(f.fx.d), 3, {f.fx.a, f.fx.b, f.fx.c});
    REQUIRE(terms.size() >= 6);
    int eq_count = 0;
    for (auto& s : terms)
        for (auto& t : terms) {
            size_t m = f.cs.mark();
            bool solver = f.cs.unify(s, t) == ures::ok;
            f.cs.undo(m);
            bool oracle = g_alpha(s, t);
            INFO(show_term(f.fx.p, s) << " vs " << show_term(f.fx.p, t));
            CHECK(solver == oracle);
            if (oracle) eq_count++;
        }
    CHECK(eq_count >= (int)terms.size());  // at least the diagonal
}

TEST_CASE("abstraction unification: solved form checked against ground instances") {
    // unify(a\X, b\Y) leaves a solved form equivalent to: X = (a b).Y and a # Y.
    // Verify extensionally against all ground instantiations of size <= 3.
    cfix base;
    auto grounds = ts::ground_terms(base.fx.p, ty_base(base.fx.d), 3, {base.fx.a, base.fx.b, base.fx.c});
    for (auto& s : grounds)
        for (auto& t : grounds) {
            cfix f;  // fresh store per pair
            uint32_t X = f.var("X"), Y = f.var("Y");
            term lhs = mk_abs(f.fx.a, mk_var(X));
            term rhs = mk_abs(f.fx.b, mk_var(Y));
            REQUIRE(f.cs.unify(lhs, rhs) == ures::ok);
            bool inst_ok = f.cs.unify(mk_var(X), s) == ures::ok &&
                           f.cs.unify(mk_var(Y), t) == ures::ok;
            bool oracle = g_alpha(mk_abs(f.fx.a, s), mk_abs(f.fx.b, t));
            INFO(show_term(f.fx.p, s) << " / " << show_term(f.fx.p, t));
            CHECK(inst_ok == oracle);
        }
}

TEST_CASE("suspended permutation on a variable resolves through the binding") {
    cfix f;
    uint32_t X = f.var("X");
    // X := f(a), then (a b).X walks to f(b)
    REQUIRE(f.cs.unify(mk_var(X), mk_app(f.fx.f, mk_name(f.fx.a))) == ures::ok);
    term w = f.cs.walk(mk_svar(perm{{f.fx.a, f.fx.b}}, X));
    CHECK(term_eq(w, mk_app(f.fx.f, mk_name(f.fx.b))));
}

TEST_CASE("permutation disagreement set produces freshness constraints") {
    cfix f;
    uint32_t X = f.var("X");
    // (a b).X = X demands a # X and b # X
    REQUIRE(f.cs.unify(mk_svar(perm{{f.fx.a, f.fx.b}}, X), mk_var(X)) == ures::ok);
    auto& susp = f.fx.p.st.var(X).suspended;
    CHECK(susp.size() == 2);

    // now X := f(c) is fine, X := f(a) is not
    size_t m = f.cs.mark();
    CHECK(f.cs.unify(mk_var(X), mk_app(f.fx.f, mk_name(f.fx.c))) == ures::ok);
    f.cs.undo(m);
    CHECK(f.cs.unify(mk_var(X), mk_app(f.fx.f, mk_name(f.fx.a))) == ures::fail);
}

TEST_CASE("occurs check") {
    cfix f;
    uint32_t X = f.var("X");
    CHECK(f.cs.unify(mk_var(X), mk_app(f.fx.f, mk_name(f.fx.a))) == ures::ok);
    uint32_t Y = f.var("Y");
    CHECK(f.cs.unify(mk_var(Y), mk_app(f.fx.g, mk_pair(mk_var(Y), mk_app(f.fx.k, mk_unit())))) == ures::fail);
    // indirect cycle through a binding
    uint32_t Z = f.var("Z"), W = f.var("W");
    REQUIRE(f.cs.unify(mk_var(Z), mk_app(f.fx.g, mk_pair(mk_var(W), mk_var(W)))) == ures::ok);
    CHECK(f.cs.unify(mk_var(W), mk_app(f.fx.g, mk_pair(mk_var(Z), mk_var(Z)))) == ures::fail);
}

TEST_CASE("freshness decomposition") {
    cfix f;
    // a # f(b) holds, a # f(a) fails
    CHECK(f.cs.fresh(f.fx.a, mk_app(f.fx.f, mk_name(f.fx.b))) == ures::ok);
    CHECK(f.cs.fresh(f.fx.a, mk_app(f.fx.f, mk_name(f.fx.a))) == ures::fail);
    // abstraction shields its own binder: a # a\f(a)
    CHECK(f.cs.fresh(f.fx.a, mk_abs(f.fx.a, mk_app(f.fx.f, mk_name(f.fx.a)))) == ures::ok);
    CHECK(f.cs.fresh(f.fx.a, mk_abs(f.fx.b, mk_app(f.fx.f, mk_name(f.fx.a)))) == ures::fail);
    // unit is always fresh
    CHECK(f.cs.fresh(f.fx.a, mk_unit()) == ures::ok);
}

TEST_CASE("freshness suspension wakes on binding") {
    cfix f;
    uint32_t X = f.var("X");
    REQUIRE(f.cs.fresh(f.fx.a, mk_var(X)) == ures::ok);
    CHECK(f.fx.p.st.var(X).suspended.size() == 1);

    size_t m = f.cs.mark();
    CHECK(f.cs.unify(mk_var(X), mk_app(f.fx.f, mk_name(f.fx.a))) == ures::fail);
    f.cs.undo(m);
    CHECK(f.cs.unify(mk_var(X), mk_app(f.fx.f, mk_name(f.fx.b))) == ures::ok);

    // freshness through a suspended permutation: a # (a b).Y normalizes to b # Y
    uint32_t Y = f.var("Y");
    REQUIRE(f.cs.fresh(f.fx.a, mk_svar(perm{{f.fx.a, f.fx.b}}, Y)) == ures::ok);
    size_t m2 = f.cs.mark();
    CHECK(f.cs.unify(mk_var(Y), mk_app(f.fx.f, mk_name(f.fx.b))) == ures::fail);
    f.cs.undo(m2);
    CHECK(f.cs.unify(mk_var(Y), mk_app(f.fx.f, mk_name(f.fx.a))) == ures::ok);
}

TEST_CASE("universal variables refuse bindings") {
    cfix f;
    uint32_t U = f.fx.p.st.fresh_var(ty_base(f.fx.d), "U", true);
    uint32_t X = f.var("X");
    CHECK(f.cs.unify(mk_var(U), mk_app(f.fx.k, mk_unit())) == ures::fail);
    CHECK(f.cs.unify(mk_app(f.fx.k, mk_unit()), mk_var(U)) == ures::fail);
    // an existential may still be bound to the universal itself
    CHECK(f.cs.unify(mk_var(X), mk_var(U)) == ures::ok);
    CHECK(f.cs.walk(mk_var(X))->id == U);
    CHECK(f.cs.unify(mk_var(U), mk_var(U)) == ures::ok);
}

TEST_CASE("freshness against universals is decided by stamp or reachability") {
    cfix f;
    uint32_t U = f.fx.p.st.fresh_var(ty_base(f.fx.d), "U", true);
    // name created after the universal was fixed: fresh
    uint32_t young = f.fx.p.st.fresh_name(f.fx.nm, "y");
    CHECK(f.cs.fresh(young, mk_var(U)) == ures::ok);
    // older name: unknown, reported incomplete
    CHECK(f.cs.fresh(f.fx.a, mk_var(U)) == ures::incomplete);
    CHECK(f.cs.saw_incomplete);

    // unreachable name type in the variable's type: fresh regardless of age
    program& q = f.fx.p;
    sym nat = q.sig.add_base("nat");
    q.sig.add_ctor("z", ty_unit(), nat);
    q.sig.add_ctor("s", ty_base(nat), nat);
    uint32_t V = q.st.fresh_var(ty_base(nat), "V", true);
    CHECK(f.cs.fresh(f.fx.a, mk_var(V)) == ures::ok);
}

TEST_CASE("scope discipline: young names cannot escape into older variables") {
    cfix f;
    uint32_t X = f.var("X");
    uint32_t young = f.fx.p.st.fresh_name(f.fx.nm, "yn");
    // unprotected occurrence: fails
    CHECK(f.cs.unify(mk_var(X), mk_app(f.fx.f, mk_name(young))) == ures::fail);
    // binder-protected occurrence: fine (the alpha-class does not depend on the name)
    CHECK(f.cs.unify(mk_var(X), mk_app(f.fx.h, mk_abs(young, mk_app(f.fx.f, mk_name(young))))) == ures::ok);
}

TEST_CASE("scope discipline is transitive via stamp demotion") {
    cfix f;
    uint32_t X = f.var("X");                                  // oldest
    uint32_t young = f.fx.p.st.fresh_name(f.fx.nm, "yn");     // younger than X
    uint32_t Y = f.var("Y");                                  // younger than the name
    // Binding Y := f(young) alone would be fine...
    size_t m = f.cs.mark();
    CHECK(f.cs.unify(mk_var(Y), mk_app(f.fx.f, mk_name(young))) == ures::ok);
    f.cs.undo(m);
    // ...but once Y flows into X, Y is demoted and the name may no longer enter
    REQUIRE(f.cs.unify(mk_var(X), mk_app(f.fx.g, mk_pair(mk_var(Y), mk_app(f.fx.k, mk_unit())))) == ures::ok);
    CHECK(f.cs.unify(mk_var(Y), mk_app(f.fx.f, mk_name(young))) == ures::fail);
}

TEST_CASE("binder-protected demotion keeps the bound name admissible") {
    cfix f;
    uint32_t X = f.var("X");                               // oldest
    uint32_t yn = f.fx.p.st.fresh_name(f.fx.nm, "yn");
    uint32_t Y = f.var("Y");
    uint32_t Z = f.var("Z");
    // Y sits under a binder for yn inside X's value, so the demotion of Y
    // must not forbid yn: every occurrence of Y is already protected
    REQUIRE(f.cs.unify(mk_var(X), mk_app(f.fx.h, mk_abs(yn, mk_var(Y)))) == ures::ok);
    CHECK(f.cs.unify(mk_var(Y), mk_app(f.fx.g, mk_pair(mk_app(f.fx.f, mk_name(yn)), mk_var(Z)))) == ures::ok);
    // ...and the admission is inherited by variables reached through Y
    CHECK(f.cs.unify(mk_var(Z), mk_app(f.fx.f, mk_name(yn))) == ures::ok);
}

TEST_CASE("an unprotected occurrence revokes the admission") {
    cfix f;
    uint32_t X1 = f.var("X1");
    uint32_t X2 = f.var("X2");
    uint32_t yn = f.fx.p.st.fresh_name(f.fx.nm, "yn");
    uint32_t Y = f.var("Y");
    REQUIRE(f.cs.unify(mk_var(X1), mk_app(f.fx.h, mk_abs(yn, mk_var(Y)))) == ures::ok);
    // Y now also flows into X2 with no binder in between: if yn entered Y it
    // would leak into X2, so the protection must be withdrawn
    REQUIRE(f.cs.unify(mk_var(X2), mk_app(f.fx.g, mk_pair(mk_var(Y), mk_app(f.fx.k, mk_unit())))) == ures::ok);
    CHECK(f.cs.unify(mk_var(Y), mk_app(f.fx.f, mk_name(yn))) == ures::fail);
}

TEST_CASE("admission is not freshness: the constraint still suspends") {
    cfix f;
    uint32_t X = f.var("X");
    uint32_t yn = f.fx.p.st.fresh_name(f.fx.nm, "yn");
    uint32_t Y = f.var("Y");
    REQUIRE(f.cs.unify(mk_var(X), mk_app(f.fx.h, mk_abs(yn, mk_var(Y)))) == ures::ok);
    // yn may enter Y, so yn # Y is not yet entailed...
    REQUIRE_FALSE(f.cs.entails_fresh(yn, mk_var(Y)));
    // ...but can be assumed, after which it is part of the store
    REQUIRE(f.cs.fresh(yn, mk_var(Y)) == ures::ok);
    CHECK(f.cs.entails_fresh(yn, mk_var(Y)));
    // a binding that ends with yn free violates the suspended constraint,
    // one that keeps it under the binder satisfies it
    size_t m = f.cs.mark();
    CHECK(f.cs.unify(mk_var(Y), mk_app(f.fx.f, mk_name(yn))) == ures::fail);
    f.cs.undo(m);
    CHECK(f.cs.unify(mk_var(Y), mk_app(f.fx.h, mk_abs(yn, mk_app(f.fx.f, mk_name(yn))))) == ures::ok);
}

TEST_CASE("eigenvariable escape is blocked") {
    cfix f;
    uint32_t X = f.var("X");                                   // older existential
    uint32_t U = f.fx.p.st.fresh_var(ty_base(f.fx.d), "U", true);  // younger universal
    CHECK(f.cs.unify(mk_var(X), mk_app(f.fx.g, mk_pair(mk_var(U), mk_var(U)))) == ures::fail);
    // indirectly through a middleman
    uint32_t Y = f.var("Y");
    REQUIRE(f.cs.unify(mk_var(X), mk_app(f.fx.g, mk_pair(mk_var(Y), mk_var(Y)))) == ures::ok);
    CHECK(f.cs.unify(mk_var(Y), mk_var(U)) == ures::fail);
}

TEST_CASE("hoisted names may appear in any variable") {
    cfix f;
    uint32_t X = f.var("X");
    uint32_t hn = f.fx.p.st.fresh_name_hoisted(f.fx.nm, "h0");
    CHECK(f.cs.unify(mk_var(X), mk_app(f.fx.f, mk_name(hn))) == ures::ok);
}

TEST_CASE("entailment requires no new constraints") {
    cfix f;
    term ka = mk_app(f.fx.f, mk_name(f.fx.a));
    CHECK(f.cs.entails_eq(ka, ka));
    // alpha-equivalent abstractions are entailed equal
    term l1 = mk_abs(f.fx.a, mk_app(f.fx.f, mk_name(f.fx.a)));
    term l2 = mk_abs(f.fx.b, mk_app(f.fx.f, mk_name(f.fx.b)));
    CHECK(f.cs.entails_eq(l1, l2));

    uint32_t X = f.var("X");
    // X = f(a) is satisfiable but not entailed
    CHECK_FALSE(f.cs.entails_eq(mk_var(X), ka));
    // after binding, it is
    REQUIRE(f.cs.unify(mk_var(X), ka) == ures::ok);
    CHECK(f.cs.entails_eq(mk_var(X), ka));

    uint32_t Y = f.var("Y");
    CHECK_FALSE(f.cs.entails_fresh(f.fx.a, mk_var(Y)));
    REQUIRE(f.cs.fresh(f.fx.a, mk_var(Y)) == ures::ok);
    CHECK(f.cs.entails_fresh(f.fx.a, mk_var(Y)));
    // fresh-name quantification: entailment after one gensym
    uint32_t g1 = f.fx.p.st.fresh_name(f.fx.nm, "g1");
    CHECK(f.cs.entails_fresh(g1, mk_var(Y)));
}

TEST_CASE("solved form invariants after mixed constraint load") {
    cfix f;
    // build a chain of bindings and confirm acyclicity via walk termination
    std::vector<uint32_t> vs;
    for (int i = 0; i < 8; i++) vs.push_back(f.var(("V" + std::to_string(i)).c_str()));
    for (int i = 0; i + 1 < 8; i++)
        REQUIRE(f.cs.unify(mk_var(vs[i]), mk_app(f.fx.g, mk_pair(mk_var(vs[i + 1]), mk_app(f.fx.k, mk_unit())))) == ures::ok);
    REQUIRE(f.cs.unify(mk_var(vs[7]), mk_app(f.fx.f, mk_name(f.fx.a))) == ures::ok);
    term r = f.cs.resolve(mk_var(vs[0]));
    CHECK(f.cs.is_ground(r));
    CHECK(term_size(r) == 7 * 2 + 2);
    // undo everything and confirm the store is clean
    f.cs.undo(0);
    for (auto v : vs) CHECK_FALSE(f.cs.bound(v));
    CHECK(f.fx.p.st.var(vs[0]).suspended.empty());
}
