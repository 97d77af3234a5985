#include <catch2/catch_amalgamated.hpp>
#include <nomcheck/syntax.hpp>
#include "support.hpp"

using namespace nomcheck;
using ts::mini_fixture;

TEST_CASE("permutation application and composition") {
    mini_fixture fx;
    uint32_t a = fx.a, b = fx.b, c = fx.c;

    perm swap_ab{{a, b}};
    CHECK(perm_apply(swap_ab, a) == b);
    CHECK(perm_apply(swap_ab, b) == a);
    CHECK(perm_apply(swap_ab, c) == c);

    // ((a b) o (b c)) sends c to a: the inner swap acts first
    perm p = perm_compose(perm{{a, b}}, perm{{b, c}});
    CHECK(perm_apply(p, c) == a);
    CHECK(perm_apply(p, a) == b);
    CHECK(perm_apply(p, b) == c);

    perm inv = perm_inverse(p);
    for (uint32_t n : {a, b, c}) {
        CHECK(perm_apply(inv, perm_apply(p, n)) == n);
        CHECK(perm_apply(p, perm_apply(inv, n)) == n);
    }

    CHECK(perm_trivial(perm{}));
    CHECK(perm_trivial(perm{{a, a}}));
    CHECK_FALSE(perm_trivial(swap_ab));
    // (a b)(a b) cancels out
    CHECK(perm_trivial(perm_compose(swap_ab, swap_ab)));

    auto sup = perm_support(p);
    CHECK(sup == std::set<uint32_t>{a, b, c});
}

TEST_CASE("group action law on enumerated permutations") {
    mini_fixture fx;
    std::vector<uint32_t> ns{fx.a, fx.b, fx.c};
    std::vector<perm> perms{{}};
    for (auto x : ns)
        for (auto y : ns) perms.push_back(perm{{x, y}});
    size_t single = perms.size();
    for (size_t i = 1; i < single; i++)
        for (size_t j = 1; j < single; j++)
            perms.push_back(perm_compose(perms[i], perms[j]));

    for (auto& p1 : perms)
        for (auto& p2 : perms)
            for (uint32_t n : ns)
                CHECK(perm_apply(perm_compose(p1, p2), n) == perm_apply(p1, perm_apply(p2, n)));
}

TEST_CASE("swapping acts structurally and composes on variables") {
    mini_fixture fx;
    auto& p = fx.p;
    uint32_t a = fx.a, b = fx.b, c = fx.c;

    // (a b) . f(a) = f(b)
    term fa = mk_app(fx.f, mk_name(a));
    term fb = mk_app(fx.f, mk_name(b));
    CHECK(term_eq(swap_names(a, b, fa), fb));

    // (a b) . h(a\g(f(a),f(c))) swaps binder and body
    term inner = mk_app(fx.g, mk_pair(mk_app(fx.f, mk_name(a)), mk_app(fx.f, mk_name(c))));
    term habs = mk_app(fx.h, mk_abs(a, inner));
    term expect = mk_app(fx.h, mk_abs(b, mk_app(fx.g, mk_pair(mk_app(fx.f, mk_name(b)), mk_app(fx.f, mk_name(c))))));
    CHECK(term_eq(swap_names(a, b, habs), expect));

    // swapping a variable composes with the suspension instead of traversing
    uint32_t X = p.st.fresh_var(ty_base(fx.d), "X");
    term sv = mk_svar(perm{{b, c}}, X);
    term sw = swap_names(a, b, sv);
    REQUIRE(sw->k == tkind::var);
    CHECK(sw->id == X);
    CHECK(sw->p == perm_compose(perm{{a, b}}, perm{{b, c}}));

    // unit unaffected
    CHECK(term_eq(swap_names(a, b, mk_unit()), mk_unit()));
}

TEST_CASE("swapping is an involution on ground terms up to size 5") {
    mini_fixture fx;
    auto terms = ts::ground_terms(fx.p, ty_base(fx.d), 5, {fx.a, fx.b, fx.c});
    // by size: 1 (k) + 3 (f) + 2 + 10 + 15 = 31
    REQUIRE(terms.size() == 31);
    for (auto& t : terms)
        CHECK(term_eq(swap_names(fx.a, fx.b, swap_names(fx.a, fx.b, t)), t));
}

TEST_CASE("swapping preserves types") {
    mini_fixture fx;
    auto terms = ts::ground_terms(fx.p, ty_base(fx.d), 4, {fx.a, fx.b, fx.c});
    for (auto& t : terms) {
        REQUIRE_FALSE(check_term(fx.p.sig, fx.p.st, t, ty_base(fx.d)).has_value());
        auto sw = swap_names(fx.b, fx.c, t);
        CHECK_FALSE(check_term(fx.p.sig, fx.p.st, sw, ty_base(fx.d)).has_value());
    }
}

TEST_CASE("free names and binding occurrences") {
    mini_fixture fx;
    uint32_t a = fx.a, c = fx.c;

    // a\(f(a), f(c)) : binder occurrence of a flagged, plus free a and c inside
    term t = mk_abs(a, mk_pair(mk_app(fx.f, mk_name(a)), mk_app(fx.f, mk_name(c))));
    auto fn = free_names(t);
    CHECK(fn == std::set<name_occurrence>{{a, true}, {a, false}, {c, false}});

    // suspended permutation support shows up as name occurrences
    uint32_t X = fx.p.st.fresh_var(ty_base(fx.d), "X");
    auto fn2 = free_names(mk_svar(perm{{fx.a, fx.b}}, X));
    CHECK(fn2 == std::set<name_occurrence>{{fx.a, false}, {fx.b, false}});

    CHECK(occurs_name(a, t));
    CHECK(occurs_name(c, t));
    CHECK_FALSE(occurs_name(fx.b, t));
}

TEST_CASE("free variable collection in first-occurrence order") {
    mini_fixture fx;
    uint32_t X = fx.p.st.fresh_var(ty_base(fx.d), "X");
    uint32_t Y = fx.p.st.fresh_var(ty_base(fx.d), "Y");
    term t = mk_app(fx.g, mk_pair(mk_var(Y), mk_app(fx.g, mk_pair(mk_var(X), mk_var(Y)))));
    auto fv = free_vars(t);
    REQUIRE(fv.size() == 2);
    CHECK(fv[0] == Y);
    CHECK(fv[1] == X);
}

TEST_CASE("term type checking") {
    mini_fixture fx;
    auto& p = fx.p;
    type_ptr dd = ty_base(fx.d);

    CHECK_FALSE(check_term(p.sig, p.st, mk_app(fx.k, mk_unit()), dd).has_value());
    CHECK_FALSE(check_term(p.sig, p.st, mk_app(fx.f, mk_name(fx.a)), dd).has_value());
    CHECK_FALSE(check_term(p.sig, p.st,
        mk_app(fx.h, mk_abs(fx.a, mk_app(fx.f, mk_name(fx.a)))), dd).has_value());

    // name at base type fails
    CHECK(check_term(p.sig, p.st, mk_name(fx.a), dd).has_value());
    // wrong constructor argument fails
    CHECK(check_term(p.sig, p.st, mk_app(fx.f, mk_app(fx.k, mk_unit())), dd).has_value());
    // variable of the wrong type fails
    uint32_t N = p.st.fresh_var(ty_name(fx.nm), "N");
    CHECK_FALSE(check_term(p.sig, p.st, mk_app(fx.f, mk_var(N)), dd).has_value());
    uint32_t D = p.st.fresh_var(dd, "D");
    CHECK(check_term(p.sig, p.st, mk_app(fx.f, mk_var(D)), dd).has_value());
}

TEST_CASE("term size metric") {
    mini_fixture fx;
    CHECK(term_size(mk_unit()) == 0);
    CHECK(term_size(mk_name(fx.a)) == 1);
    CHECK(term_size(mk_app(fx.k, mk_unit())) == 1);
    CHECK(term_size(mk_app(fx.f, mk_name(fx.a))) == 2);
    // pairs are transparent: g(k,k) = 1 + 1 + 1
    CHECK(term_size(mk_app(fx.g, mk_pair(mk_app(fx.k, mk_unit()), mk_app(fx.k, mk_unit())))) == 3);
    // abstraction counts one: h(a\f(a)) = 1 + 1 + 2
    CHECK(term_size(mk_app(fx.h, mk_abs(fx.a, mk_app(fx.f, mk_name(fx.a))))) == 4);
}

TEST_CASE("tuple helpers nest to the right") {
    mini_fixture fx;
    auto tt = ty_tuple({ty_base(fx.d), ty_name(fx.nm), ty_unit()});
    REQUIRE(tt->k == tykind::pair);
    CHECK(tt->a->k == tykind::base);
    REQUIRE(tt->b->k == tykind::pair);
    CHECK(tt->b->a->k == tykind::name);
    CHECK(tt->b->b->k == tykind::unit);

    term t = mk_tuple({mk_name(fx.a), mk_name(fx.b), mk_name(fx.c)});
    REQUIRE(t->k == tkind::pair);
    CHECK(t->a->id == fx.a);
    REQUIRE(t->b->k == tkind::pair);
    CHECK(t->b->a->id == fx.b);
    CHECK(t->b->b->id == fx.c);
}

TEST_CASE("pretty printer surface forms") {
    mini_fixture fx;
    auto& p = fx.p;
    printer pr{&p.sig, &p.st, {}};

    CHECK(pr.term_str(mk_app(fx.k, mk_unit())) == "k");
    CHECK(pr.term_str(mk_app(fx.g, mk_pair(mk_app(fx.k, mk_unit()), mk_app(fx.f, mk_name(fx.a))))) == "g(k,f(a))");
    CHECK(pr.term_str(mk_app(fx.h, mk_abs(fx.a, mk_app(fx.f, mk_name(fx.a))))) == "h(a\\f(a))");

    uint32_t X = p.st.fresh_var(ty_base(fx.d), "X");
    CHECK(pr.term_str(mk_svar(perm{{fx.a, fx.b}}, X)) == "(a b)*X");

    // list sugar
    sym lnat = p.sig.list_type(ty_name(fx.nm));
    auto [nilc, consc] = p.sig.list_ctors.at(lnat);
    term nil = mk_app(nilc, mk_unit());
    term l1 = mk_app(consc, mk_pair(mk_name(fx.a), nil));
    term l2 = mk_app(consc, mk_pair(mk_name(fx.b), l1));
    CHECK(pr.term_str(nil) == "[]");
    CHECK(pr.term_str(l2) == "[b,a]");
    uint32_t T = p.st.fresh_var(ty_base(lnat), "T");
    CHECK(pr.term_str(mk_app(consc, mk_pair(mk_name(fx.a), mk_var(T)))) == "[a|T]");
    CHECK(p.sig.type_str(ty_base(lnat)) == "[nm]");

    // goals
    sym pp = p.sig.add_pred("q", {ty_base(fx.d), ty_base(fx.d)});
    goal at = g_atom(pp, mk_pair(mk_app(fx.k, mk_unit()), mk_var(X)));
    CHECK(pr.goal_str(at) == "q(k,X)");
    goal conj = g_conj(at, g_fresh(mk_name(fx.a), mk_var(X), fx.nm, ty_base(fx.d)));
    CHECK(pr.goal_str(conj) == "q(k,X), a # X");
    goal dis = g_disj(g_eq(mk_var(X), mk_app(fx.k, mk_unit()), ty_base(fx.d)), at);
    CHECK(pr.goal_str(dis) == "(X = k; q(k,X))");
}

TEST_CASE("name reachability analysis") {
    mini_fixture fx;
    name_reach nr{&fx.p.sig, {}};
    CHECK(nr.reaches(ty_base(fx.d), fx.nm));
    CHECK(nr.reaches(ty_abs(fx.nm, ty_unit()), fx.nm));
    CHECK_FALSE(nr.reaches(ty_unit(), fx.nm));

    // a base type with no name-bearing constructors
    program q;
    sym nm2 = q.sig.add_name_type("v");
    sym nat = q.sig.add_base("nat");
    q.sig.add_ctor("z", ty_unit(), nat);
    q.sig.add_ctor("s", ty_base(nat), nat);
    name_reach nr2{&q.sig, {}};
    CHECK_FALSE(nr2.reaches(ty_base(nat), nm2));

    // recursive type through a pair reaches
    sym lst = q.sig.add_base("lst");
    q.sig.add_ctor("lnil", ty_unit(), lst);
    q.sig.add_ctor("lcons", ty_pair(ty_name(nm2), ty_base(lst)), lst);
    name_reach nr3{&q.sig, {}};
    CHECK(nr3.reaches(ty_base(lst), nm2));
    CHECK_FALSE(nr3.reaches(ty_base(nat), nm2));
}
