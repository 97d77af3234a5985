#pragma once

// Term complementation, head linearization, and generation of the structural
// inequality (neq_*) and non-freshness (nfr_*) predicates. These are the
// building blocks the negation elimination transformation assembles into
// complement programs.

#include <nomcheck/syntax.hpp>

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace nomcheck {

struct transform_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Term complementation
//
// not[[tau]](t) is a finite set of linear terms whose ground instances are
// exactly the ground terms of type tau that are NOT instances of t. Defined
// only for linear, name-free t (heads after linearization):
//
//   not[[tau]](X)        = {}                      also for tau in {1, nu, <nu>tau}
//   not[[t1 x t2]](s,u)  = {(s',_) | s' in not(s)} u {(_,u') | u' in not(u)}
//   not[[delta]](f(t))   = {g(_) | g another constructor of delta}
//                          u {f(s) | s in not(t)}
//
// Wildcards materialize as fresh, pairwise distinct variables, so the
// results are linear by construction.

namespace detail {

inline void count_var_occurrences(const term& t, std::map<uint32_t, int>& m) {
    switch (t->k) {
        case tkind::var: m[t->id]++; break;
        case tkind::pair:
            count_var_occurrences(t->a, m);
            count_var_occurrences(t->b, m);
            break;
        case tkind::abs: count_var_occurrences(t->a, m); break;
        case tkind::app: count_var_occurrences(t->a, m); break;
        default: break;
    }
}

} // namespace detail

inline term complement_wildcard(program& p, const type_ptr& ty) {
    return mk_var(p.st.fresh_var(ty, "_"));
}

inline void not_type_into(program& p, const type_ptr& ty, const term& t,
                          std::vector<term>& out) {
    if (t->k == tkind::var) return;
    switch (ty->k) {
        case tykind::unit:
        case tykind::name:
        case tykind::abs:
            return;
        case tykind::pair: {
            std::vector<term> sub;
            not_type_into(p, ty->a, t->a, sub);
            for (auto& s : sub) out.push_back(mk_pair(s, complement_wildcard(p, ty->b)));
            sub.clear();
            not_type_into(p, ty->b, t->b, sub);
            for (auto& s : sub) out.push_back(mk_pair(complement_wildcard(p, ty->a), s));
            return;
        }
        case tykind::base: {
            const ctor_info& fi = p.sig.ctors.at(t->f);
            for (sym g : p.sig.ctors_of.at(ty->head)) {
                if (g == t->f) continue;
                const ctor_info& gi = p.sig.ctors.at(g);
                term arg = gi.arg->k == tykind::unit ? mk_unit()
                                                     : complement_wildcard(p, gi.arg);
                out.push_back(mk_app(g, arg));
            }
            std::vector<term> sub;
            not_type_into(p, fi.arg, t->a, sub);
            for (auto& s : sub) out.push_back(mk_app(t->f, s));
            return;
        }
    }
}

inline std::vector<term> not_type(program& p, const type_ptr& ty, const term& t) {
    if (!free_names(t).empty())
        throw transform_error("complement of a term with free names");
    std::map<uint32_t, int> occ;
    detail::count_var_occurrences(t, occ);
    for (auto& [v, n] : occ)
        if (n > 1) throw transform_error("complement of a nonlinear term");
    std::vector<term> out;
    not_type_into(p, ty, t, out);
    return out;
}

// ---------------------------------------------------------------------------
// Head linearization
//
// Rewrites a normalized clause so its head is linear and free of names and
// abstractions: repeated variables and names move into body equations, and
// abstraction subterms become fresh variables eliminated in the body by a
// concretion under a fresh-name binder. Parsed programs already arrive in
// this form, so this is a no-op for them; it makes the precondition of
// complementation available to clauses assembled in code.

namespace detail {

inline goal conj2(const goal& a, const goal& b) {
    if (!b || b->k == gkind::top) return a;
    if (a->k == gkind::top) return b;
    return g_conj(a, b);
}

struct head_rewriter {
    program* p;
    std::set<uint32_t> seen;
    std::vector<goal> eqs;
    // abstraction pulls: name to bind, concretion variable, its type, and the
    // equated body term, applied innermost-last around the clause body
    struct pull { uint32_t name; sym ntype; uint32_t wvar; type_ptr wty; term body; };
    std::vector<pull> pulls;
    int ne = 0, nn = 0, ns = 0, na = 0;

    term walk(const term& t, const type_ptr& ty) {
        switch (t->k) {
            case tkind::unit: return t;
            case tkind::name: {
                uint32_t y = p->st.fresh_var(ty, "_N" + std::to_string(++nn));
                eqs.push_back(g_eq(mk_var(y), t, ty));
                return mk_var(y);
            }
            case tkind::var: {
                if (!t->p.empty()) {
                    uint32_t y = p->st.fresh_var(ty, "_S" + std::to_string(++ns));
                    eqs.push_back(g_eq(mk_var(y), t, ty));
                    return mk_var(y);
                }
                if (seen.count(t->id)) {
                    uint32_t y = p->st.fresh_var(ty, "_E" + std::to_string(++ne));
                    eqs.push_back(g_eq(mk_var(y), t, ty));
                    return mk_var(y);
                }
                seen.insert(t->id);
                return t;
            }
            case tkind::pair: {
                term a = walk(t->a, ty->a);   // left first: occurrence order
                term b = walk(t->b, ty->b);
                return mk_pair(a, b);
            }
            case tkind::abs: {
                uint32_t w = p->st.fresh_var(ty, "_A" + std::to_string(++na));
                pulls.push_back({t->id, ty->head, w, ty, t->a});
                return mk_var(w);
            }
            case tkind::app: {
                const ctor_info& ci = p->sig.ctors.at(t->f);
                return mk_app(t->f, walk(t->a, ci.arg));
            }
        }
        return t;
    }
};

} // namespace detail

inline horn_clause linearize_head(program& p, const horn_clause& c) {
    detail::head_rewriter rw{&p};
    const pred_info& pi = p.sig.preds.at(c.pred);
    horn_clause out = c;
    out.head = rw.walk(c.head, pi.arg);
    if (rw.eqs.empty() && rw.pulls.empty()) return out;

    // a pulled binder must not be referenced from outside its new scope
    for (size_t i = 0; i < rw.pulls.size(); i++) {
        for (auto& eq : rw.eqs)
            if (occurs_name(rw.pulls[i].name, eq->u))
                throw transform_error("abstraction binder escapes its head position");
        for (size_t j = i + 1; j < rw.pulls.size(); j++)
            if (occurs_name(rw.pulls[j].name, rw.pulls[i].body))
                throw transform_error("abstraction binder escapes its head position");
    }

    goal body = c.body ? c.body : g_top();
    for (auto it = rw.pulls.rbegin(); it != rw.pulls.rend(); ++it) {
        uint32_t cv = p.st.fresh_var(it->wty->a, "_C");
        goal inner = detail::conj2(g_eq(mk_var(cv), it->body, it->wty->a), body);
        body = g_new(it->name, it->ntype,
                     g_conc(mk_var(it->wvar), it->name, cv, it->wty->a, inner));
    }
    for (auto it = rw.eqs.rbegin(); it != rw.eqs.rend(); ++it)
        body = detail::conj2(*it, body);
    out.body = body;

    // clause variables: head first-occurrence order, then surviving originals
    std::set<uint32_t> have;
    out.vars = free_vars(out.head);
    for (uint32_t v : out.vars) have.insert(v);
    for (uint32_t v : c.vars)
        if (!have.count(v)) { out.vars.push_back(v); have.insert(v); }
    // abstraction binders move under a goal-level fresh-name quantifier
    out.names.clear();
    for (uint32_t n : c.names) {
        bool pulled = false;
        for (auto& pl : rw.pulls) pulled = pulled || pl.name == n;
        if (!pulled) out.names.push_back(n);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Inequality and non-freshness
//
// neq[[tau]](t,u) holds iff t and u are distinct (non alpha-equivalent)
// ground terms of type tau; nfr[[nu,tau]](a,t) holds iff the name a is NOT
// fresh for t, i.e. occurs free in it. The structural cases of both expand
// inline at the use site; only base types get recursive predicates, named
// neq_<delta> and nfr_<nu>_<delta>. Generated definitions are appended to
// the program and recorded here in generation order.

struct gen_emit {
    program* p;
    name_reach reach;
    std::vector<sym> order;   // generated predicate symbols, oldest first

    explicit gen_emit(program& pr) : p(&pr), reach{&pr.sig} {}

    // --- inequality ---

    goal neq(const type_ptr& ty, const term& t, const term& u) {
        switch (ty->k) {
            case tykind::unit: return g_bot();
            case tykind::name: return g_fresh(t, u, ty->head, ty);
            case tykind::base:
                return g_atom(ensure_neq(ty->head), mk_pair(t, u));
            case tykind::abs: {
                uint32_t a = p->st.fresh_name(ty->head, "a");
                uint32_t xv = p->st.fresh_var(ty->a, "_L");
                uint32_t yv = p->st.fresh_var(ty->a, "_R");
                goal inner = neq(ty->a, mk_var(xv), mk_var(yv));
                if (inner->k == gkind::bot) return g_bot();
                return g_new(a, ty->head,
                             g_conc(t, a, xv, ty->a,
                                    g_conc(u, a, yv, ty->a, inner)));
            }
            case tykind::pair: {
                auto [t1, t2, wrapt] = split_pair(t, ty);
                auto [u1, u2, wrapu] = split_pair(u, ty);
                goal l = neq(ty->a, t1, u1);
                goal r = neq(ty->b, t2, u2);
                goal core = or_else(l, r);
                if (core->k == gkind::bot) return core;
                return apply_wrap(wrapt, apply_wrap(wrapu, core, ty, u), ty, t);
            }
        }
        return g_bot();
    }

    sym ensure_neq(sym delta) {
        sym s = p->sig.syms.intern("neq_" + p->sig.syms.str(delta));
        if (p->sig.preds.count(s)) return s;
        type_ptr dt = ty_base(delta);
        p->sig.add_pred(p->sig.syms.str(s), {dt, dt}, true);
        p->decl_order.push_back({program::dkind::pred, s});
        order.push_back(s);

        const auto& ctors = p->sig.ctors_of.at(delta);
        // same constructor, different arguments
        for (sym f : ctors) {
            const ctor_info& ci = p->sig.ctors.at(f);
            std::vector<uint32_t> vars;
            int nx = 0, ny = 0;
            term xs = spine(ci.arg, "X", nx, vars);
            term ys = spine(ci.arg, "Y", ny, vars);
            goal body = neq(ci.arg, xs, ys);
            if (body->k == gkind::bot) continue;
            horn_clause c;
            c.pred = s;
            c.head = mk_pair(mk_app(f, xs), mk_app(f, ys));
            c.body = body;
            c.vars = std::move(vars);
            p->add_clause(std::move(c));
        }
        // different constructors
        for (sym f : ctors)
            for (sym g : ctors) {
                if (f == g) continue;
                std::vector<uint32_t> vars;
                horn_clause c;
                c.pred = s;
                c.head = mk_pair(ctor_pattern(f, vars), ctor_pattern(g, vars));
                c.body = g_top();
                c.vars = std::move(vars);
                p->add_clause(std::move(c));
            }
        return s;
    }

    // --- non-freshness ---

    goal nfr(sym nu, const type_ptr& ty, const term& a, const term& t) {
        switch (ty->k) {
            case tykind::unit: return g_bot();
            case tykind::name:
                if (ty->head != nu) return g_bot();
                return g_eq(a, t, ty);
            case tykind::base:
                // types that cannot contain the name type are always fresh
                if (!reach.reaches(ty, nu)) return g_bot();
                return g_atom(ensure_nfr(nu, ty->head), mk_pair(a, t));
            case tykind::abs: {
                uint32_t b = p->st.fresh_name(ty->head, "b");
                uint32_t xv = p->st.fresh_var(ty->a, "_B");
                goal inner = nfr(nu, ty->a, a, mk_var(xv));
                if (inner->k == gkind::bot) return g_bot();
                return g_new(b, ty->head, g_conc(t, b, xv, ty->a, inner));
            }
            case tykind::pair: {
                auto [t1, t2, wrapt] = split_pair(t, ty);
                goal core = or_else(nfr(nu, ty->a, a, t1), nfr(nu, ty->b, a, t2));
                if (core->k == gkind::bot) return core;
                return apply_wrap(wrapt, core, ty, t);
            }
        }
        return g_bot();
    }

    sym ensure_nfr(sym nu, sym delta) {
        sym s = p->sig.syms.intern("nfr_" + p->sig.syms.str(nu) + "_" +
                                   p->sig.syms.str(delta));
        if (p->sig.preds.count(s)) return s;
        p->sig.add_pred(p->sig.syms.str(s), {ty_name(nu), ty_base(delta)}, true);
        p->decl_order.push_back({program::dkind::pred, s});
        order.push_back(s);

        for (sym f : p->sig.ctors_of.at(delta)) {
            const ctor_info& ci = p->sig.ctors.at(f);
            std::vector<uint32_t> vars;
            uint32_t av = p->st.fresh_var(ty_name(nu), "A");
            vars.push_back(av);
            int nx = 0;
            term xs = spine(ci.arg, "X", nx, vars);
            goal body = nfr(nu, ci.arg, mk_var(av), xs);
            if (body->k == gkind::bot) continue;
            horn_clause c;
            c.pred = s;
            c.head = mk_pair(mk_var(av), mk_app(f, xs));
            c.body = body;
            c.vars = std::move(vars);
            p->add_clause(std::move(c));
        }
        return s;
    }

    // --- shared helpers ---

    // tuple of fresh variables mirroring the type structure, so component
    // access never needs projections
    term spine(const type_ptr& ty, const char* stem, int& n, std::vector<uint32_t>& vars) {
        switch (ty->k) {
            case tykind::unit: return mk_unit();
            case tykind::pair: {
                term a = spine(ty->a, stem, n, vars);
                term b = spine(ty->b, stem, n, vars);
                return mk_pair(a, b);
            }
            default: {
                uint32_t v = p->st.fresh_var(ty, stem + std::to_string(++n));
                vars.push_back(v);
                return mk_var(v);
            }
        }
    }

    term ctor_pattern(sym f, std::vector<uint32_t>& vars) {
        const ctor_info& ci = p->sig.ctors.at(f);
        return mk_app(f, wild_spine(ci.arg, vars));
    }

    term wild_spine(const type_ptr& ty, std::vector<uint32_t>& vars) {
        switch (ty->k) {
            case tykind::unit: return mk_unit();
            case tykind::pair: {
                term a = wild_spine(ty->a, vars);
                term b = wild_spine(ty->b, vars);
                return mk_pair(a, b);
            }
            default: {
                uint32_t v = p->st.fresh_var(ty, "_");
                vars.push_back(v);
                return mk_var(v);
            }
        }
    }

    goal or_else(const goal& l, const goal& r) {
        if (l->k == gkind::bot) return r;
        if (r->k == gkind::bot) return l;
        return g_disj(l, r);
    }

    // pair components of t: literal pairs decompose directly, anything else
    // goes through fresh existentials equated to the term
    struct pair_wrap { uint32_t x1 = 0, x2 = 0; bool needed = false; };

    std::tuple<term, term, pair_wrap> split_pair(const term& t, const type_ptr& ty) {
        if (t->k == tkind::pair) return {t->a, t->b, {}};
        pair_wrap w;
        w.needed = true;
        w.x1 = p->st.fresh_var(ty->a, "_P");
        w.x2 = p->st.fresh_var(ty->b, "_Q");
        return {mk_var(w.x1), mk_var(w.x2), w};
    }

    goal apply_wrap(const pair_wrap& w, const goal& g, const type_ptr& ty, const term& t) {
        if (!w.needed) return g;
        goal eq = g_eq(t, mk_pair(mk_var(w.x1), mk_var(w.x2)), ty);
        return g_exists(w.x1, ty->a, g_exists(w.x2, ty->b, g_conj(eq, g)));
    }
};

// Surface rendering of the generated definitions, for --dump-generated.
inline std::string show_generated(const program& p, const gen_emit& ge) {
    printer pr{&p.sig, &p.st, {}};
    std::string out;
    for (sym s : ge.order) {
        const pred_info& pi = p.sig.preds.at(s);
        out += "pred " + p.sig.syms.str(s) + "(";
        for (size_t i = 0; i < pi.args.size(); i++)
            out += (i ? "," : "") + p.sig.type_str(pi.args[i]);
        out += ").\n";
        for (uint32_t ci : p.def(s)) out += pr.clause_str(p.clauses[ci]) + "\n";
    }
    return out;
}

} // namespace nomcheck
