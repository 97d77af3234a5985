#pragma once

// Depth-bounded proof search over normalized clauses.
//
// Budget accounting: selecting a clause for an atom costs one unit and the
// clause body runs at budget-1; conjunction siblings share the remaining
// budget (it bounds derivation depth, not total steps).  Constraint goals,
// disjunction, binders and name generation are free.  A forall* split layer
// costs one unit; the generic-instance branch is free.
//
// Clause instantiation is two-phase: clause-level variables and names are
// renamed eagerly at selection (names first, so they are older than the
// variables), while binder-bound identifiers (exists / forall* / concretion
// variables, `new` names) are renamed lazily when their binder is solved,
// through a renaming environment threaded per clause instance.  A concretion
// variable is therefore younger than the name it concretes at, which is what
// lets it capture that name.

#include "constraints.hpp"

#include <cctype>
#include <chrono>
#include <functional>
#include <ostream>

namespace nomcheck {

struct solve_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Renaming environment: clause-side identifier -> runtime replacement.
// Copied on extension at binder nodes; lookups miss for identifiers that are
// already runtime (query variables, names created by enclosing solve steps).
struct env {
    std::map<uint32_t, term> vmap;
    std::map<uint32_t, uint32_t> nmap;
};

inline uint32_t env_name(uint32_t a, const env& e) {
    auto it = e.nmap.find(a);
    return it == e.nmap.end() ? a : it->second;
}

inline perm env_perm(const perm& p, const env& e) {
    if (e.nmap.empty() || p.empty()) return p;
    perm q;
    q.reserve(p.size());
    for (auto& tr : p) q.emplace_back(env_name(tr.first, e), env_name(tr.second, e));
    return q;
}

// Materialize a clause-side term: substitute the environment through it.
// Mapped values are runtime terms already, so one pass suffices.
inline term env_term(const term& t, const env& e) {
    if (e.vmap.empty() && e.nmap.empty()) return t;
    switch (t->k) {
        case tkind::name: {
            uint32_t a = env_name(t->id, e);
            return a == t->id ? t : mk_name(a);
        }
        case tkind::var: {
            auto it = e.vmap.find(t->id);
            if (it == e.vmap.end()) {
                perm p = env_perm(t->p, e);
                return p == t->p ? t : mk_svar(std::move(p), t->id);
            }
            if (t->p.empty()) return it->second;
            return swap_term(env_perm(t->p, e), it->second);
        }
        case tkind::unit:
            return t;
        case tkind::pair: {
            term a = env_term(t->a, e), b = env_term(t->b, e);
            return a == t->a && b == t->b ? t : mk_pair(std::move(a), std::move(b));
        }
        case tkind::abs: {
            uint32_t n = env_name(t->id, e);
            term a = env_term(t->a, e);
            return n == t->id && a == t->a ? t : mk_abs(n, std::move(a));
        }
        case tkind::app: {
            term a = env_term(t->a, e);
            return a == t->a ? t : mk_app(t->f, std::move(a));
        }
    }
    return t;
}

// Success continuation: return true to stop the whole search.
using cont = std::function<bool()>;

// D-formulas, for backchaining against arbitrary definite formulas.  Program
// clauses are the normalized special case all(xs, imp(G, atom)); the general
// interpreter also handles conjunction, falsehood (which entails anything)
// and disjunction (both disjuncts must yield the goal).
enum class dfkind : uint8_t { top, bot, atom, conj, imp, all, disj };

struct dform_node;
using dform = std::shared_ptr<const dform_node>;

struct dform_node {
    dfkind k;
    sym pred = no_sym;
    term t;          // atom argument
    goal g;          // imp guard
    dform d1, d2;
    uint32_t bind = 0;
    type_ptr ty;
};

inline dform d_top() { return std::make_shared<dform_node>(dform_node{dfkind::top}); }
inline dform d_bot() { return std::make_shared<dform_node>(dform_node{dfkind::bot}); }
inline dform d_atom(sym p, term t) {
    dform_node n{dfkind::atom};
    n.pred = p;
    n.t = std::move(t);
    return std::make_shared<dform_node>(std::move(n));
}
inline dform d_conj(dform a, dform b) {
    dform_node n{dfkind::conj};
    n.d1 = std::move(a);
    n.d2 = std::move(b);
    return std::make_shared<dform_node>(std::move(n));
}
inline dform d_imp(goal g, dform d) {
    dform_node n{dfkind::imp};
    n.g = std::move(g);
    n.d1 = std::move(d);
    return std::make_shared<dform_node>(std::move(n));
}
inline dform d_all(uint32_t x, type_ptr ty, dform d) {
    dform_node n{dfkind::all};
    n.bind = x;
    n.ty = std::move(ty);
    n.d1 = std::move(d);
    return std::make_shared<dform_node>(std::move(n));
}
inline dform d_disj(dform a, dform b) {
    dform_node n{dfkind::disj};
    n.d1 = std::move(a);
    n.d2 = std::move(b);
    return std::make_shared<dform_node>(std::move(n));
}

inline dform clause_dform(const store& st, const horn_clause& c) {
    dform d = d_atom(c.pred, c.head);
    if (!c.body || c.body->k != gkind::top) d = d_imp(c.body, d);
    for (auto it = c.vars.rbegin(); it != c.vars.rend(); ++it)
        d = d_all(*it, st.var(*it).ty, d);
    return d;
}

struct solver {
    program* prog;
    name_reach reach;
    cstate cs;

    // names currently in scope on this branch, in creation order; seeded by
    // the caller with the query's fresh-name prefix
    std::vector<uint32_t> ctx_names;

    uint64_t cut_count = 0;   // branches abandoned because the budget ran out
    uint64_t sel_count = 0;
    bool timed_out = false;

    std::chrono::steady_clock::time_point deadline{};
    bool has_deadline = false;
    uint64_t tick = 0;

    std::ostream* trace = nullptr;
    int tdepth = 0;

    uint64_t gen_seq = 0;     // display counter for generated names

    explicit solver(program& p) : prog(&p), reach{&p.sig}, cs{&p.st, &p.sig, &reach} {}

    store& st() { return prog->st; }

    void set_timeout(std::chrono::milliseconds ms) {
        deadline = std::chrono::steady_clock::now() + ms;
        has_deadline = true;
    }

    bool tick_stop() {
        if (timed_out) return true;
        if (has_deadline && (++tick & 1023) == 0 &&
            std::chrono::steady_clock::now() >= deadline)
            timed_out = true;
        return timed_out;
    }

    // Run a constraint outcome, then the continuation; undo on failure.
    bool apply_constraint(ures r, size_t m, const cont& k) {
        if (r == ures::ok) {
            if (k()) return true;
        } else if (r == ures::incomplete) {
            cs.saw_incomplete = true;
        }
        cs.undo(m);
        return false;
    }

    bool run(const goal& g, int d, const cont& k) {
        env e;
        return solve(g, d, e, k);
    }

    bool solve(const goal& g, int d, const env& e, const cont& k) {
        if (tick_stop()) return true;
        switch (g->k) {
            case gkind::top:
                return k();
            case gkind::bot:
                return false;
            case gkind::eq: {
                size_t m = cs.mark();
                ures r = cs.unify(env_term(g->t, e), env_term(g->u, e));
                return apply_constraint(r, m, k);
            }
            case gkind::fresh: {
                term a = cs.walk(env_term(g->t, e));
                if (a->k != tkind::name) {
                    // freshness with an uninstantiated name position is out
                    // of the fragment we decide
                    cs.saw_incomplete = true;
                    return false;
                }
                size_t m = cs.mark();
                return apply_constraint(cs.fresh(a->id, env_term(g->u, e)), m, k);
            }
            case gkind::atom:
                return solve_atom(g->pred, env_term(g->t, e), d, k);
            case gkind::conj:
                return solve(g->g1, d, e, [&] { return solve(g->g2, d, e, k); });
            case gkind::disj:
                if (solve(g->g1, d, e, k)) return true;
                return solve(g->g2, d, e, k);
            case gkind::exists: {
                env e2 = e;
                e2.vmap[g->bind] = mk_var(st().fresh_var(g->ty, st().var(g->bind).display));
                return solve(g->g1, d, e2, k);
            }
            case gkind::nu: {
                env e2 = e;
                uint32_t a = st().fresh_name(g->ntype, st().name(g->bind).display);
                e2.nmap[g->bind] = a;
                ctx_names.push_back(a);
                bool r = solve(g->g1, d, e2, k);
                ctx_names.pop_back();
                return r;
            }
            case gkind::conc: {
                // t = <a>X and body, X fresh (younger than a, so it may
                // mention it)
                term t = env_term(g->t, e);
                uint32_t a = env_name(g->bind2, e);
                env e2 = e;
                uint32_t x = st().fresh_var(g->ty, st().var(g->bind).display);
                e2.vmap[g->bind] = mk_var(x);
                size_t m = cs.mark();
                ures r = cs.unify(t, mk_abs(a, mk_var(x)));
                return apply_constraint(r, m, [&] { return solve(g->g1, d, e2, k); });
            }
            case gkind::gen_name: {
                term t = env_term(g->t, e);
                std::vector<uint32_t> cands;
                for (uint32_t a : ctx_names)
                    if (st().name(a).ntype == g->ntype) cands.push_back(a);
                for (uint32_t a : cands) {
                    size_t m = cs.mark();
                    if (apply_constraint(cs.unify(t, mk_name(a)), m, k)) return true;
                    if (tick_stop()) return true;
                }
                // one genuinely new name, hoisted to the outermost prefix so
                // older query variables may still be bound to terms using it
                uint32_t b = st().fresh_name_hoisted(g->ntype, gen_display(g->ntype));
                ctx_names.push_back(b);
                size_t m = cs.mark();
                bool r = apply_constraint(cs.unify(t, mk_name(b)), m, k);
                ctx_names.pop_back();
                return r;
            }
            case gkind::fstar: {
                const goal& body = g->g1;
                return uni_inst(
                    g->ty, d,
                    [&](const term& t, int d2, const cont& next) {
                        env e2 = e;
                        e2.vmap[g->bind] = t;
                        return solve(body, d2, e2, next);
                    },
                    k);
            }
            case gkind::nf_not: {
                const goal& a = g->g1;
                if (a->k != gkind::atom)
                    throw solve_error("negation-as-failure applies to atoms only");
                term arg = cs.resolve(env_term(a->t, e));
                if (!cs.is_ground(arg))
                    throw solve_error("non-ground negation: " +
                                      prog->sig.syms.str(a->pred));
                size_t m = cs.mark();
                bool found = solve_atom(a->pred, arg, d, [] { return true; });
                cs.undo(m);
                if (timed_out) return true;
                if (found) return false;
                return k();
            }
        }
        return false;
    }

    bool solve_atom(sym p, const term& arg, int d, const cont& k) {
        if (tick_stop()) return true;
        if (d <= 0) {
            cut_count++;
            return false;
        }
        sel_count++;
        if (trace) trace_sel(p, arg, d);
        for (uint32_t ci : prog->def(p)) {
            const horn_clause& c = prog->clauses[ci];
            env e2;
            for (uint32_t n : c.names) {
                uint32_t rn = st().fresh_name(st().name(n).ntype, st().name(n).display);
                e2.nmap[n] = rn;
            }
            for (uint32_t v : c.vars)
                e2.vmap[v] = mk_var(st().fresh_var(st().var(v).ty, st().var(v).display));
            size_t nctx = e2.nmap.size();
            for (auto& [cn, rn] : e2.nmap) {
                (void)cn;
                ctx_names.push_back(rn);
            }
            size_t m = cs.mark();
            ures r = cs.unify(arg, env_term(c.head, e2));
            bool stop = false;
            if (r == ures::ok) {
                tdepth++;
                stop = solve(c.body, d - 1, e2, k);
                tdepth--;
            } else if (r == ures::incomplete) {
                cs.saw_incomplete = true;
            }
            if (stop) {
                ctx_names.resize(ctx_names.size() - nctx);
                return true;
            }
            cs.undo(m);
            ctx_names.resize(ctx_names.size() - nctx);
            if (tick_stop()) return true;
        }
        return false;
    }

    // forall* approximation: either a generic instance (an eigenvariable,
    // free) or one split layer (cost one) casing on the type structure.
    // use(t, d, next) instantiates the bound variable to t with budget d
    // and continues with next; conjunctive obligations chain through next.
    using inst_fn = std::function<bool(const term&, int, const cont&)>;

    bool uni_inst(const type_ptr& ty, int d, const inst_fn& use, const cont& next) {
        if (tick_stop()) return true;
        {
            size_t m = cs.mark();
            uint32_t u = st().fresh_var(ty, "_U", true);
            if (use(mk_var(u), d, next)) return true;
            cs.undo(m);
            if (tick_stop()) return true;
        }
        if (d <= 0) {
            cut_count++;
            return false;
        }
        int d2 = d - 1;
        switch (ty->k) {
            case tykind::unit:
                return use(mk_unit(), d2, next);
            case tykind::pair:
                return uni_inst(
                    ty->a, d2,
                    [&](const term& x, int d3, const cont& nx) {
                        return uni_inst(
                            ty->b, d3,
                            [&](const term& y, int d4, const cont& nx2) {
                                return use(mk_pair(x, y), d4, nx2);
                            },
                            nx);
                    },
                    next);
            case tykind::abs: {
                uint32_t b = st().fresh_name(ty->head, gen_display(ty->head));
                ctx_names.push_back(b);
                bool r = uni_inst(
                    ty->a, d2,
                    [&](const term& x, int d3, const cont& nx) {
                        return use(mk_abs(b, x), d3, nx);
                    },
                    next);
                ctx_names.pop_back();
                return r;
            }
            case tykind::name: {
                // every name in scope, plus one fresh: a case per name, all
                // of which must hold
                std::vector<uint32_t> cands;
                for (uint32_t a : ctx_names)
                    if (st().name(a).ntype == ty->head) cands.push_back(a);
                uint32_t b = st().fresh_name(ty->head, gen_display(ty->head));
                cands.push_back(b);
                ctx_names.push_back(b);
                std::function<bool(size_t)> go = [&](size_t i) -> bool {
                    if (i == cands.size()) return next();
                    return use(mk_name(cands[i]), d2, [&] { return go(i + 1); });
                };
                bool r = go(0);
                ctx_names.pop_back();
                return r;
            }
            case tykind::base: {
                auto co = prog->sig.ctors_of.find(ty->head);
                const std::vector<sym>* cl = co == prog->sig.ctors_of.end()
                                                 ? nullptr
                                                 : &co->second;
                std::function<bool(size_t)> go = [&](size_t i) -> bool {
                    if (!cl || i == cl->size()) return next();
                    const ctor_info& ci = prog->sig.ctors.at((*cl)[i]);
                    return inst_spine(
                        ci.arg, d2,
                        [&, f = ci.name](const term& x, int d3, const cont& nx) {
                            return use(mk_app(f, x), d3, nx);
                        },
                        [&] { return go(i + 1); });
                };
                return go(0);
            }
        }
        return false;
    }

    // Instantiate one constructor-argument pattern.  Tuple structure and the
    // unit argument of nullary constructors belong to the same split layer
    // as the constructor itself; only real component types recurse into
    // their own generic-or-split choice.
    bool inst_spine(const type_ptr& ty, int d, const inst_fn& use, const cont& next) {
        switch (ty->k) {
            case tykind::unit:
                return use(mk_unit(), d, next);
            case tykind::pair:
                return inst_spine(
                    ty->a, d,
                    [&](const term& x, int d2, const cont& nx) {
                        return inst_spine(
                            ty->b, d2,
                            [&](const term& y, int d3, const cont& nx2) {
                                return use(mk_pair(x, y), d3, nx2);
                            },
                            nx);
                    },
                    next);
            default:
                return uni_inst(ty, d, use, next);
        }
    }

    // Focused backchaining on a definite formula for the target atom.
    bool backchain(const dform& dr, sym p, const term& arg, int d, const env& e,
                   const cont& k) {
        if (tick_stop()) return true;
        switch (dr->k) {
            case dfkind::top:
                return false;
            case dfkind::bot:
                return k();
            case dfkind::atom: {
                if (dr->pred != p) return false;
                size_t m = cs.mark();
                return apply_constraint(cs.unify(arg, env_term(dr->t, e)), m, k);
            }
            case dfkind::conj:
                if (backchain(dr->d1, p, arg, d, e, k)) return true;
                return backchain(dr->d2, p, arg, d, e, k);
            case dfkind::imp:
                return backchain(dr->d1, p, arg, d, e,
                                 [&] { return solve(dr->g, d, e, k); });
            case dfkind::all: {
                env e2 = e;
                e2.vmap[dr->bind] =
                    mk_var(st().fresh_var(dr->ty, st().var(dr->bind).display));
                return backchain(dr->d1, p, arg, d, e2, k);
            }
            case dfkind::disj:
                // the goal must follow from either disjunct
                return backchain(dr->d1, p, arg, d, e,
                                 [&] { return backchain(dr->d2, p, arg, d, e, k); });
        }
        return false;
    }

    std::string gen_display(sym ntype) {
        std::string base = prog->sig.syms.str(ntype);
        char c = base.empty() ? 'n' : (char)std::tolower((unsigned char)base[0]);
        return std::string(1, c) + std::to_string(++gen_seq);
    }

    void trace_sel(sym p, const term& arg, int d) {
        printer pr{&prog->sig, &st(), {}};
        *trace << std::string((size_t)tdepth * 2, ' ') << pr.term_str(arg)
               << " : " << prog->sig.syms.str(p) << " [" << d << "]\n";
    }
};

// Enumerate answers of pred(arg): each success records the resolved values
// of the report variables.  Stops after max_answers.
struct query_answer {
    std::vector<term> vals;
};

inline std::vector<query_answer> run_query(solver& sv, sym p, const term& arg,
                                           int depth,
                                           const std::vector<uint32_t>& report_vars,
                                           size_t max_answers = (size_t)-1) {
    std::vector<query_answer> out;
    sv.solve_atom(p, arg, depth, [&] {
        query_answer qa;
        qa.vals.reserve(report_vars.size());
        for (uint32_t v : report_vars) qa.vals.push_back(sv.cs.resolve(mk_var(v)));
        out.push_back(std::move(qa));
        return out.size() >= max_answers;
    });
    return out;
}

}  // namespace nomcheck
