// Negation elimination: synthesize a complement predicate not_p for every
// source predicate p, so that not_p succeeds exactly where p finitely fails.
//
// Each source clause contributes one disjunct: a factual part built from the
// term complement of its head (arguments that clash with the head) plus one
// clause whose body is the negated source body.  The per-clause disjuncts
// are then merged into a single definition by simulating unification,
//
//   (G1 => Q1) \/ (G2 => Q2)   ==   theta(G1 /\ G2 => Q1),  theta = mgu(Q1,Q2)
//
// folding left to right over source clause order.  Merging produces many
// redundant instances, so the fold is optionally interleaved with forward
// and backward subsumption, checked by running the interpreter itself on
// frozen clause variables at a small budget.

#pragma once

#include <nomcheck/complement.hpp>
#include <nomcheck/solver.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace nomcheck {

namespace detail {

inline goal disj2(const goal& a, const goal& b) {
    if (a->k == gkind::bot) return b;
    if (b->k == gkind::bot) return a;
    if (a->k == gkind::top || b->k == gkind::top) return g_top();
    return g_disj(a, b);
}

// Apply the current constraint store bindings throughout a goal.  Binder ids
// are left alone: head unification only ever binds clause-level variables.
inline goal resolve_goal(const cstate& cs, const goal& g) {
    if (!g) return g;
    goal_node n = *g;
    if (n.t) n.t = cs.resolve(n.t);
    if (n.u) n.u = cs.resolve(n.u);
    n.g1 = resolve_goal(cs, g->g1);
    n.g2 = resolve_goal(cs, g->g2);
    return std::make_shared<goal_node>(std::move(n));
}

// Eager version of the solver's lazy clause renaming, for goals that are
// inspected structurally rather than solved.
inline goal env_goal(const goal& g, const env& e) {
    if (!g) return g;
    goal_node n = *g;
    if (n.t) n.t = env_term(n.t, e);
    if (n.u) n.u = env_term(n.u, e);
    if (n.k == gkind::conc) n.bind2 = env_name(n.bind2, e);
    n.g1 = env_goal(g->g1, e);
    n.g2 = env_goal(g->g2, e);
    return std::make_shared<goal_node>(std::move(n));
}

inline term subst_var_term(const term& t, uint32_t x, const term& r) {
    switch (t->k) {
        case tkind::var:
            if (t->id != x) return t;
            return t->p.empty() ? r : swap_term(t->p, r);
        case tkind::pair: {
            term a = subst_var_term(t->a, x, r), b = subst_var_term(t->b, x, r);
            return a == t->a && b == t->b ? t : mk_pair(std::move(a), std::move(b));
        }
        case tkind::abs: {
            term a = subst_var_term(t->a, x, r);
            return a == t->a ? t : mk_abs(t->id, std::move(a));
        }
        case tkind::app: {
            term a = subst_var_term(t->a, x, r);
            return a == t->a ? t : mk_app(t->f, std::move(a));
        }
        default:
            return t;
    }
}

inline goal subst_var_goal(const goal& g, uint32_t x, const term& r) {
    if (!g) return g;
    goal_node n = *g;
    if (n.t) n.t = subst_var_term(n.t, x, r);
    if (n.u) n.u = subst_var_term(n.u, x, r);
    n.g1 = subst_var_goal(g->g1, x, r);
    n.g2 = subst_var_goal(g->g2, x, r);
    return std::make_shared<goal_node>(std::move(n));
}

// rename name a to name b; binder ids are globally fresh, so no capture
inline term rename_name_term(const term& t, uint32_t a, uint32_t b) {
    switch (t->k) {
        case tkind::name:
            return t->id == a ? mk_name(b) : t;
        case tkind::var: {
            if (t->p.empty()) return t;
            perm q = t->p;
            for (auto& tr : q) {
                if (tr.first == a) tr.first = b;
                if (tr.second == a) tr.second = b;
            }
            return mk_svar(std::move(q), t->id);
        }
        case tkind::pair:
            return mk_pair(rename_name_term(t->a, a, b), rename_name_term(t->b, a, b));
        case tkind::abs:
            return mk_abs(t->id == a ? b : t->id, rename_name_term(t->a, a, b));
        case tkind::app:
            return mk_app(t->f, rename_name_term(t->a, a, b));
        default:
            return t;
    }
}

inline goal rename_name_goal(const goal& g, uint32_t a, uint32_t b) {
    if (!g) return g;
    goal_node n = *g;
    if (n.t) n.t = rename_name_term(n.t, a, b);
    if (n.u) n.u = rename_name_term(n.u, a, b);
    if (n.k == gkind::nu && n.bind == a) n.bind = b;
    if (n.k == gkind::conc && n.bind2 == a) n.bind2 = b;
    n.g1 = rename_name_goal(g->g1, a, b);
    n.g2 = rename_name_goal(g->g2, a, b);
    return std::make_shared<goal_node>(std::move(n));
}

inline bool has_fstar(const goal& g) {
    if (!g) return false;
    if (g->k == gkind::fstar) return true;
    return has_fstar(g->g1) || has_fstar(g->g2);
}

// syntactic identity on resolved goals, for the axiom rule of the
// subsumption sequent loop; deliberately not alpha-aware
inline bool term_ident(const term& a, const term& b) {
    if (a == b) return true;
    if (a->k != b->k) return false;
    switch (a->k) {
        case tkind::unit: return true;
        case tkind::name: return a->id == b->id;
        case tkind::var:  return a->id == b->id && a->p == b->p;
        case tkind::pair: return term_ident(a->a, b->a) && term_ident(a->b, b->b);
        case tkind::abs:  return a->id == b->id && term_ident(a->a, b->a);
        case tkind::app:  return a->f == b->f && term_ident(a->a, b->a);
        default: return false;
    }
}

inline bool goal_ident(const goal& a, const goal& b) {
    if (a == b) return true;
    if (!a || !b || a->k != b->k) return false;
    if (a->pred != b->pred || a->ntype != b->ntype) return false;
    if (a->bind != b->bind || a->bind2 != b->bind2) return false;
    if ((bool)a->t != (bool)b->t || (a->t && !term_ident(a->t, b->t))) return false;
    if ((bool)a->u != (bool)b->u || (a->u && !term_ident(a->u, b->u))) return false;
    if ((bool)a->ty != (bool)b->ty || (a->ty && !type_eq(a->ty, b->ty))) return false;
    return goal_ident(a->g1, b->g1) && goal_ident(a->g2, b->g2);
}

} // namespace detail

struct ne_stat {
    sym pred;     // source predicate
    sym npred;    // its complement
    int raw;      // clauses the plain merge produces
    int kept;     // clauses after subsumption (equal to raw without it)
};

struct neg_transform {
    program* p;
    gen_emit ge;
    solver slv;                 // entailment runs for subsumption
    bool use_subsumption;
    std::map<sym, sym> not_of;  // p -> not_p
    std::map<sym, sym> pos_of;  // not_p -> p, so negation is an involution
    std::vector<ne_stat> stats;

    neg_transform(program& pr, bool subsumption)
        : p(&pr), ge(pr), slv(pr), use_subsumption(subsumption) {}

    // ------------------------------------------------------- goal negation

    goal negate_goal(const goal& g) {
        switch (g->k) {
            case gkind::top: return g_bot();
            case gkind::bot: return g_top();
            case gkind::eq:  return ge.neq(g->ty, g->t, g->u);
            case gkind::fresh: return ge.nfr(g->ntype, g->ty, g->t, g->u);
            case gkind::atom: {
                auto it = not_of.find(g->pred);
                if (it != not_of.end()) return g_atom(it->second, g->t);
                auto jt = pos_of.find(g->pred);
                if (jt != pos_of.end()) return g_atom(jt->second, g->t);
                throw transform_error("no complement registered for predicate " +
                                      p->sig.syms.str(g->pred));
            }
            case gkind::conj: return detail::disj2(negate_goal(g->g1), negate_goal(g->g2));
            case gkind::disj: return detail::conj2(negate_goal(g->g1), negate_goal(g->g2));
            case gkind::exists: return g_fstar(g->bind, g->ty, negate_goal(g->g1));
            case gkind::fstar:  return g_exists(g->bind, g->ty, negate_goal(g->g1));
            // the fresh-name quantifier is self dual, and a concretion under
            // one picks out a unique body, so both pass through negation
            case gkind::nu:
                return g_new(g->bind, g->ntype, negate_goal(g->g1));
            case gkind::conc:
                return g_conc(g->t, g->bind2, g->bind, g->ty, negate_goal(g->g1));
            default:
                throw transform_error("goal form outside the source fragment");
        }
    }

    // ----------------------------------------------------- clause negation

    horn_clause finish_clause(sym pred, term head, goal body, int line) const {
        horn_clause c;
        c.pred = pred;
        c.head = std::move(head);
        c.body = std::move(body);
        c.src_line = line;
        std::set<uint32_t> vseen, vbound;
        free_vars_into(c.head, c.vars, vseen);
        goal_free_vars_into(c.body, vbound, c.vars, vseen);
        std::set<uint32_t> nbound, nseen;
        for (auto& oc : free_names(c.head))
            if (nseen.insert(oc.name).second) c.names.push_back(oc.name);
        goal_free_names_into(c.body, nbound, c.names, nseen);
        return c;
    }

    // one disjunct: the factual part, then the negated-body clause
    std::vector<horn_clause> negate_clause(const horn_clause& src, const pred_info& pi, sym nq) {
        horn_clause c = linearize_head(*p, src);
        std::vector<horn_clause> out;
        for (term& u : not_type(*p, pi.arg, c.head))
            out.push_back(finish_clause(nq, std::move(u), g_top(), src.src_line));

        std::vector<uint32_t> hv = free_vars(c.head);
        std::set<uint32_t> in_head(hv.begin(), hv.end());
        goal nb = negate_goal(c.body);
        std::vector<uint32_t> outer;
        for (uint32_t v : c.vars)
            if (!in_head.count(v)) outer.push_back(v);
        // a fact negates to a clause that can never fire; drop it
        if (nb->k == gkind::bot && outer.empty()) return out;
        for (size_t i = outer.size(); i-- > 0;)
            nb = g_fstar(outer[i], p->st.var(outer[i]).ty, nb);
        out.push_back(finish_clause(nq, c.head, std::move(nb), src.src_line));
        return out;
    }

    std::vector<std::vector<horn_clause>> negate_definition(sym q) {
        const pred_info& pi = p->sig.preds.at(q);
        sym nq = not_of.at(q);
        std::vector<std::vector<horn_clause>> djs;
        if (!p->defs.count(q)) return djs;
        std::vector<uint32_t> idx = p->defs.at(q);
        for (uint32_t ci : idx) {
            // copy: generating neq/nfr definitions appends to p->clauses
            horn_clause src = p->clauses[ci];
            djs.push_back(negate_clause(src, pi, nq));
        }
        return djs;
    }

    // ---------------------------------------------------------------- merge

    bool merge_clauses(const horn_clause& a, const horn_clause& b, horn_clause& out) {
        size_t m = slv.cs.mark();
        bool ok = slv.cs.unify(a.head, b.head) == ures::ok;
        if (ok) {
            term h = slv.cs.resolve(a.head);
            goal body = detail::conj2(detail::resolve_goal(slv.cs, a.body),
                                      detail::resolve_goal(slv.cs, b.body));
            out = finish_clause(a.pred, std::move(h), std::move(body),
                                a.src_line ? a.src_line : b.src_line);
        }
        slv.cs.undo(m);
        return ok;
    }

    std::vector<horn_clause> merge_disjunction(const std::vector<std::vector<horn_clause>>& djs,
                                               bool subsump) {
        if (djs.empty()) return {};
        std::vector<horn_clause> acc = djs[0];
        if (subsump) acc = simplify_definition(std::move(acc));
        for (size_t i = 1; i < djs.size(); i++) {
            std::vector<horn_clause> next;
            for (auto& a : acc)
                for (auto& b : djs[i]) {
                    horn_clause mc;
                    if (!merge_clauses(a, b, mc)) continue;
                    if (subsump) insert_clause(next, std::move(mc));
                    else next.push_back(std::move(mc));
                }
            acc = std::move(next);
        }
        if (subsump) acc = simplify_definition(std::move(acc));
        return acc;
    }

    std::vector<horn_clause> merge_disjunction(const std::vector<std::vector<horn_clause>>& djs) {
        return merge_disjunction(djs, use_subsumption);
    }

    // ---------------------------------------------------------- subsumption

    // Forward then backward: keep the incoming clause only if nothing kept
    // subsumes it, and evict anything it subsumes.  A single pass reaches a
    // fixpoint because subsumption between two clauses does not depend on
    // the rest of the set.
    void insert_clause(std::vector<horn_clause>& acc, horn_clause c) {
        for (auto& k : acc)
            if (subsumes(k, c)) return;
        acc.erase(std::remove_if(acc.begin(), acc.end(),
                                 [&](const horn_clause& k) { return subsumes(c, k); }),
                  acc.end());
        acc.push_back(std::move(c));
    }

    std::vector<horn_clause> simplify_definition(std::vector<horn_clause> in) {
        std::vector<horn_clause> out;
        for (auto& c : in) insert_clause(out, std::move(c));
        return out;
    }

    // Does c1 entail c2?  Freeze c2's variables so they act as constants,
    // match heads (only c1's renamed copy may bind), then derive c1's
    // instantiated body from c2's body.  Partial: anything undecided keeps
    // the clause.
    bool subsumes(const horn_clause& c1, const horn_clause& c2) {
        size_t m0 = slv.cs.mark();
        env e2;
        for (uint32_t n : c2.names)
            e2.nmap[n] = p->st.fresh_name(p->st.name(n).ntype, p->st.name(n).display);
        env e1;
        for (uint32_t v : c1.vars)
            e1.vmap[v] = mk_var(p->st.fresh_var(p->st.var(v).ty, p->st.var(v).display));
        // clause names are self-dual fresh-name quantifiers, so both sides
        // may be read at one shared sufficiently fresh name; pair them up
        // greedily by name type
        std::vector<char> used(c2.names.size(), 0);
        for (uint32_t n : c1.names) {
            bool found = false;
            for (size_t j = 0; j < c2.names.size(); j++)
                if (!used[j] && p->st.name(c2.names[j]).ntype == p->st.name(n).ntype) {
                    used[j] = 1;
                    e1.nmap[n] = e2.nmap.at(c2.names[j]);
                    found = true;
                    break;
                }
            if (!found)
                e1.nmap[n] = p->st.fresh_name(p->st.name(n).ntype, p->st.name(n).display);
        }
        for (uint32_t v : c2.vars) slv.cs.set_universal(v, true);
        bool res = false;
        if (slv.cs.unify(env_term(c1.head, e1), env_term(c2.head, e2)) == ures::ok)
            res = entail({detail::env_goal(c2.body, e2)}, detail::env_goal(c1.body, e1), 0);
        slv.cs.undo(m0);
        return res;
    }

private:
    // A small sequent loop over the fragment the interpreter cannot discharge
    // directly: assumptions are flattened and case-split, extensional
    // universals are paired off against a shared frozen eigenvariable, and
    // what remains runs as a depth-4 query with the assumption atoms as facts.
    bool entail(std::vector<goal> asms, goal tgt, int depth) {
        if (depth > 48) return false;
        for (size_t i = 0; i < asms.size();) {
            const goal a = asms[i];
            switch (a->k) {
                case gkind::top:
                    asms.erase(asms.begin() + (long)i);
                    continue;
                case gkind::bot:
                    return true;
                case gkind::conj:
                    asms[i] = a->g1;
                    asms.insert(asms.begin() + (long)i + 1, a->g2);
                    continue;
                case gkind::disj: {
                    std::vector<goal> l = asms, r = asms;
                    l[i] = a->g1;
                    r[i] = a->g2;
                    return entail(std::move(l), tgt, depth + 1) &&
                           entail(std::move(r), tgt, depth + 1);
                }
                case gkind::exists: {
                    // elimination: a fixed but unknown witness
                    uint32_t w = p->st.fresh_var(a->ty, p->st.var(a->bind).display, true);
                    asms[i] = detail::subst_var_goal(a->g1, a->bind, mk_var(w));
                    continue;
                }
                case gkind::gen_name: case gkind::nf_not:
                    // outside the decided fragment; weakening is sound
                    asms.erase(asms.begin() + (long)i);
                    continue;
                default:
                    ++i;   // fstar, nu and conc wait for the target phase
            }
        }
        if (tgt->k == gkind::top) return true;
        {
            goal rt = detail::resolve_goal(slv.cs, tgt);
            for (const goal& a : asms)
                if (detail::goal_ident(detail::resolve_goal(slv.cs, a), rt))
                    return true;   // axiom
        }
        if (tgt->k == gkind::conj)
            return entail(asms, tgt->g1, depth + 1) && entail(asms, tgt->g2, depth + 1);
        if (tgt->k == gkind::disj) {
            if (entail(asms, tgt->g1, depth + 1)) return true;
            return entail(asms, tgt->g2, depth + 1);
        }
        if (tgt->k == gkind::fstar) {
            for (size_t i = 0; i < asms.size(); i++) {
                if (asms[i]->k != gkind::fstar || !type_eq(asms[i]->ty, tgt->ty))
                    continue;
                uint32_t c = p->st.fresh_var(tgt->ty, "_k", true);
                std::vector<goal> rest = asms;
                rest[i] = detail::subst_var_goal(asms[i]->g1, asms[i]->bind, mk_var(c));
                if (entail(std::move(rest), detail::subst_var_goal(tgt->g1, tgt->bind, mk_var(c)),
                           depth + 1))
                    return true;
            }
            uint32_t c = p->st.fresh_var(tgt->ty, "_k", true);
            return entail(asms, detail::subst_var_goal(tgt->g1, tgt->bind, mk_var(c)), depth + 1);
        }
        if (tgt->k == gkind::nu) {
            // self-dual: read both quantifiers at one shared fresh name
            for (size_t i = 0; i < asms.size(); i++) {
                if (asms[i]->k != gkind::nu || asms[i]->ntype != tgt->ntype) continue;
                uint32_t n = p->st.fresh_name(tgt->ntype, "_k");
                std::vector<goal> rest = asms;
                rest[i] = detail::rename_name_goal(asms[i]->g1, asms[i]->bind, n);
                if (entail(std::move(rest), detail::rename_name_goal(tgt->g1, tgt->bind, n),
                           depth + 1))
                    return true;
            }
            uint32_t n = p->st.fresh_name(tgt->ntype, "_k");
            return entail(asms, detail::rename_name_goal(tgt->g1, tgt->bind, n), depth + 1);
        }
        if (tgt->k == gkind::conc) {
            // concretion at one name picks out a unique body, so identical
            // subjects concretize to a shared eigenvariable
            term ts = detail::resolve_goal(slv.cs, tgt)->t;
            for (size_t i = 0; i < asms.size(); i++) {
                if (asms[i]->k != gkind::conc || asms[i]->bind2 != tgt->bind2) continue;
                if (!type_eq(asms[i]->ty, tgt->ty)) continue;
                if (!detail::term_ident(detail::resolve_goal(slv.cs, asms[i])->t, ts)) continue;
                uint32_t w = p->st.fresh_var(tgt->ty, "_k", true);
                std::vector<goal> rest = asms;
                rest[i] = detail::subst_var_goal(asms[i]->g1, asms[i]->bind, mk_var(w));
                if (entail(std::move(rest),
                           detail::subst_var_goal(tgt->g1, tgt->bind, mk_var(w)), depth + 1))
                    return true;
            }
        }
        // remaining universal assumptions: pick an instance, lazily, through
        // an ordinary variable the leaf query is free to bind
        for (size_t i = 0; i < asms.size(); i++) {
            if (asms[i]->k == gkind::nu) {
                uint32_t n = p->st.fresh_name(asms[i]->ntype, "_k");
                asms[i] = detail::rename_name_goal(asms[i]->g1, asms[i]->bind, n);
                return entail(std::move(asms), std::move(tgt), depth + 1);
            }
            if (asms[i]->k != gkind::fstar) continue;
            uint32_t w = p->st.fresh_var(asms[i]->ty, p->st.var(asms[i]->bind).display);
            asms[i] = detail::subst_var_goal(asms[i]->g1, asms[i]->bind, mk_var(w));
            return entail(std::move(asms), std::move(tgt), depth + 1);
        }
        return leaf(asms, tgt);
    }

    bool leaf(const std::vector<goal>& asms, const goal& tgt) {
        size_t m = slv.cs.mark();
        std::vector<sym> added;
        bool undecided = false;
        for (const goal& a : asms) {
            if (a->k == gkind::atom) {
                p->add_clause(horn_clause{{}, {}, g_top(), a->pred, a->t, 0});
                added.push_back(a->pred);
            } else if (a->k == gkind::eq) {
                if (slv.cs.unify(a->t, a->u) != ures::ok) { undecided = true; break; }
            } else if (a->k == gkind::fresh) {
                term an = slv.cs.walk(a->t);
                if (an->k != tkind::name) continue;   // drop, cannot assume
                if (slv.cs.fresh(an->id, a->u) != ures::ok) { undecided = true; break; }
            }
        }
        bool res = false;
        if (!undecided) {
            env e;
            res = slv.solve(tgt, 4, e, [] { return true; });
        }
        for (size_t i = added.size(); i-- > 0;) {
            p->defs[added[i]].pop_back();
            p->clauses.pop_back();
        }
        slv.cs.undo(m);
        return res;
    }

public:
    // ------------------------------------------------------- whole program

    void run() {
        std::vector<sym> sources;
        for (sym q : p->sig.pred_order)
            if (!p->sig.preds.at(q).generated) sources.push_back(q);
        for (sym q : sources) {
            std::string nn = "not_" + p->sig.syms.str(q);
            if (auto s = p->sig.syms.lookup(nn); s && p->sig.preds.count(*s))
                throw transform_error("predicate name " + nn + " already in use");
        }
        for (sym q : sources) {
            const pred_info& pi = p->sig.preds.at(q);
            sym nq = p->sig.add_pred("not_" + p->sig.syms.str(q), pi.args, true);
            not_of[q] = nq;
            pos_of[nq] = q;
        }
        for (sym q : sources) {
            sym nq = not_of.at(q);
            auto djs = negate_definition(q);
            std::vector<horn_clause> merged;
            int raw;
            if (djs.empty()) {
                // nothing defines q, so its complement holds everywhere
                const pred_info& pi = p->sig.preds.at(q);
                merged.push_back(finish_clause(nq, complement_wildcard(*p, pi.arg), g_top(), 0));
                raw = 1;
            } else {
                std::vector<horn_clause> plain = merge_disjunction(djs, false);
                raw = (int)plain.size();
                merged = use_subsumption ? merge_disjunction(djs, true) : std::move(plain);
            }
            stats.push_back(ne_stat{q, nq, raw, (int)merged.size()});
            for (auto& c : merged) p->add_clause(std::move(c));
        }
    }
};

inline neg_transform negate_program(program& p, bool with_subsumption = true) {
    neg_transform t(p, with_subsumption);
    t.run();
    return t;
}

// ------------------------------------------------------------------ display

inline std::string show_negation(const program& p, const neg_transform& nt) {
    std::ostringstream os;
    for (const ne_stat& s : nt.stats) {
        const pred_info& pi = p.sig.preds.at(s.npred);
        os << "pred " << p.sig.syms.str(s.npred) << "(";
        for (size_t i = 0; i < pi.args.size(); i++)
            os << (i ? "," : "") << p.sig.type_str(pi.args[i]);
        os << ").\n";
        if (p.defs.count(s.npred))
            for (uint32_t ci : p.defs.at(s.npred))
                os << show_clause(p, p.clauses[ci]) << "\n";
        os << "\n";
    }
    return os.str();
}

inline std::string show_ne_stats(const program& p, const neg_transform& nt) {
    std::ostringstream os;
    for (const ne_stat& s : nt.stats)
        os << p.sig.syms.str(s.npred) << ": " << s.raw
           << " clauses before subsumption, " << s.kept << " after\n";
    return os.str();
}

} // namespace nomcheck
