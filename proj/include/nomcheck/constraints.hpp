#pragma once
// Nominal constraint solving: unification and freshness over the mutable
// store, with an undo trail for backtracking.
//
// Solved form: acyclic bindings var -> term plus suspended freshness atoms
// a # X on unbound variables.  Scope discipline is stamp-based: every name
// and variable carries a creation stamp from one shared counter.  Binding a
// variable X to a value mentioning a name younger than X demands that the
// name be provably fresh for the value (so binder-protected occurrences are
// fine); unbound variables inside the value are demoted to X's stamp so the
// rule stays transitive.  Universal (frozen) variables refuse bindings
// entirely; freshness against them is decided by stamp or type reachability.

#include "syntax.hpp"

namespace nomcheck {

enum class ures : uint8_t { ok, fail, incomplete };

inline ures ures_join(ures a, ures b) {
    if (a == ures::fail || b == ures::fail) return ures::fail;
    if (a == ures::incomplete || b == ures::incomplete) return ures::incomplete;
    return ures::ok;
}

struct cstate {
    store* st;
    const signature* sig;
    name_reach* reach;
    bool saw_incomplete = false;

    enum class tk : uint8_t { bind, suspend, stamp, universal, shield };
    struct entry { tk k; uint32_t id; uint64_t aux; };
    std::vector<entry> tr;
    std::vector<std::vector<uint32_t>> shield_saved;

    size_t mark() const { return tr.size(); }

    void undo(size_t m) {
        while (tr.size() > m) {
            entry e = tr.back();
            tr.pop_back();
            switch (e.k) {
                case tk::bind:      st->var(e.id).binding = nullptr; break;
                case tk::suspend:   st->var(e.id).suspended.pop_back(); break;
                case tk::stamp:     st->var(e.id).stamp = e.aux; break;
                case tk::universal: st->var(e.id).universal = (e.aux != 0); break;
                case tk::shield:
                    st->var(e.id).shield = std::move(shield_saved.back());
                    shield_saved.pop_back();
                    break;
            }
        }
    }

    static bool shield_has(const var_info& vi, uint32_t a) {
        for (uint32_t s : vi.shield)
            if (s == a) return true;
        return false;
    }

    bool bound(uint32_t v) const { return st->var(v).binding != nullptr; }

    // Shallow dereference: resolve bound variables, pushing suspended
    // permutations into the binding.
    term walk(term t) const {
        while (t->k == tkind::var) {
            const var_info& vi = st->var(t->id);
            if (!vi.binding) return t;
            t = swap_term(t->p, vi.binding);
        }
        return t;
    }

    // Deep substitution; unbound variables keep their suspensions.
    term resolve(const term& t0) const {
        term t = walk(t0);
        switch (t->k) {
            case tkind::name: case tkind::var: case tkind::unit: return t;
            case tkind::pair: return mk_pair(resolve(t->a), resolve(t->b));
            case tkind::abs:  return mk_abs(t->id, resolve(t->a));
            case tkind::app:  return mk_app(t->f, resolve(t->a));
        }
        return t;
    }

    bool occurs_var(uint32_t x, const term& t0) const {
        term t = walk(t0);
        switch (t->k) {
            case tkind::var:  return t->id == x;
            case tkind::pair: return occurs_var(x, t->a) || occurs_var(x, t->b);
            case tkind::abs:  return occurs_var(x, t->a);
            case tkind::app:  return occurs_var(x, t->a);
            default: return false;
        }
    }

    void set_universal(uint32_t v, bool u) {
        tr.push_back({tk::universal, v, st->var(v).universal ? 1ull : 0ull});
        st->var(v).universal = u;
    }

    void demote(uint32_t v, uint64_t stamp) {
        var_info& vi = st->var(v);
        if (vi.stamp > stamp) {
            tr.push_back({tk::stamp, v, vi.stamp});
            vi.stamp = stamp;
        }
    }

    // Demote y because it occurs in a value being given to a variable with
    // stamp xstamp and shield xshield; path holds the abstraction binders
    // above y's occurrence.  The set of names y may contain becomes
    //   allowed(y) := allowed(y) /\ (allowed(x) u path),
    // represented as a stamp cutoff plus an explicit shield for the names a
    // young name context still permits.  allowed(y) only ever shrinks.
    void demote_shield(uint32_t y, uint64_t xstamp,
                       const std::vector<uint32_t>& xshield,
                       const std::vector<uint32_t>& path) {
        var_info& vi = st->var(y);
        uint64_t eff = std::min(vi.stamp, xstamp);
        std::vector<uint32_t> cand;
        cand.insert(cand.end(), vi.shield.begin(), vi.shield.end());
        cand.insert(cand.end(), xshield.begin(), xshield.end());
        cand.insert(cand.end(), path.begin(), path.end());
        std::vector<uint32_t> ns;
        std::set<uint32_t> seen;
        auto has = [](const std::vector<uint32_t>& v, uint32_t a) {
            for (uint32_t s : v)
                if (s == a) return true;
            return false;
        };
        for (uint32_t a : cand) {
            if (!seen.insert(a).second) continue;
            uint64_t as = st->name(a).stamp;
            if (as < eff) continue;  // allowed by age alone
            bool in_y = as < vi.stamp || shield_has(vi, a);
            bool in_x = as < xstamp || has(xshield, a) || has(path, a);
            if (in_y && in_x) ns.push_back(a);
        }
        if (vi.stamp != eff) {
            tr.push_back({tk::stamp, y, vi.stamp});
            vi.stamp = eff;
        }
        if (ns != vi.shield) {
            tr.push_back({tk::shield, y, 0});
            shield_saved.push_back(std::move(vi.shield));
            vi.shield = std::move(ns);
        }
    }

    void suspend(uint32_t name_id, uint32_t v) {
        var_info& vi = st->var(v);
        for (uint32_t s : vi.suspended)
            if (s == name_id) return;
        vi.suspended.push_back(name_id);
        tr.push_back({tk::suspend, v, 0});
    }

    // a # t
    ures fresh(uint32_t a, const term& t0) {
        term t = walk(t0);
        switch (t->k) {
            case tkind::name:
                return t->id == a ? ures::fail : ures::ok;
            case tkind::unit:
                return ures::ok;
            case tkind::pair: {
                ures r = fresh(a, t->a);
                if (r == ures::fail) return r;
                return ures_join(r, fresh(a, t->b));
            }
            case tkind::abs:
                if (t->id == a) return ures::ok;
                return fresh(a, t->a);
            case tkind::app:
                return fresh(a, t->a);
            case tkind::var: {
                uint32_t b = perm_apply(perm_inverse(t->p), a);
                const var_info& vi = st->var(t->id);
                const name_info& ni = st->name(b);
                if (vi.universal) {
                    if (ni.stamp > vi.stamp) return ures::ok;
                    if (!reach->reaches(vi.ty, ni.ntype)) return ures::ok;
                    saw_incomplete = true;
                    return ures::incomplete;
                }
                // names younger than the variable and not on its shield can
                // never enter its value
                if (ni.stamp > vi.stamp && !shield_has(vi, b)) return ures::ok;
                suspend(b, t->id);
                return ures::ok;
            }
        }
        return ures::fail;
    }

    // Scope scan prior to binding x := v: names younger than x must be fresh
    // for v; unbound variables in v are demoted; young universals are fatal.
    ures scope_check(uint32_t x, const term& v) {
        uint64_t xstamp = st->var(x).stamp;
        std::set<uint32_t> names;
        std::vector<uint32_t> path;
        ures r = scan(v, xstamp, st->var(x).shield, path, names);
        if (r == ures::fail) return r;
        for (uint32_t a : names) {
            if (st->name(a).stamp <= xstamp) continue;
            if (shield_has(st->var(x), a)) continue;
            r = ures_join(r, fresh(a, v));
            if (r == ures::fail) return r;
        }
        return r;
    }

    ures bind(uint32_t x, const term& value) {
        if (st->var(x).universal) return ures::fail;
        if (occurs_var(x, value)) return ures::fail;
        ures r = scope_check(x, value);
        if (r != ures::ok) return r;
        var_info& vi = st->var(x);
        vi.binding = value;
        tr.push_back({tk::bind, x, 0});
        // wake suspended freshness constraints
        std::vector<uint32_t> pending = vi.suspended;
        for (uint32_t a : pending) {
            r = ures_join(r, fresh(a, value));
            if (r == ures::fail) return r;
        }
        return r;
    }

    ures unify(const term& t0, const term& u0) {
        term t = walk(t0), u = walk(u0);
        if (t->k == tkind::var && u->k == tkind::var && t->id == u->id) {
            // pi.X = pi'.X: names where the permutations disagree are fresh for X
            std::set<uint32_t> cand;
            for (auto& tr_ : t->p) { cand.insert(tr_.first); cand.insert(tr_.second); }
            for (auto& tr_ : u->p) { cand.insert(tr_.first); cand.insert(tr_.second); }
            ures r = ures::ok;
            for (uint32_t a : cand) {
                if (perm_apply(t->p, a) == perm_apply(u->p, a)) continue;
                r = ures_join(r, fresh(a, mk_var(t->id)));
                if (r == ures::fail) return r;
            }
            return r;
        }
        if (t->k == tkind::var || u->k == tkind::var) {
            // prefer binding an existential; among two, the younger one
            bool t_ex = t->k == tkind::var && !st->var(t->id).universal;
            bool u_ex = u->k == tkind::var && !st->var(u->id).universal;
            if (t_ex && u_ex && st->var(u->id).stamp > st->var(t->id).stamp) std::swap(t, u);
            else if (!t_ex && u_ex) std::swap(t, u);
            if (t->k != tkind::var || st->var(t->id).universal) return ures::fail;
            return bind(t->id, swap_term(perm_inverse(t->p), u));
        }
        if (t->k != u->k) return ures::fail;
        switch (t->k) {
            case tkind::name: return t->id == u->id ? ures::ok : ures::fail;
            case tkind::unit: return ures::ok;
            case tkind::pair: {
                ures r = unify(t->a, u->a);
                if (r == ures::fail) return r;
                return ures_join(r, unify(t->b, u->b));
            }
            case tkind::app:
                if (t->f != u->f) return ures::fail;
                return unify(t->a, u->a);
            case tkind::abs: {
                if (t->id == u->id) return unify(t->a, u->a);
                ures r = unify(t->a, swap_names(t->id, u->id, u->a));
                if (r == ures::fail) return r;
                return ures_join(r, fresh(t->id, u->a));
            }
            default: return ures::fail;
        }
    }

    // Entailment: does the current constraint store force t = u (resp. a # t)
    // in every solution?  Checked by running the operation and requiring that
    // it succeeds without recording new bindings or suspensions.
    bool entails_eq(const term& t, const term& u) {
        size_t m = mark();
        ures r = unify(t, u);
        bool extended = added_constraints(m);
        undo(m);
        return r == ures::ok && !extended;
    }

    bool entails_fresh(uint32_t a, const term& t) {
        size_t m = mark();
        ures r = fresh(a, t);
        bool extended = added_constraints(m);
        undo(m);
        return r == ures::ok && !extended;
    }

    bool added_constraints(size_t m) const {
        for (size_t i = m; i < tr.size(); i++)
            if (tr[i].k == tk::bind || tr[i].k == tk::suspend) return true;
        return false;
    }

    bool is_ground(const term& t0) const {
        term t = walk(t0);
        switch (t->k) {
            case tkind::var:  return false;
            case tkind::pair: return is_ground(t->a) && is_ground(t->b);
            case tkind::abs:  return is_ground(t->a);
            case tkind::app:  return is_ground(t->a);
            default: return true;
        }
    }

private:
    // Collect candidate young names and handle variables for scope_check.
    // path tracks the abstraction binders above the current position.
    ures scan(const term& t0, uint64_t xstamp, const std::vector<uint32_t>& xshield,
              std::vector<uint32_t>& path, std::set<uint32_t>& names) {
        term t = walk(t0);
        switch (t->k) {
            case tkind::name: names.insert(t->id); return ures::ok;
            case tkind::unit: return ures::ok;
            case tkind::pair: {
                ures r = scan(t->a, xstamp, xshield, path, names);
                if (r == ures::fail) return r;
                return ures_join(r, scan(t->b, xstamp, xshield, path, names));
            }
            case tkind::abs: {
                names.insert(t->id);
                path.push_back(t->id);
                ures r = scan(t->a, xstamp, xshield, path, names);
                path.pop_back();
                return r;
            }
            case tkind::app:
                return scan(t->a, xstamp, xshield, path, names);
            case tkind::var: {
                for (auto& tp : t->p) { names.insert(tp.first); names.insert(tp.second); }
                var_info& vi = st->var(t->id);
                if (vi.universal) {
                    if (vi.stamp > xstamp) return ures::fail;  // eigenvariable escape
                    return ures::ok;
                }
                if (t->p.empty()) {
                    demote_shield(t->id, xstamp, xshield, path);
                } else {
                    // a suspended permutation relocates names, so claim no
                    // binder protection through it
                    static const std::vector<uint32_t> none;
                    demote_shield(t->id, xstamp, none, none);
                }
                return ures::ok;
            }
        }
        return ures::ok;
    }
};

} // namespace nomcheck
