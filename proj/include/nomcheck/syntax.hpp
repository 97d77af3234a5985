#pragma once
// Core syntax for a nominal Horn-clause language: types with name-abstraction,
// terms with swappings and suspended permutations, goals, and clauses.

#include <cassert>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace nomcheck {

using sym = uint32_t;
inline constexpr sym no_sym = 0xffffffffu;

struct strtab {
    std::vector<std::string> strs;
    std::unordered_map<std::string, sym> ids;

    sym intern(const std::string& s) {
        auto it = ids.find(s);
        if (it != ids.end()) return it->second;
        sym id = (sym)strs.size();
        strs.push_back(s);
        ids.emplace(s, id);
        return id;
    }
    const std::string& str(sym s) const { return strs[s]; }
    std::optional<sym> lookup(const std::string& s) const {
        auto it = ids.find(s);
        if (it == ids.end()) return std::nullopt;
        return it->second;
    }
};

// ---------------------------------------------------------------------------
// Types: base δ, name ν, unit, pair, abstraction <ν>τ

enum class tykind : uint8_t { base, name, unit, pair, abs };

struct type_expr;
using type_ptr = std::shared_ptr<const type_expr>;

struct type_expr {
    tykind k;
    sym head = no_sym;   // base: δ, name: ν, abs: binder name type ν
    type_ptr a, b;       // pair: components; abs: a = body
};

inline type_ptr ty_base(sym d) { return std::make_shared<type_expr>(type_expr{tykind::base, d, nullptr, nullptr}); }
inline type_ptr ty_name(sym n) { return std::make_shared<type_expr>(type_expr{tykind::name, n, nullptr, nullptr}); }
inline type_ptr ty_unit() {
    static type_ptr u = std::make_shared<type_expr>(type_expr{tykind::unit, no_sym, nullptr, nullptr});
    return u;
}
inline type_ptr ty_pair(type_ptr a, type_ptr b) {
    return std::make_shared<type_expr>(type_expr{tykind::pair, no_sym, std::move(a), std::move(b)});
}
inline type_ptr ty_abs(sym n, type_ptr body) {
    return std::make_shared<type_expr>(type_expr{tykind::abs, n, std::move(body), nullptr});
}

inline bool type_eq(const type_ptr& s, const type_ptr& t) {
    if (s.get() == t.get()) return true;
    if (!s || !t) return false;
    if (s->k != t->k || s->head != t->head) return false;
    switch (s->k) {
        case tykind::base: case tykind::name: case tykind::unit: return true;
        case tykind::pair: return type_eq(s->a, t->a) && type_eq(s->b, t->b);
        case tykind::abs:  return type_eq(s->a, t->a);
    }
    return false;
}

// Right-nested tuple helpers: (t1,...,tn) == t1 x (t2 x ... x tn).
inline type_ptr ty_tuple(const std::vector<type_ptr>& parts) {
    if (parts.empty()) return ty_unit();
    type_ptr acc = parts.back();
    for (size_t i = parts.size() - 1; i-- > 0;) acc = ty_pair(parts[i], acc);
    return acc;
}

// ---------------------------------------------------------------------------
// Permutations: lists of transpositions, outermost first.
// Applying [(a b), (b c)] to c applies (b c) first, then (a b).

using transposition = std::pair<uint32_t, uint32_t>;
using perm = std::vector<transposition>;

inline uint32_t perm_apply(const perm& p, uint32_t a) {
    for (size_t i = p.size(); i-- > 0;) {
        if (a == p[i].first) a = p[i].second;
        else if (a == p[i].second) a = p[i].first;
    }
    return a;
}

inline perm perm_compose(const perm& outer, const perm& inner) {
    perm r = outer;
    r.insert(r.end(), inner.begin(), inner.end());
    return r;
}

inline perm perm_inverse(const perm& p) {
    return perm(p.rbegin(), p.rend());
}

// Names moved by the permutation (conservative superset: all mentioned names).
inline std::set<uint32_t> perm_support(const perm& p) {
    std::set<uint32_t> s;
    for (auto& t : p) {
        if (perm_apply(p, t.first) != t.first) s.insert(t.first);
        if (perm_apply(p, t.second) != t.second) s.insert(t.second);
    }
    // also names that map nontrivially by interaction of swaps
    for (auto& t : p) { s.insert(t.first); s.insert(t.second); }
    std::set<uint32_t> moved;
    for (uint32_t a : s) if (perm_apply(p, a) != a) moved.insert(a);
    return moved;
}

inline bool perm_trivial(const perm& p) {
    if (p.empty()) return true;
    return perm_support(p).empty();
}

// ---------------------------------------------------------------------------
// Terms

enum class tkind : uint8_t { name, var, unit, pair, abs, app };

struct term_node;
using term = std::shared_ptr<const term_node>;

struct term_node {
    tkind k;
    uint32_t id = 0;   // name: name id; var: var id; abs: binder name id
    sym f = no_sym;    // app: constructor symbol
    perm p;            // var: suspended permutation
    term a, b;         // pair: components; abs: a = body; app: a = argument
};

inline term mk_name(uint32_t id) {
    return std::make_shared<term_node>(term_node{tkind::name, id, no_sym, {}, nullptr, nullptr});
}
inline term mk_var(uint32_t id) {
    return std::make_shared<term_node>(term_node{tkind::var, id, no_sym, {}, nullptr, nullptr});
}
inline term mk_svar(perm p, uint32_t id) {
    return std::make_shared<term_node>(term_node{tkind::var, id, no_sym, std::move(p), nullptr, nullptr});
}
inline term mk_unit() {
    static term u = std::make_shared<term_node>(term_node{tkind::unit, 0, no_sym, {}, nullptr, nullptr});
    return u;
}
inline term mk_pair(term a, term b) {
    return std::make_shared<term_node>(term_node{tkind::pair, 0, no_sym, {}, std::move(a), std::move(b)});
}
inline term mk_abs(uint32_t name_id, term body) {
    return std::make_shared<term_node>(term_node{tkind::abs, name_id, no_sym, {}, std::move(body), nullptr});
}
inline term mk_app(sym f, term arg) {
    return std::make_shared<term_node>(term_node{tkind::app, 0, f, {}, std::move(arg), nullptr});
}

inline term mk_tuple(const std::vector<term>& parts) {
    if (parts.empty()) return mk_unit();
    term acc = parts.back();
    for (size_t i = parts.size() - 1; i-- > 0;) acc = mk_pair(parts[i], acc);
    return acc;
}

// Swapping action on terms. Suspended permutations on variables compose;
// everything else is a structural traversal.
inline term swap_term(const perm& p, const term& t) {
    if (perm_trivial(p)) return t;
    switch (t->k) {
        case tkind::name: return mk_name(perm_apply(p, t->id));
        case tkind::var:  return mk_svar(perm_compose(p, t->p), t->id);
        case tkind::unit: return t;
        case tkind::pair: return mk_pair(swap_term(p, t->a), swap_term(p, t->b));
        case tkind::abs:  return mk_abs(perm_apply(p, t->id), swap_term(p, t->a));
        case tkind::app:  return mk_app(t->f, swap_term(p, t->a));
    }
    return t;
}

inline term swap_names(uint32_t a, uint32_t b, const term& t) {
    return swap_term(perm{{a, b}}, t);
}

// Literal structural equality (permutations compared as written).
inline bool term_eq(const term& s, const term& t) {
    if (s.get() == t.get()) return true;
    if (!s || !t || s->k != t->k) return false;
    switch (s->k) {
        case tkind::name: return s->id == t->id;
        case tkind::var:  return s->id == t->id && s->p == t->p;
        case tkind::unit: return true;
        case tkind::pair: return term_eq(s->a, t->a) && term_eq(s->b, t->b);
        case tkind::abs:  return s->id == t->id && term_eq(s->a, t->a);
        case tkind::app:  return s->f == t->f && term_eq(s->a, t->a);
    }
    return false;
}

// Size metric: constructor, name and abstraction nodes count 1; unit and
// pairing are transparent; a variable counts 1.
inline int term_size(const term& t) {
    switch (t->k) {
        case tkind::name: return 1;
        case tkind::var:  return 1;
        case tkind::unit: return 0;
        case tkind::pair: return term_size(t->a) + term_size(t->b);
        case tkind::abs:  return 1 + term_size(t->a);
        case tkind::app:  return 1 + term_size(t->a);
    }
    return 0;
}

struct name_occurrence {
    uint32_t name;
    bool binding;   // true when this occurrence is a binder of an abstraction
    bool operator==(const name_occurrence& o) const { return name == o.name && binding == o.binding; }
    bool operator<(const name_occurrence& o) const {
        return name < o.name || (name == o.name && binding < o.binding);
    }
};

// All name occurrences including binders (flagged) and permutation supports.
inline void free_names_into(const term& t, std::set<name_occurrence>& out) {
    switch (t->k) {
        case tkind::name: out.insert({t->id, false}); break;
        case tkind::var:
            for (uint32_t a : perm_support(t->p)) out.insert({a, false});
            break;
        case tkind::unit: break;
        case tkind::pair: free_names_into(t->a, out); free_names_into(t->b, out); break;
        case tkind::abs:  out.insert({t->id, true}); free_names_into(t->a, out); break;
        case tkind::app:  free_names_into(t->a, out); break;
    }
}
inline std::set<name_occurrence> free_names(const term& t) {
    std::set<name_occurrence> s;
    free_names_into(t, s);
    return s;
}

inline void free_vars_into(const term& t, std::vector<uint32_t>& out, std::set<uint32_t>& seen) {
    switch (t->k) {
        case tkind::var:
            if (seen.insert(t->id).second) out.push_back(t->id);
            break;
        case tkind::pair: free_vars_into(t->a, out, seen); free_vars_into(t->b, out, seen); break;
        case tkind::abs:  free_vars_into(t->a, out, seen); break;
        case tkind::app:  free_vars_into(t->a, out, seen); break;
        default: break;
    }
}
inline std::vector<uint32_t> free_vars(const term& t) {
    std::vector<uint32_t> v;
    std::set<uint32_t> seen;
    free_vars_into(t, v, seen);
    return v;
}

inline bool occurs_name(uint32_t a, const term& t) {
    switch (t->k) {
        case tkind::name: return t->id == a;
        case tkind::var: {
            auto s = perm_support(t->p);
            return s.count(a) != 0;
        }
        case tkind::unit: return false;
        case tkind::pair: return occurs_name(a, t->a) || occurs_name(a, t->b);
        case tkind::abs:  return t->id == a || occurs_name(a, t->a);
        case tkind::app:  return occurs_name(a, t->a);
    }
    return false;
}

// ---------------------------------------------------------------------------
// Store: tables of names and variables, stamped by one shared counter.
// Stamps order creation; scope checks compare them.

struct name_info {
    sym ntype;
    std::string display;
    uint64_t stamp;
};

struct var_info {
    type_ptr ty;
    std::string display;
    uint64_t stamp;
    bool universal = false;
    term binding;                      // null when unbound
    std::vector<uint32_t> suspended;   // names a with pending a # X
    // Names younger than the (demoted) stamp that may still appear in this
    // variable's value, because every occurrence of the variable sits under
    // a binder for them.  Only ever a subset of the names older than the
    // variable's creation stamp.
    std::vector<uint32_t> shield;
};

struct store {
    std::vector<name_info> names;
    std::vector<var_info> vars;
    uint64_t next_stamp = 1;

    uint32_t fresh_name(sym ntype, std::string disp) {
        names.push_back(name_info{ntype, std::move(disp), next_stamp++});
        return (uint32_t)(names.size() - 1);
    }
    // A name logically bound at the outermost fresh-name prefix: stamped
    // older than everything so it may appear in any variable's value.
    uint32_t fresh_name_hoisted(sym ntype, std::string disp) {
        names.push_back(name_info{ntype, std::move(disp), 0});
        return (uint32_t)(names.size() - 1);
    }
    uint32_t fresh_var(type_ptr ty, std::string disp, bool universal = false) {
        vars.push_back(var_info{std::move(ty), std::move(disp), next_stamp++, universal, nullptr, {}, {}});
        return (uint32_t)(vars.size() - 1);
    }
    const name_info& name(uint32_t id) const { return names[id]; }
    const var_info& var(uint32_t id) const { return vars[id]; }
    name_info& name(uint32_t id) { return names[id]; }
    var_info& var(uint32_t id) { return vars[id]; }
};

// Every transposition must swap names of one name type.
inline bool perm_homogeneous(const store& st, const perm& p) {
    for (auto& t : p)
        if (st.name(t.first).ntype != st.name(t.second).ntype) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Signature: declared types, constructors, predicates, functions.

struct ctor_info {
    sym name;
    type_ptr arg;      // unit for nullary constructors
    sym result;        // base type δ
};

struct pred_info {
    sym name;
    std::vector<type_ptr> args;   // surface arity view
    type_ptr arg;                 // right-nested tuple of args
    bool generated = false;       // true for gen_*/neq_*/nfr_*/not_* and wrappers
};

struct func_info {
    sym name;
    std::vector<type_ptr> args;
    type_ptr result;
    sym rel;   // flattened relation symbol f_rel
};

struct signature {
    strtab syms;
    std::vector<sym> base_types;             // declaration order
    std::set<sym> base_set;
    std::vector<sym> name_types;
    std::set<sym> name_set;
    std::map<sym, ctor_info> ctors;
    std::map<sym, std::vector<sym>> ctors_of;  // δ -> constructor symbols in decl order
    std::map<sym, pred_info> preds;
    std::vector<sym> pred_order;
    std::map<sym, func_info> funcs;
    std::map<sym, type_ptr> aliases;

    // list sugar: auto-registered base types
    std::map<sym, type_ptr> list_elem;       // δ -> element type
    std::map<sym, std::pair<sym, sym>> list_ctors;  // δ -> (nil, cons)

    bool is_base(sym s) const { return base_set.count(s) != 0; }
    bool is_name_type(sym s) const { return name_set.count(s) != 0; }

    sym add_base(const std::string& n) {
        sym s = syms.intern(n);
        if (!base_set.count(s)) { base_types.push_back(s); base_set.insert(s); ctors_of[s]; }
        return s;
    }
    sym add_name_type(const std::string& n) {
        sym s = syms.intern(n);
        if (!name_set.count(s)) { name_types.push_back(s); name_set.insert(s); }
        return s;
    }
    sym add_ctor(const std::string& n, type_ptr arg, sym result) {
        sym s = syms.intern(n);
        ctors[s] = ctor_info{s, std::move(arg), result};
        ctors_of[result].push_back(s);
        return s;
    }
    sym add_pred(const std::string& n, std::vector<type_ptr> args, bool generated = false) {
        sym s = syms.intern(n);
        if (!preds.count(s)) pred_order.push_back(s);
        preds[s] = pred_info{s, args, ty_tuple(args), generated};
        return s;
    }

    // Registers the list type [elem] on demand.
    sym list_type(const type_ptr& elem) {
        for (auto& [d, e] : list_elem)
            if (type_eq(e, elem)) return d;
        std::string en = type_str(elem);
        sym d = add_base("[" + en + "]");
        type_ptr dt = ty_base(d);
        sym nil_c = add_ctor("[]@" + en, ty_unit(), d);
        sym cons_c = add_ctor("cons@" + en, ty_pair(elem, dt), d);
        list_elem[d] = elem;
        list_ctors[d] = {nil_c, cons_c};
        return d;
    }

    bool is_list(sym d) const { return list_elem.count(d) != 0; }

    std::string type_str(const type_ptr& t) const {
        switch (t->k) {
            case tykind::base:
                if (is_list(t->head)) return "[" + type_str(list_elem.at(t->head)) + "]";
                return syms.str(t->head);
            case tykind::name: return syms.str(t->head);
            case tykind::unit: return "1";
            case tykind::pair: {
                // flatten right-nested tuple for display
                std::string s = "(" + type_str(t->a);
                type_ptr rest = t->b;
                while (rest->k == tykind::pair) { s += "," + type_str(rest->a); rest = rest->b; }
                s += "," + type_str(rest) + ")";
                return s;
            }
            case tykind::abs: return syms.str(t->head) + "\\" + type_str(t->a);
        }
        return "?";
    }
};

// Can a value of type t contain a name of type ν?  Memoized per base type.
struct name_reach {
    const signature* sig;
    std::map<std::pair<sym, sym>, int> memo;  // (δ, ν) -> 0/1; 2 while computing

    bool reaches(const type_ptr& t, sym nu) {
        switch (t->k) {
            case tykind::name: return t->head == nu;
            case tykind::unit: return false;
            case tykind::pair: return reaches(t->a, nu) || reaches(t->b, nu);
            case tykind::abs:  return t->head == nu || reaches(t->a, nu);
            case tykind::base: {
                auto key = std::make_pair(t->head, nu);
                auto it = memo.find(key);
                if (it != memo.end()) return it->second == 1;
                memo[key] = 2;  // assume no while unrolling the cycle
                bool r = false;
                auto co = sig->ctors_of.find(t->head);
                if (co != sig->ctors_of.end())
                    for (sym c : co->second) {
                        auto& ci = sig->ctors.at(c);
                        if (reaches_guarded(ci.arg, nu)) { r = true; break; }
                    }
                memo[key] = r ? 1 : 0;
                return r;
            }
        }
        return false;
    }

private:
    bool reaches_guarded(const type_ptr& t, sym nu) {
        if (t->k == tykind::base) {
            auto key = std::make_pair(t->head, nu);
            auto it = memo.find(key);
            if (it != memo.end() && it->second == 2) return false;
        }
        return reaches(t, nu);
    }
};

// ---------------------------------------------------------------------------
// Goals and clauses

enum class gkind : uint8_t {
    top, bot, eq, fresh, atom, conj, disj,
    exists, nu, fstar, conc, gen_name, nf_not
};

struct goal_node;
using goal = std::shared_ptr<const goal_node>;

struct goal_node {
    gkind k;
    term t, u;            // eq/fresh: sides; atom: t = argument; conc: t = abstraction term
    sym pred = no_sym;    // atom
    type_ptr ty;          // eq: type of both sides; fresh: type of u; binders: bound type
    sym ntype = no_sym;   // fresh: name type of t; nu/conc/gen_name: name type
    uint32_t bind = 0;    // exists/fstar: var; nu: name; conc: var X
    uint32_t bind2 = 0;   // conc: name a (already in scope, bound by an enclosing nu)
    goal g1, g2;          // conj/disj: children; binders/conc: body
};

inline goal g_top() { return std::make_shared<goal_node>(goal_node{gkind::top}); }
inline goal g_bot() { return std::make_shared<goal_node>(goal_node{gkind::bot}); }
inline goal g_eq(term t, term u, type_ptr ty) {
    goal_node n{gkind::eq}; n.t = std::move(t); n.u = std::move(u); n.ty = std::move(ty);
    return std::make_shared<goal_node>(std::move(n));
}
inline goal g_fresh(term a, term t, sym ntype, type_ptr ty) {
    goal_node n{gkind::fresh}; n.t = std::move(a); n.u = std::move(t);
    n.ntype = ntype; n.ty = std::move(ty);
    return std::make_shared<goal_node>(std::move(n));
}
inline goal g_atom(sym p, term arg) {
    goal_node n{gkind::atom}; n.pred = p; n.t = std::move(arg);
    return std::make_shared<goal_node>(std::move(n));
}
inline goal g_conj(goal a, goal b) {
    goal_node n{gkind::conj}; n.g1 = std::move(a); n.g2 = std::move(b);
    return std::make_shared<goal_node>(std::move(n));
}
inline goal g_disj(goal a, goal b) {
    goal_node n{gkind::disj}; n.g1 = std::move(a); n.g2 = std::move(b);
    return std::make_shared<goal_node>(std::move(n));
}
inline goal g_exists(uint32_t x, type_ptr ty, goal body) {
    goal_node n{gkind::exists}; n.bind = x; n.ty = std::move(ty); n.g1 = std::move(body);
    return std::make_shared<goal_node>(std::move(n));
}
inline goal g_new(uint32_t a, sym ntype, goal body) {
    goal_node n{gkind::nu}; n.bind = a; n.ntype = ntype; n.g1 = std::move(body);
    return std::make_shared<goal_node>(std::move(n));
}
inline goal g_fstar(uint32_t x, type_ptr ty, goal body) {
    goal_node n{gkind::fstar}; n.bind = x; n.ty = std::move(ty); n.g1 = std::move(body);
    return std::make_shared<goal_node>(std::move(n));
}
// concretion: exists X. t = <a>X and body, with a bound by an enclosing nu
inline goal g_conc(term t, uint32_t a, uint32_t x, type_ptr xty, goal body) {
    goal_node n{gkind::conc}; n.t = std::move(t); n.bind = x; n.bind2 = a;
    n.ty = std::move(xty); n.g1 = std::move(body);
    return std::make_shared<goal_node>(std::move(n));
}
inline goal g_gen_name(term t, sym ntype) {
    goal_node n{gkind::gen_name}; n.t = std::move(t); n.ntype = ntype;
    return std::make_shared<goal_node>(std::move(n));
}
inline goal g_nf_not(goal atom_goal) {
    goal_node n{gkind::nf_not}; n.g1 = std::move(atom_goal);
    return std::make_shared<goal_node>(std::move(n));
}

inline goal g_conj_all(const std::vector<goal>& gs) {
    if (gs.empty()) return g_top();
    goal acc = gs.back();
    for (size_t i = gs.size() - 1; i-- > 0;) acc = g_conj(gs[i], acc);
    return acc;
}
inline goal g_disj_all(const std::vector<goal>& gs) {
    if (gs.empty()) return g_bot();
    goal acc = gs.back();
    for (size_t i = gs.size() - 1; i-- > 0;) acc = g_disj(gs[i], acc);
    return acc;
}

// Collect variable ids mentioned by a goal (term vars and binders), preorder.
inline void goal_vars_into(const goal& g, std::vector<uint32_t>& out, std::set<uint32_t>& seen) {
    if (!g) return;
    if (g->t) free_vars_into(g->t, out, seen);
    if (g->u) free_vars_into(g->u, out, seen);
    switch (g->k) {
        case gkind::exists: case gkind::fstar:
            if (seen.insert(g->bind).second) out.push_back(g->bind);
            break;
        case gkind::conc:
            if (seen.insert(g->bind).second) out.push_back(g->bind);
            break;
        default: break;
    }
    goal_vars_into(g->g1, out, seen);
    goal_vars_into(g->g2, out, seen);
}

// Variables a goal mentions that are not bound by an enclosing binder
// (exists / forall* / concretion).  These are the clause-level variables
// renamed when a clause is selected; binder-bound variables are renamed
// at the moment their binder is solved.
inline void goal_free_vars_into(const goal& g, std::set<uint32_t>& bound,
                                std::vector<uint32_t>& out, std::set<uint32_t>& seen) {
    if (!g) return;
    auto add_term = [&](const term& t) {
        if (!t) return;
        std::vector<uint32_t> vs = free_vars(t);
        for (auto v : vs)
            if (!bound.count(v) && seen.insert(v).second) out.push_back(v);
    };
    add_term(g->t);
    add_term(g->u);
    if (g->k == gkind::exists || g->k == gkind::fstar || g->k == gkind::conc) {
        bool fresh_here = bound.insert(g->bind).second;
        goal_free_vars_into(g->g1, bound, out, seen);
        goal_free_vars_into(g->g2, bound, out, seen);
        if (fresh_here) bound.erase(g->bind);
        return;
    }
    goal_free_vars_into(g->g1, bound, out, seen);
    goal_free_vars_into(g->g2, bound, out, seen);
}

// Names a goal mentions that are not bound by an enclosing `new`.
inline void goal_free_names_into(const goal& g, std::set<uint32_t>& bound,
                                 std::vector<uint32_t>& out, std::set<uint32_t>& seen) {
    if (!g) return;
    auto add_term = [&](const term& t) {
        if (!t) return;
        for (auto& oc : free_names(t))
            if (!bound.count(oc.name) && seen.insert(oc.name).second) out.push_back(oc.name);
    };
    add_term(g->t);
    add_term(g->u);
    if (g->k == gkind::nu) {
        bool fresh_here = bound.insert(g->bind).second;
        goal_free_names_into(g->g1, bound, out, seen);
        if (fresh_here) bound.erase(g->bind);
        return;
    }
    if (g->k == gkind::conc && !bound.count(g->bind2) && seen.insert(g->bind2).second)
        out.push_back(g->bind2);
    goal_free_names_into(g->g1, bound, out, seen);
    goal_free_names_into(g->g2, bound, out, seen);
}

// Normalized program clause: forall vars (and clause-level fresh names),
// body => pred(head).
struct horn_clause {
    std::vector<uint32_t> vars;    // clause variables in first-occurrence order
    std::vector<uint32_t> names;   // clause-level names (freshened at selection)
    goal body;
    sym pred = no_sym;
    term head;                     // single argument (tuple)
    int src_line = 0;
};

struct check_directive {
    std::string label;
    int depth = 0;
    std::vector<goal> hyps;        // hypotheses H1..Hn (atoms/constraints)
    goal concl;                    // conclusion A (an atom)
    std::vector<uint32_t> qvars;   // free vars, hypothesis-first occurrence order
    std::vector<uint32_t> qnames;  // fresh-name prefix
    int src_line = 0;
};

struct program {
    signature sig;
    store st;
    std::vector<horn_clause> clauses;             // source order
    std::map<sym, std::vector<uint32_t>> defs;    // pred -> indices into clauses
    std::vector<check_directive> checks;

    // declaration journal, for printing programs back out
    enum class dkind : uint8_t { base, name, ctor, alias, pred, func };
    std::vector<std::pair<dkind, sym>> decl_order;

    void add_clause(horn_clause c) {
        defs[c.pred].push_back((uint32_t)clauses.size());
        clauses.push_back(std::move(c));
    }
    const std::vector<uint32_t>& def(sym p) const {
        static const std::vector<uint32_t> none;
        auto it = defs.find(p);
        return it == defs.end() ? none : it->second;
    }
};

// ---------------------------------------------------------------------------
// Pretty printing (surface syntax)

struct printer {
    const signature* sig;
    const store* st;
    // optional display overrides, used to render concretion variables as t@a
    std::map<uint32_t, std::string> var_override;

    std::string name_str(uint32_t id) const { return st->name(id).display; }
    std::string var_str(uint32_t id) const {
        auto it = var_override.find(id);
        if (it != var_override.end()) return it->second;
        return st->var(id).display;
    }

    std::string perm_str(const perm& p) const {
        std::string s;
        for (auto& t : p) s += "(" + name_str(t.first) + " " + name_str(t.second) + ")";
        return s;
    }

    bool is_nil(const term& t) const {
        if (t->k != tkind::app) return false;
        auto& ci = sig->ctors.at(t->f);
        auto lc = sig->list_ctors.find(ci.result);
        return lc != sig->list_ctors.end() && lc->second.first == t->f;
    }
    bool is_cons(const term& t) const {
        if (t->k != tkind::app) return false;
        auto& ci = sig->ctors.at(t->f);
        auto lc = sig->list_ctors.find(ci.result);
        return lc != sig->list_ctors.end() && lc->second.second == t->f;
    }

    std::string term_str(const term& t) const {
        switch (t->k) {
            case tkind::name: return name_str(t->id);
            case tkind::var: {
                if (t->p.empty()) return var_str(t->id);
                return perm_str(t->p) + "*" + var_str(t->id);
            }
            case tkind::unit: return "()";
            case tkind::pair: {
                std::string s = "(" + term_str(t->a);
                term rest = t->b;
                while (rest->k == tkind::pair) { s += "," + term_str(rest->a); rest = rest->b; }
                s += "," + term_str(rest) + ")";
                return s;
            }
            case tkind::abs: return name_str(t->id) + "\\" + term_str(t->a);
            case tkind::app: {
                if (is_nil(t)) return "[]";
                if (is_cons(t)) return list_str(t);
                auto& ci = sig->ctors.at(t->f);
                std::string head = sig->syms.str(t->f);
                if (ci.arg->k == tykind::unit) return head;
                return head + "(" + args_str(t->a, ci.arg) + ")";
            }
        }
        return "?";
    }

    // splits a right-nested tuple argument according to the declared tuple type
    std::string args_str(const term& t, const type_ptr& ty) const {
        if (ty->k == tykind::pair && t->k == tkind::pair)
            return term_str(t->a) + "," + args_str(t->b, ty->b);
        return term_str(t);
    }

    std::string list_str(const term& t) const {
        std::string s = "[";
        term cur = t;
        bool first = true;
        while (true) {
            if (is_cons(cur)) {
                // cons argument is a pair (head, tail)
                if (!first) s += ",";
                s += term_str(cur->a->a);
                first = false;
                cur = cur->a->b;
            } else if (is_nil(cur)) {
                return s + "]";
            } else {
                return s + "|" + term_str(cur) + "]";
            }
        }
    }

    std::string atom_str(sym p, const term& arg) const {
        auto& pi = sig->preds.at(p);
        std::string head = sig->syms.str(p);
        if (pi.args.empty()) return head;
        return head + "(" + args_str(arg, pi.arg) + ")";
    }

    std::string goal_str(const goal& g, int prec = 0) const {
        // prec 0: conjunction allowed bare; prec 1: inside a disjunct/operand
        switch (g->k) {
            case gkind::top: return "true";
            case gkind::bot: return "false";
            case gkind::eq: return term_str(g->t) + " = " + term_str(g->u);
            case gkind::fresh: return term_str(g->t) + " # " + term_str(g->u);
            case gkind::atom: return atom_str(g->pred, g->t);
            case gkind::conj: {
                std::string s = goal_str(g->g1, 1) + ", " + goal_str(g->g2, 0);
                return prec > 0 ? "(" + s + ")" : s;
            }
            case gkind::disj: {
                std::string s = goal_str(g->g1, 1) + "; " + goal_str(g->g2, 0);
                return "(" + s + ")";
            }
            case gkind::exists:
                return "exists " + var_str(g->bind) + ":" + sig->type_str(g->ty) + ". " + goal_str(g->g1, 1);
            case gkind::nu:
                return "new " + name_str(g->bind) + ":" + sig->syms.str(g->ntype) + ". " + goal_str(g->g1, 1);
            case gkind::fstar:
                return "forall* " + var_str(g->bind) + ":" + sig->type_str(g->ty) + ". " + goal_str(g->g1, 1);
            case gkind::conc: {
                printer sub = *this;
                sub.var_override[g->bind] = term_str(g->t) + "@" + name_str(g->bind2);
                return sub.goal_str(g->g1, prec);
            }
            case gkind::gen_name: return "gen_name(" + term_str(g->t) + ")";
            case gkind::nf_not: return "not(" + goal_str(g->g1, 1) + ")";
        }
        return "?";
    }

    std::string clause_str(const horn_clause& c) const {
        std::string h = atom_str(c.pred, c.head);
        if (c.body && c.body->k != gkind::top) return h + " :- " + goal_str(c.body) + ".";
        return h + ".";
    }
};

inline std::string show_term(const program& p, const term& t) {
    printer pr{&p.sig, &p.st, {}};
    return pr.term_str(t);
}
inline std::string show_goal(const program& p, const goal& g) {
    printer pr{&p.sig, &p.st, {}};
    return pr.goal_str(g);
}
inline std::string show_clause(const program& p, const horn_clause& c) {
    printer pr{&p.sig, &p.st, {}};
    return pr.clause_str(c);
}

// ---------------------------------------------------------------------------
// Term type checking (diagnostic; the parser constructs well-typed terms)

struct type_error {
    std::string msg;
};

inline std::optional<std::string> check_term(const signature& sig, const store& st,
                                             const term& t, const type_ptr& ty) {
    switch (t->k) {
        case tkind::name: {
            if (ty->k != tykind::name || st.name(t->id).ntype != ty->head)
                return "name " + st.name(t->id).display + " does not have type " + sig.type_str(ty);
            return std::nullopt;
        }
        case tkind::var: {
            if (!type_eq(st.var(t->id).ty, ty))
                return "variable " + st.var(t->id).display + " has type " +
                       sig.type_str(st.var(t->id).ty) + ", expected " + sig.type_str(ty);
            if (!perm_homogeneous(st, t->p)) return "heterogeneous permutation";
            return std::nullopt;
        }
        case tkind::unit:
            if (ty->k != tykind::unit) return "unit value at type " + sig.type_str(ty);
            return std::nullopt;
        case tkind::pair: {
            if (ty->k != tykind::pair) return "pair at type " + sig.type_str(ty);
            if (auto e = check_term(sig, st, t->a, ty->a)) return e;
            return check_term(sig, st, t->b, ty->b);
        }
        case tkind::abs: {
            if (ty->k != tykind::abs || st.name(t->id).ntype != ty->head)
                return "abstraction at type " + sig.type_str(ty);
            return check_term(sig, st, t->a, ty->a);
        }
        case tkind::app: {
            auto it = sig.ctors.find(t->f);
            if (it == sig.ctors.end()) return "unknown constructor";
            if (ty->k != tykind::base || it->second.result != ty->head)
                return sig.syms.str(t->f) + " value at type " + sig.type_str(ty);
            return check_term(sig, st, t->a, it->second.arg);
        }
    }
    return "malformed term";
}

} // namespace nomcheck
