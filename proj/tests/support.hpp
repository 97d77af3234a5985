#pragma once
// Shared fixtures and brute-force oracles for the test suite.

#include <nomcheck/syntax.hpp>
#include <string>
#include <vector>

namespace ts {

using namespace nomcheck;

// A small signature exercising every type former:
//   names a,b,c : nm
//   d: type with  k: d.  f: nm -> d.  g: (d,d) -> d.  h: nm\d -> d.
struct mini_fixture {
    program p;
    sym nm, d, k, f, g, h;
    uint32_t a, b, c;

    mini_fixture() {
        nm = p.sig.add_name_type("nm");
        d = p.sig.add_base("d");
        k = p.sig.add_ctor("k", ty_unit(), d);
        f = p.sig.add_ctor("f", ty_name(nm), d);
        g = p.sig.add_ctor("g", ty_pair(ty_base(d), ty_base(d)), d);
        h = p.sig.add_ctor("h", ty_abs(nm, ty_base(d)), d);
        a = p.st.fresh_name(nm, "a");
        b = p.st.fresh_name(nm, "b");
        c = p.st.fresh_name(nm, "c");
    }
};

// Bounded-exhaustive ground terms of a type, size <= max_size.
// Free names come from `pool`; binders take canonical fresh names per nesting
// depth so each alpha-class is produced exactly once.
struct enumerator {
    program* p;
    std::vector<uint32_t> pool;            // ambient free names (any type)
    std::vector<uint32_t> binder_names;    // canonical binder per depth, grown on demand

    uint32_t binder_at(int depth, sym ntype) {
        while ((int)binder_names.size() <= depth)
            binder_names.push_back(p->st.fresh_name(ntype, "_b" + std::to_string(binder_names.size())));
        // binder pool is per-depth; tests use a single name type for binders
        return binder_names[depth];
    }

    std::vector<term> enumerate(const type_ptr& ty, int max_size, int depth = 0) {
        std::vector<term> out;
        if (max_size < 0) return out;
        switch (ty->k) {
            case tykind::unit:
                out.push_back(mk_unit());
                break;
            case tykind::name:
                if (max_size >= 1) {
                    for (uint32_t n : pool)
                        if (p->st.name(n).ntype == ty->head) out.push_back(mk_name(n));
                    for (int i = 0; i < depth; i++)
                        if (p->st.name(binder_names[i]).ntype == ty->head)
                            out.push_back(mk_name(binder_names[i]));
                }
                break;
            case tykind::pair: {
                for (int sa = 0; sa <= max_size; sa++) {
                    auto lefts = enumerate(ty->a, sa, depth);
                    for (auto& l : lefts) {
                        if (term_size(l) != sa) continue;  // avoid duplicates across budgets
                        auto rights = enumerate(ty->b, max_size - sa, depth);
                        for (auto& r : rights) out.push_back(mk_pair(l, r));
                    }
                }
                break;
            }
            case tykind::abs: {
                uint32_t bn = binder_at(depth, ty->head);
                for (auto& t : enumerate(ty->a, max_size - 1, depth + 1))
                    out.push_back(mk_abs(bn, t));
                break;
            }
            case tykind::base: {
                auto it = p->sig.ctors_of.find(ty->head);
                if (it == p->sig.ctors_of.end()) break;
                for (sym cs : it->second) {
                    auto& ci = p->sig.ctors.at(cs);
                    for (auto& arg : enumerate(ci.arg, max_size - 1, depth))
                        out.push_back(mk_app(cs, arg));
                }
                break;
            }
        }
        return out;
    }
};

inline std::vector<term> ground_terms(program& p, const type_ptr& ty, int max_size,
                                      std::vector<uint32_t> pool = {}) {
    enumerator e{&p, std::move(pool), {}};
    return e.enumerate(ty, max_size);
}

} // namespace ts
