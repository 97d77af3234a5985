#pragma once
// Parser and elaborator for .apl specifications.
//
// Surface syntax (see docs/grammar.ebnf):
//   ty: type.            id: name_type.
//   f: (ty,ty) -> ty.    c: ty.          type ctx = [(id,ty)].
//   pred tc(ctx,exp,ty). func subst(exp,id,exp) = exp.
//   clauses  head.  /  head :- goal, goal.  /  f(args) = result :- goals.
//   #check "label" depth : hyp, hyp => concl.
//
// Function equations flatten into (n+1)-ary relations named f_rel.  Clause
// heads are linearized: repeated variables and names move into body
// equations, head abstractions are pulled out through fresh-name/concretion
// goals, and freshness atoms made redundant by that discipline are dropped.

#include "syntax.hpp"
#include <fstream>
#include <functional>
#include <stdexcept>

namespace nomcheck {

struct parse_error : std::runtime_error {
    int line, col;
    parse_error(const std::string& msg, int l, int c)
        : std::runtime_error("line " + std::to_string(l) + ":" + std::to_string(c) + ": " + msg),
          line(l), col(c) {}
};

// ---------------------------------------------------------------------------
// Lexer

enum class tok : uint8_t {
    lid, uid, num, strlit,
    lparen, rparen, lbrack, rbrack, comma, dot, bar, semi, at,
    coldash, colon, arrow, darrow, eq, hash, backslash, star,
    kw_check, wild, eof
};

struct token {
    tok k;
    std::string text;
    int line, col;
};

inline std::vector<token> lex(const std::string& src) {
    std::vector<token> out;
    int line = 1, col = 1;
    size_t i = 0, n = src.size();
    auto push = [&](tok k, std::string t, int l, int c) { out.push_back({k, std::move(t), l, c}); };
    auto idchar = [](char c) { return isalnum((unsigned char)c) || c == '_' || c == '\''; };
    while (i < n) {
        char c = src[i];
        int l = line, co = col;
        auto adv = [&](size_t k = 1) {
            for (size_t j = 0; j < k; j++) {
                if (src[i] == '\n') { line++; col = 1; } else col++;
                i++;
            }
        };
        if (c == '\n' || c == ' ' || c == '\t' || c == '\r') { adv(); continue; }
        if (c == '%') { while (i < n && src[i] != '\n') adv(); continue; }
        if (isalpha((unsigned char)c) || c == '_') {
            size_t j = i;
            while (j < n && idchar(src[j])) j++;
            std::string w = src.substr(i, j - i);
            adv(j - i);
            if (w == "_") push(tok::wild, w, l, co);
            else if (w == "forall" && i < n && src[i] == '*') { adv(); push(tok::lid, "forall*", l, co); }
            else if (isupper((unsigned char)w[0]) || w[0] == '_') push(tok::uid, w, l, co);
            else push(tok::lid, w, l, co);
            continue;
        }
        if (isdigit((unsigned char)c)) {
            size_t j = i;
            while (j < n && isdigit((unsigned char)src[j])) j++;
            push(tok::num, src.substr(i, j - i), l, co);
            adv(j - i);
            continue;
        }
        if (c == '"') {
            size_t j = i + 1;
            while (j < n && src[j] != '"') j++;
            if (j >= n) throw parse_error("unterminated string", l, co);
            push(tok::strlit, src.substr(i + 1, j - i - 1), l, co);
            adv(j - i + 1);
            continue;
        }
        auto two = [&](const char* s) { return i + 1 < n && src[i] == s[0] && src[i + 1] == s[1]; };
        if (two(":-")) { push(tok::coldash, ":-", l, co); adv(2); continue; }
        if (two("->")) { push(tok::arrow, "->", l, co); adv(2); continue; }
        if (two("=>")) { push(tok::darrow, "=>", l, co); adv(2); continue; }
        if (c == '#') {
            if (i + 5 < n && src.compare(i, 6, "#check") == 0 && !(i + 6 < n && idchar(src[i + 6]))) {
                push(tok::kw_check, "#check", l, co);
                adv(6);
                continue;
            }
            push(tok::hash, "#", l, co); adv(); continue;
        }
        switch (c) {
            case '(': push(tok::lparen, "(", l, co); break;
            case ')': push(tok::rparen, ")", l, co); break;
            case '[': push(tok::lbrack, "[", l, co); break;
            case ']': push(tok::rbrack, "]", l, co); break;
            case ',': push(tok::comma, ",", l, co); break;
            case '.': push(tok::dot, ".", l, co); break;
            case '|': push(tok::bar, "|", l, co); break;
            case ';': push(tok::semi, ";", l, co); break;
            case '@': push(tok::at, "@", l, co); break;
            case ':': push(tok::colon, ":", l, co); break;
            case '=': push(tok::eq, "=", l, co); break;
            case '\\': push(tok::backslash, "\\", l, co); break;
            case '*': push(tok::star, "*", l, co); break;
            default: throw parse_error(std::string("unexpected character '") + c + "'", l, co);
        }
        adv();
    }
    out.push_back({tok::eof, "", line, col});
    return out;
}

// ---------------------------------------------------------------------------
// Raw parse trees

struct sterm {
    enum class sk : uint8_t { id, var, wild, compound, tuple, list, abs, conc } k;
    std::string text;          // id/var name, compound functor, abs binder, conc name
    std::vector<sterm> kids;   // compound args, tuple parts, list items, abs/conc body at [0]
    bool has_tail = false;     // list tail present (tail is the last kid)
    int line = 0, col = 0;
};

struct sgoal {
    enum class gk : uint8_t { atom, eq, fresh, conj, disj, neW, fstar, truth, falsity } k;
    sterm t, u;
    std::string bname;         // new: name; fstar: variable
    std::string btype;         // new: optional name type annotation
    type_ptr bty;              // fstar: bound type
    std::vector<sgoal> kids;
    int line = 0, col = 0;
};

// ---------------------------------------------------------------------------

struct parser {
    program& prog;
    std::vector<token> toks;
    size_t pos = 0;
    int fresh_ctr = 0;                // reset per clause/directive
    std::set<std::string> used_vars;  // variable spellings in the current item

    explicit parser(program& p) : prog(p) {}

    // Fresh variable spelling that cannot collide with source variables.
    std::string freshname(const char* pfx) {
        std::string s;
        do s = pfx + std::to_string(++fresh_ctr); while (used_vars.count(s));
        used_vars.insert(s);
        return s;
    }

    void collect_vars(const sterm& t) {
        if (t.k == sterm::sk::var) used_vars.insert(t.text);
        for (auto& k : t.kids) collect_vars(k);
    }
    void collect_vars(const sgoal& g) {
        if (g.k == sgoal::gk::fstar) used_vars.insert(g.bname);
        if (g.k == sgoal::gk::atom || g.k == sgoal::gk::eq || g.k == sgoal::gk::fresh) {
            collect_vars(g.t);
            if (g.k != sgoal::gk::atom) collect_vars(g.u);
        }
        for (auto& k : g.kids) collect_vars(k);
    }

    const token& cur() const { return toks[pos]; }
    const token& peek(size_t k = 1) const { return toks[std::min(pos + k, toks.size() - 1)]; }
    token eat() { return toks[pos++]; }
    bool at(tok k) const { return cur().k == k; }
    token expect(tok k, const char* what) {
        if (!at(k)) throw parse_error(std::string("expected ") + what + ", found '" + cur().text + "'",
                                      cur().line, cur().col);
        return eat();
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw parse_error(msg, cur().line, cur().col);
    }
    [[noreturn]] void fail_at(const sterm& t, const std::string& msg) const {
        throw parse_error(msg, t.line, t.col);
    }

    void run(const std::string& text) {
        toks = lex(text);
        pos = 0;
        while (!at(tok::eof)) item();
    }

    // ------------------------------------------------------------------ items

    void item() {
        if (at(tok::kw_check)) { directive(); return; }
        if (at(tok::lid)) {
            const std::string& w = cur().text;
            if (w == "pred" && peek().k == tok::lid) { pred_decl(); return; }
            if (w == "func" && peek().k == tok::lid) { func_decl(); return; }
            if (w == "type" && peek().k == tok::lid && peek(2).k == tok::eq) { alias_decl(); return; }
            if (peek().k == tok::colon) { decl(); return; }
            clause();
            return;
        }
        fail("expected a declaration, clause, or #check directive");
    }

    void decl() {
        token name = expect(tok::lid, "identifier");
        expect(tok::colon, "':'");
        if (at(tok::lid) && cur().text == "type" && peek().k == tok::dot) {
            eat(); eat();
            sym s = prog.sig.add_base(name.text);
            prog.decl_order.push_back({program::dkind::base, s});
            return;
        }
        if (at(tok::lid) && cur().text == "name_type" && peek().k == tok::dot) {
            eat(); eat();
            sym s = prog.sig.add_name_type(name.text);
            prog.decl_order.push_back({program::dkind::name, s});
            return;
        }
        type_ptr lhs = type_expr();
        if (at(tok::arrow)) {
            eat();
            token res = expect(tok::lid, "result type");
            expect(tok::dot, "'.'");
            auto rs = prog.sig.syms.lookup(res.text);
            if (!rs || !prog.sig.is_base(*rs))
                throw parse_error("constructor result must be a declared base type", res.line, res.col);
            sym s = prog.sig.add_ctor(name.text, lhs, *rs);
            prog.decl_order.push_back({program::dkind::ctor, s});
            return;
        }
        expect(tok::dot, "'.'");
        // nullary constructor: name : basetype.
        if (lhs->k != tykind::base)
            throw parse_error("constant must belong to a base type", name.line, name.col);
        sym s = prog.sig.add_ctor(name.text, ty_unit(), lhs->head);
        prog.decl_order.push_back({program::dkind::ctor, s});
    }

    void pred_decl() {
        eat();  // pred
        token name = expect(tok::lid, "predicate name");
        std::vector<type_ptr> args;
        if (at(tok::lparen)) {
            eat();
            args.push_back(type_expr());
            while (at(tok::comma)) { eat(); args.push_back(type_expr()); }
            expect(tok::rparen, "')'");
        }
        expect(tok::dot, "'.'");
        sym s = prog.sig.add_pred(name.text, args);
        prog.decl_order.push_back({program::dkind::pred, s});
    }

    void func_decl() {
        eat();  // func
        token name = expect(tok::lid, "function name");
        std::vector<type_ptr> args;
        expect(tok::lparen, "'('");
        args.push_back(type_expr());
        while (at(tok::comma)) { eat(); args.push_back(type_expr()); }
        expect(tok::rparen, "')'");
        expect(tok::eq, "'='");
        type_ptr res = type_expr();
        expect(tok::dot, "'.'");
        sym f = prog.sig.syms.intern(name.text);
        sym rel = prog.sig.syms.intern(name.text + "_rel");
        prog.sig.funcs[f] = func_info{f, args, res, rel};
        std::vector<type_ptr> rel_args = args;
        rel_args.push_back(res);
        prog.sig.add_pred(prog.sig.syms.str(rel), rel_args);
        prog.decl_order.push_back({program::dkind::func, f});
    }

    void alias_decl() {
        eat();  // type
        token name = expect(tok::lid, "type alias name");
        expect(tok::eq, "'='");
        type_ptr t = type_expr();
        expect(tok::dot, "'.'");
        prog.sig.aliases[prog.sig.syms.intern(name.text)] = t;
        prog.decl_order.push_back({program::dkind::alias, prog.sig.syms.intern(name.text)});
    }

    // ------------------------------------------------------------------ types

    type_ptr type_expr() {
        type_ptr t = type_atom();
        if (at(tok::backslash)) {
            if (t->k != tykind::name) fail("abstraction binder must be a name type");
            eat();
            return ty_abs(t->head, type_expr());
        }
        return t;
    }

    type_ptr type_atom() {
        if (at(tok::num) && cur().text == "1") { eat(); return ty_unit(); }
        if (at(tok::lbrack)) {
            eat();
            type_ptr e = type_expr();
            expect(tok::rbrack, "']'");
            return ty_base(prog.sig.list_type(e));
        }
        if (at(tok::lparen)) {
            eat();
            std::vector<type_ptr> parts{type_expr()};
            while (at(tok::comma)) { eat(); parts.push_back(type_expr()); }
            expect(tok::rparen, "')'");
            return parts.size() == 1 ? parts[0] : ty_tuple(parts);
        }
        token id = expect(tok::lid, "type name");
        auto s = prog.sig.syms.lookup(id.text);
        if (s) {
            if (prog.sig.is_base(*s)) return ty_base(*s);
            if (prog.sig.is_name_type(*s)) return ty_name(*s);
            auto al = prog.sig.aliases.find(*s);
            if (al != prog.sig.aliases.end()) return al->second;
        }
        throw parse_error("unknown type '" + id.text + "'", id.line, id.col);
    }

    // ------------------------------------------------------------------ terms

    sterm term_expr() {
        sterm t = term_primary();
        if (at(tok::at)) {
            eat();
            token n = expect(tok::lid, "name after '@'");
            sterm c;
            c.k = sterm::sk::conc;
            c.text = n.text;
            c.line = t.line; c.col = t.col;
            c.kids.push_back(std::move(t));
            return c;
        }
        return t;
    }

    sterm term_primary() {
        int l = cur().line, c = cur().col;
        if (at(tok::wild)) {
            eat();
            sterm t; t.k = sterm::sk::wild; t.line = l; t.col = c;
            return t;
        }
        if (at(tok::uid)) {
            std::string name = eat().text;
            sterm t; t.k = sterm::sk::var; t.text = name; t.line = l; t.col = c;
            return t;
        }
        if (at(tok::lid)) {
            std::string name = eat().text;
            if (at(tok::backslash)) {
                eat();
                sterm t; t.k = sterm::sk::abs; t.text = name; t.line = l; t.col = c;
                t.kids.push_back(term_expr());
                return t;
            }
            if (at(tok::lparen)) {
                eat();
                sterm t; t.k = sterm::sk::compound; t.text = name; t.line = l; t.col = c;
                t.kids.push_back(term_expr());
                while (at(tok::comma)) { eat(); t.kids.push_back(term_expr()); }
                expect(tok::rparen, "')'");
                return t;
            }
            sterm t; t.k = sterm::sk::id; t.text = name; t.line = l; t.col = c;
            return t;
        }
        if (at(tok::lparen)) {
            eat();
            std::vector<sterm> parts{term_expr()};
            while (at(tok::comma)) { eat(); parts.push_back(term_expr()); }
            expect(tok::rparen, "')'");
            if (parts.size() == 1) return std::move(parts[0]);
            sterm t; t.k = sterm::sk::tuple; t.kids = std::move(parts); t.line = l; t.col = c;
            return t;
        }
        if (at(tok::lbrack)) {
            eat();
            sterm t; t.k = sterm::sk::list; t.line = l; t.col = c;
            if (at(tok::rbrack)) { eat(); return t; }
            t.kids.push_back(term_expr());
            while (at(tok::comma)) { eat(); t.kids.push_back(term_expr()); }
            if (at(tok::bar)) {
                eat();
                t.kids.push_back(term_expr());
                t.has_tail = true;
            }
            expect(tok::rbrack, "']'");
            return t;
        }
        fail("expected a term");
    }

    // ------------------------------------------------------------------ goals

    std::vector<sgoal> goal_seq() {
        std::vector<sgoal> gs;
        gs.push_back(goal_one());
        while (at(tok::comma)) {
            eat();
            gs.push_back(goal_one());
        }
        return gs;
    }

    sgoal goal_one() {
        int l = cur().line, c = cur().col;
        if (at(tok::lid) && cur().text == "new") {
            eat();
            token n = expect(tok::lid, "name after 'new'");
            sgoal g; g.k = sgoal::gk::neW; g.bname = n.text; g.line = l; g.col = c;
            if (at(tok::colon)) {
                eat();
                g.btype = expect(tok::lid, "name type").text;
            }
            expect(tok::dot, "'.'");
            sgoal body; body.k = sgoal::gk::conj; body.kids = goal_seq();
            g.kids.push_back(std::move(body));
            return g;
        }
        if (at(tok::lid) && cur().text == "forall*") {
            eat();
            token v = expect(tok::uid, "variable after 'forall*'");
            expect(tok::colon, "':'");
            type_ptr ty = type_expr();
            expect(tok::dot, "'.'");
            sgoal g; g.k = sgoal::gk::fstar; g.bname = v.text; g.bty = ty; g.line = l; g.col = c;
            sgoal body; body.k = sgoal::gk::conj; body.kids = goal_seq();
            g.kids.push_back(std::move(body));
            return g;
        }
        if (at(tok::lparen) && starts_goal_group()) {
            eat();
            sgoal first; first.k = sgoal::gk::conj; first.kids = goal_seq(); first.line = l; first.col = c;
            if (at(tok::semi)) {
                sgoal d; d.k = sgoal::gk::disj; d.line = l; d.col = c;
                d.kids.push_back(std::move(first));
                while (at(tok::semi)) {
                    eat();
                    sgoal next; next.k = sgoal::gk::conj; next.kids = goal_seq();
                    d.kids.push_back(std::move(next));
                }
                expect(tok::rparen, "')'");
                return d;
            }
            expect(tok::rparen, "')'");
            return first;
        }
        sterm t = term_expr();
        if (at(tok::eq)) {
            eat();
            sgoal g; g.k = sgoal::gk::eq; g.t = std::move(t); g.u = term_expr(); g.line = l; g.col = c;
            return g;
        }
        if (at(tok::hash)) {
            eat();
            sgoal g; g.k = sgoal::gk::fresh; g.t = std::move(t); g.u = term_expr(); g.line = l; g.col = c;
            return g;
        }
        if (t.k == sterm::sk::id && t.text == "true") { sgoal g; g.k = sgoal::gk::truth; g.line = l; g.col = c; return g; }
        if (t.k == sterm::sk::id && t.text == "false") { sgoal g; g.k = sgoal::gk::falsity; g.line = l; g.col = c; return g; }
        if (t.k != sterm::sk::compound && t.k != sterm::sk::id)
            throw parse_error("expected an atom", t.line, t.col);
        sgoal g; g.k = sgoal::gk::atom; g.t = std::move(t); g.line = l; g.col = c;
        return g;
    }

    // Distinguish a parenthesized goal group from a tuple term: a group is
    // only valid where a goal starts, and a tuple there would have to be
    // followed by '=' or '#'.  Scan for the matching close paren and look.
    bool starts_goal_group() {
        int depth = 0;
        for (size_t j = pos; j < toks.size(); j++) {
            if (toks[j].k == tok::lparen || toks[j].k == tok::lbrack) depth++;
            else if (toks[j].k == tok::rparen || toks[j].k == tok::rbrack) {
                depth--;
                if (depth == 0)
                    return !(toks[j + 1].k == tok::eq || toks[j + 1].k == tok::hash || toks[j + 1].k == tok::at);
            } else if (depth == 1 && toks[j].k == tok::semi) return true;
        }
        return false;
    }

    // ----------------------------------------------------------------- items

    void clause() {
        int line = cur().line;
        sterm head = term_expr();
        if (at(tok::eq)) {
            // function equation: f(patterns) = result [:- body].
            eat();
            sterm result = term_expr();
            std::vector<sgoal> body;
            if (at(tok::coldash)) { eat(); body = goal_seq(); }
            expect(tok::dot, "'.'");
            if (head.k != sterm::sk::compound)
                fail_at(head, "function equation head must be a function application");
            auto fs = prog.sig.syms.lookup(head.text);
            if (!fs || !prog.sig.funcs.count(*fs))
                fail_at(head, "unknown function '" + head.text + "'");
            const func_info& fi = prog.sig.funcs.at(*fs);
            sterm relhead;
            relhead.k = sterm::sk::compound;
            relhead.text = prog.sig.syms.str(fi.rel);
            relhead.line = head.line; relhead.col = head.col;
            relhead.kids = std::move(head.kids);
            relhead.kids.push_back(std::move(result));
            finish_clause(std::move(relhead), std::move(body), line);
            return;
        }
        std::vector<sgoal> body;
        if (at(tok::coldash)) { eat(); body = goal_seq(); }
        expect(tok::dot, "'.'");
        finish_clause(std::move(head), std::move(body), line);
    }

    void directive() {
        int line = cur().line;
        eat();  // #check
        token label = expect(tok::strlit, "check label string");
        token depth = expect(tok::num, "depth bound");
        expect(tok::colon, "':'");
        std::vector<sgoal> hyps = goal_seq();
        expect(tok::darrow, "'=>'");
        sgoal concl = goal_one();
        expect(tok::dot, "'.'");

        fresh_ctr = 0;
        used_vars.clear();
        for (auto& h : hyps) collect_vars(h);
        collect_vars(concl);

        // flatten function calls
        std::vector<sgoal> fhyps;
        for (auto& h : hyps) flatten_goal(std::move(h), fhyps);
        std::vector<sgoal> fconc;
        flatten_goal(std::move(concl), fconc);
        if (fconc.empty() || fconc.back().k != sgoal::gk::atom)
            throw parse_error("check conclusion must be an atom", line, 1);
        // extractions produced by the conclusion join the hypotheses
        for (size_t i = 0; i + 1 < fconc.size(); i++) fhyps.push_back(std::move(fconc[i]));

        rctx ctx;
        ctx.hoist_names = true;
        check_directive d;
        d.label = label.text;
        d.depth = std::stoi(depth.text);
        d.src_line = line;
        for (auto& h : fhyps) d.hyps.push_back(resolve_goal(h, ctx));
        d.concl = resolve_goal(fconc.back(), ctx);
        d.qvars = ctx.var_order;
        d.qnames = ctx.name_order;
        prog.checks.push_back(std::move(d));
    }

    // ------------------------------------------------------- func flattening

    bool is_func_call(const sterm& t) const {
        if (t.k != sterm::sk::compound) return false;
        auto s = prog.sig.syms.lookup(t.text);
        return s && prog.sig.funcs.count(*s);
    }

    // Replace function calls inside t by fresh variables, appending extraction
    // atoms (innermost first, left to right) to `extra`.
    void flatten_sterm(sterm& t, std::vector<sgoal>& extra) {
        for (auto& k : t.kids) flatten_sterm(k, extra);
        if (is_func_call(t)) {
            const func_info& fi = prog.sig.funcs.at(*prog.sig.syms.lookup(t.text));
            sterm call;
            call.k = sterm::sk::compound;
            call.text = prog.sig.syms.str(fi.rel);
            call.line = t.line; call.col = t.col;
            call.kids = std::move(t.kids);
            sterm rv;
            rv.k = sterm::sk::var; rv.text = freshname("_R"); rv.line = t.line; rv.col = t.col;
            call.kids.push_back(rv);
            sgoal g; g.k = sgoal::gk::atom; g.t = std::move(call); g.line = t.line; g.col = t.col;
            extra.push_back(std::move(g));
            t = std::move(rv);
        }
    }

    // Flatten one goal; emits replacement goal(s) onto `out`.
    void flatten_goal(sgoal g, std::vector<sgoal>& out) {
        switch (g.k) {
            case sgoal::gk::eq: {
                // f(args) = t collapses into f_rel(args, t)
                if (is_func_call(g.t) || is_func_call(g.u)) {
                    if (!is_func_call(g.t)) std::swap(g.t, g.u);
                    flatten_sterm(g.u, out);
                    for (auto& k : g.t.kids) flatten_sterm(k, out);
                    const func_info& fi = prog.sig.funcs.at(*prog.sig.syms.lookup(g.t.text));
                    sterm call;
                    call.k = sterm::sk::compound;
                    call.text = prog.sig.syms.str(fi.rel);
                    call.line = g.t.line; call.col = g.t.col;
                    call.kids = std::move(g.t.kids);
                    call.kids.push_back(std::move(g.u));
                    sgoal a; a.k = sgoal::gk::atom; a.t = std::move(call); a.line = g.line; a.col = g.col;
                    out.push_back(std::move(a));
                    return;
                }
                flatten_sterm(g.t, out);
                flatten_sterm(g.u, out);
                out.push_back(std::move(g));
                return;
            }
            case sgoal::gk::atom: case sgoal::gk::fresh:
                flatten_sterm(g.t, out);
                if (g.k == sgoal::gk::fresh) flatten_sterm(g.u, out);
                out.push_back(std::move(g));
                return;
            case sgoal::gk::conj: case sgoal::gk::disj: case sgoal::gk::neW: case sgoal::gk::fstar: {
                for (auto& kid : g.kids) {
                    sgoal moved = std::move(kid);
                    std::vector<sgoal> inner;
                    if (moved.k == sgoal::gk::conj) {
                        for (auto& sub : moved.kids) flatten_goal(std::move(sub), inner);
                    } else {
                        flatten_goal(std::move(moved), inner);
                        if (inner.size() == 1) { kid = std::move(inner[0]); continue; }
                    }
                    sgoal c; c.k = sgoal::gk::conj; c.kids = std::move(inner);
                    c.line = g.line; c.col = g.col;
                    kid = std::move(c);
                }
                out.push_back(std::move(g));
                return;
            }
            default:
                out.push_back(std::move(g));
                return;
        }
    }

    // ------------------------------------------------------------ resolution

    struct rctx {
        std::map<std::string, uint32_t> vars;
        std::vector<uint32_t> var_order;
        std::map<std::string, uint32_t> names;
        std::vector<uint32_t> name_order;
        bool hoist_names = false;
    };

    uint32_t get_var(rctx& ctx, const std::string& name, const type_ptr& ty, const sterm& at) {
        auto it = ctx.vars.find(name);
        if (it != ctx.vars.end()) {
            if (!type_eq(prog.st.var(it->second).ty, ty))
                fail_at(at, "variable " + name + " used at type " + prog.sig.type_str(ty) +
                            " but has type " + prog.sig.type_str(prog.st.var(it->second).ty));
            return it->second;
        }
        uint32_t v = prog.st.fresh_var(ty, name);
        ctx.vars[name] = v;
        ctx.var_order.push_back(v);
        return v;
    }

    uint32_t get_name(rctx& ctx, const std::string& name, sym ntype, const sterm& at) {
        auto it = ctx.names.find(name);
        if (it != ctx.names.end()) {
            if (prog.st.name(it->second).ntype != ntype)
                fail_at(at, "name " + name + " used at two name types");
            return it->second;
        }
        uint32_t n = ctx.hoist_names ? prog.st.fresh_name_hoisted(ntype, name)
                                     : prog.st.fresh_name(ntype, name);
        ctx.names[name] = n;
        ctx.name_order.push_back(n);
        return n;
    }

    // Bottom-up type inference for constraint goals; null when undetermined.
    type_ptr infer_type(const sterm& t, rctx& ctx) {
        switch (t.k) {
            case sterm::sk::var: {
                auto it = ctx.vars.find(t.text);
                return it == ctx.vars.end() ? nullptr : prog.st.var(it->second).ty;
            }
            case sterm::sk::id: {
                auto it = ctx.names.find(t.text);
                if (it != ctx.names.end()) return ty_name(prog.st.name(it->second).ntype);
                auto s = prog.sig.syms.lookup(t.text);
                if (s) {
                    auto c = prog.sig.ctors.find(*s);
                    if (c != prog.sig.ctors.end() && c->second.arg->k == tykind::unit)
                        return ty_base(c->second.result);
                }
                return nullptr;
            }
            case sterm::sk::compound: {
                auto s = prog.sig.syms.lookup(t.text);
                if (s) {
                    auto c = prog.sig.ctors.find(*s);
                    if (c != prog.sig.ctors.end()) return ty_base(c->second.result);
                }
                return nullptr;
            }
            case sterm::sk::tuple: {
                std::vector<type_ptr> parts;
                for (auto& k : t.kids) {
                    type_ptr p = infer_type(k, ctx);
                    if (!p) return nullptr;
                    parts.push_back(p);
                }
                return ty_tuple(parts);
            }
            case sterm::sk::list: {
                if (t.has_tail) {
                    type_ptr tail = infer_type(t.kids.back(), ctx);
                    if (tail) return tail;
                }
                size_t items = t.kids.size() - (t.has_tail ? 1 : 0);
                for (size_t i = 0; i < items; i++) {
                    type_ptr e = infer_type(t.kids[i], ctx);
                    if (e) return ty_base(prog.sig.list_type(e));
                }
                return nullptr;
            }
            case sterm::sk::abs: {
                auto it = ctx.names.find(t.text);
                if (it == ctx.names.end()) return nullptr;
                type_ptr b = infer_type(t.kids[0], ctx);
                if (!b) return nullptr;
                return ty_abs(prog.st.name(it->second).ntype, b);
            }
            case sterm::sk::conc: {
                type_ptr inner = infer_type(t.kids[0], ctx);
                if (inner && inner->k == tykind::abs) return inner->a;
                return nullptr;
            }
            default:
                return nullptr;
        }
    }

    struct conc_pending {
        term inner;
        uint32_t name;
        uint32_t var;
    };

    term resolve_term(const sterm& t, const type_ptr& ty, rctx& ctx, std::vector<conc_pending>* concs) {
        switch (t.k) {
            case sterm::sk::wild:
                return mk_var(prog.st.fresh_var(ty, "_"));
            case sterm::sk::var:
                return mk_var(get_var(ctx, t.text, ty, t));
            case sterm::sk::id: {
                if (ty->k == tykind::name)
                    return mk_name(get_name(ctx, t.text, ty->head, t));
                if (ty->k == tykind::base) {
                    auto s = prog.sig.syms.lookup(t.text);
                    if (s) {
                        auto c = prog.sig.ctors.find(*s);
                        if (c != prog.sig.ctors.end() && c->second.result == ty->head) {
                            if (c->second.arg->k != tykind::unit)
                                fail_at(t, "constructor " + t.text + " expects arguments");
                            return mk_app(*s, mk_unit());
                        }
                    }
                }
                fail_at(t, "'" + t.text + "' does not fit type " + prog.sig.type_str(ty));
            }
            case sterm::sk::compound: {
                if (ty->k != tykind::base)
                    fail_at(t, t.text + "(...) used at non-base type " + prog.sig.type_str(ty));
                auto s = prog.sig.syms.lookup(t.text);
                if (!s || !prog.sig.ctors.count(*s))
                    fail_at(t, "unknown constructor '" + t.text + "'");
                const ctor_info& ci = prog.sig.ctors.at(*s);
                if (ci.result != ty->head)
                    fail_at(t, t.text + " builds " + prog.sig.syms.str(ci.result) +
                               ", expected " + prog.sig.type_str(ty));
                return mk_app(*s, resolve_args(t, t.kids, ci.arg, ctx, concs));
            }
            case sterm::sk::tuple:
                return resolve_args(t, t.kids, ty, ctx, concs);
            case sterm::sk::list: {
                if (ty->k != tykind::base || !prog.sig.is_list(ty->head))
                    fail_at(t, "list literal at non-list type " + prog.sig.type_str(ty));
                type_ptr elem = prog.sig.list_elem.at(ty->head);
                auto [nilc, consc] = prog.sig.list_ctors.at(ty->head);
                size_t items = t.kids.size() - (t.has_tail ? 1 : 0);
                std::vector<term> elems;
                for (size_t i = 0; i < items; i++)
                    elems.push_back(resolve_term(t.kids[i], elem, ctx, concs));
                term tail = t.has_tail ? resolve_term(t.kids.back(), ty, ctx, concs)
                                       : mk_app(nilc, mk_unit());
                for (size_t i = items; i-- > 0;)
                    tail = mk_app(consc, mk_pair(elems[i], tail));
                return tail;
            }
            case sterm::sk::abs: {
                if (ty->k != tykind::abs)
                    fail_at(t, "abstraction at non-abstraction type " + prog.sig.type_str(ty));
                uint32_t n = get_name(ctx, t.text, ty->head, t);
                return mk_abs(n, resolve_term(t.kids[0], ty->a, ctx, concs));
            }
            case sterm::sk::conc: {
                if (!concs) fail_at(t, "concretion not allowed in this position");
                auto it = ctx.names.find(t.text);
                if (it == ctx.names.end())
                    fail_at(t, "unknown name '" + t.text + "' in concretion");
                uint32_t n = it->second;
                type_ptr ity = ty_abs(prog.st.name(n).ntype, ty);
                term inner = resolve_term(t.kids[0], ity, ctx, concs);
                uint32_t x = prog.st.fresh_var(ty, freshname("_C"));
                concs->push_back({inner, n, x});
                return mk_var(x);
            }
        }
        fail_at(t, "malformed term");
    }

    // Checks a list of argument terms against a right-nested tuple type.
    term resolve_args(const sterm& at, const std::vector<sterm>& kids, const type_ptr& ty,
                      rctx& ctx, std::vector<conc_pending>* concs) {
        if (kids.empty()) {
            if (ty->k != tykind::unit) fail_at(at, "missing arguments");
            return mk_unit();
        }
        if (kids.size() == 1) return resolve_term(kids[0], ty, ctx, concs);
        if (ty->k != tykind::pair) fail_at(at, "too many arguments");
        std::vector<sterm> rest(kids.begin() + 1, kids.end());
        term a = resolve_term(kids[0], ty->a, ctx, concs);
        term b = resolve_args(at, rest, ty->b, ctx, concs);
        return mk_pair(a, b);
    }

    goal wrap_concs(goal g, std::vector<conc_pending>& concs) {
        for (size_t i = concs.size(); i-- > 0;)
            g = g_conc(concs[i].inner, concs[i].name, concs[i].var,
                       prog.st.var(concs[i].var).ty, g);
        return g;
    }

    goal resolve_goal(const sgoal& g, rctx& ctx) {
        switch (g.k) {
            case sgoal::gk::truth: return g_top();
            case sgoal::gk::falsity: return g_bot();
            case sgoal::gk::atom: {
                const sterm& t = g.t;
                std::string pname = t.k == sterm::sk::compound || t.k == sterm::sk::id ? t.text : "";
                auto s = prog.sig.syms.lookup(pname);
                if (!s || !prog.sig.preds.count(*s))
                    fail_at(t, "unknown predicate '" + pname + "'");
                const pred_info& pi = prog.sig.preds.at(*s);
                size_t want = pi.args.size();
                size_t got = t.k == sterm::sk::compound ? t.kids.size() : 0;
                if (want != got)
                    fail_at(t, pname + " expects " + std::to_string(want) + " arguments");
                std::vector<conc_pending> concs;
                term arg = t.k == sterm::sk::compound
                               ? resolve_args(t, t.kids, pi.arg, ctx, &concs)
                               : mk_unit();
                return wrap_concs(g_atom(*s, arg), concs);
            }
            case sgoal::gk::eq: {
                type_ptr ty = infer_type(g.t, ctx);
                if (!ty) ty = infer_type(g.u, ctx);
                if (!ty) throw parse_error("cannot infer the type of this equation", g.line, g.col);
                std::vector<conc_pending> concs;
                term l = resolve_term(g.t, ty, ctx, &concs);
                term r = resolve_term(g.u, ty, ctx, &concs);
                return wrap_concs(g_eq(l, r, ty), concs);
            }
            case sgoal::gk::fresh: {
                type_ptr lty = infer_type(g.t, ctx);
                if (!lty) throw parse_error("cannot infer the name type on the left of '#'", g.line, g.col);
                if (lty->k != tykind::name)
                    throw parse_error("left side of '#' must have a name type", g.line, g.col);
                type_ptr rty = infer_type(g.u, ctx);
                if (!rty) throw parse_error("cannot infer the type on the right of '#'", g.line, g.col);
                std::vector<conc_pending> concs;
                term l = resolve_term(g.t, lty, ctx, &concs);
                term r = resolve_term(g.u, rty, ctx, &concs);
                return wrap_concs(g_fresh(l, r, lty->head, rty), concs);
            }
            case sgoal::gk::conj: {
                std::vector<goal> kids;
                for (auto& k : g.kids) kids.push_back(resolve_goal(k, ctx));
                return g_conj_all(kids);
            }
            case sgoal::gk::disj: {
                std::vector<goal> kids;
                for (auto& k : g.kids) kids.push_back(resolve_goal(k, ctx));
                return g_disj_all(kids);
            }
            case sgoal::gk::neW: {
                if (g.btype.empty())
                    throw parse_error("'new' needs a name type: new " + g.bname + ":t. ...",
                                      g.line, g.col);
                auto s = prog.sig.syms.lookup(g.btype);
                if (!s || !prog.sig.is_name_type(*s))
                    throw parse_error("unknown name type '" + g.btype + "'", g.line, g.col);
                uint32_t n = prog.st.fresh_name(*s, g.bname);
                auto prev = ctx.names.find(g.bname);
                bool had = prev != ctx.names.end();
                uint32_t prev_id = had ? prev->second : 0;
                ctx.names[g.bname] = n;
                goal body = resolve_goal(g.kids[0], ctx);
                if (had) ctx.names[g.bname] = prev_id; else ctx.names.erase(g.bname);
                return g_new(n, *s, body);
            }
            case sgoal::gk::fstar: {
                uint32_t v = prog.st.fresh_var(g.bty, g.bname);
                auto prev = ctx.vars.find(g.bname);
                bool had = prev != ctx.vars.end();
                uint32_t prev_id = had ? prev->second : 0;
                ctx.vars[g.bname] = v;
                goal body = resolve_goal(g.kids[0], ctx);
                if (had) ctx.vars[g.bname] = prev_id; else ctx.vars.erase(g.bname);
                return g_fstar(v, g.bty, body);
            }
        }
        throw parse_error("malformed goal", g.line, g.col);
    }

    // ---------------------------------------------------------- elaboration

    void finish_clause(sterm head, std::vector<sgoal> body, int line) {
        fresh_ctr = 0;
        used_vars.clear();
        collect_vars(head);
        for (auto& g : body) collect_vars(g);

        // flatten function calls: body goals inline, head extractions appended
        std::vector<sgoal> fbody;
        for (auto& g : body) flatten_goal(std::move(g), fbody);
        std::vector<sgoal> head_extra;
        for (auto& k : head.kids) flatten_sterm(k, head_extra);
        for (auto& g : head_extra) fbody.push_back(std::move(g));

        if (head.k != sterm::sk::compound && head.k != sterm::sk::id)
            fail_at(head, "clause head must be an atom");
        auto s = prog.sig.syms.lookup(head.text);
        if (!s || !prog.sig.preds.count(*s))
            fail_at(head, "unknown predicate '" + head.text + "'");
        const pred_info& pi = prog.sig.preds.at(*s);
        size_t got = head.k == sterm::sk::compound ? head.kids.size() : 0;
        if (pi.args.size() != got)
            fail_at(head, head.text + " expects " + std::to_string(pi.args.size()) + " arguments");

        rctx ctx;
        term harg = head.k == sterm::sk::compound
                        ? resolve_args(head, head.kids, pi.arg, ctx, nullptr)
                        : mk_unit();
        std::set<uint32_t> head_ctx_vars;
        for (auto v : ctx.var_order) head_ctx_vars.insert(v);

        std::vector<goal> bgoals;
        for (auto& g : fbody) bgoals.push_back(resolve_goal(g, ctx));

        std::set<uint32_t> clause_level_vars;
        for (auto v : ctx.var_order) clause_level_vars.insert(v);

        horn_clause c = elaborate(*s, pi, harg, bgoals, ctx, clause_level_vars);
        c.src_line = line;
        prog.add_clause(std::move(c));
    }

    struct abs_pull {
        uint32_t binder;                       // source binder name
        std::vector<std::pair<uint32_t, term>> slots;  // (head var W, abstraction body)
        std::vector<type_ptr> body_types;
    };

    horn_clause elaborate(sym pred, const pred_info& pi, term harg, std::vector<goal>& bgoals,
                          rctx& ctx, const std::set<uint32_t>& clause_vars) {
        std::vector<goal> lin_eqs;
        std::vector<abs_pull> pulls;
        std::set<uint32_t> seen;

        std::function<term(const term&, const type_ptr&)> lin =
            [&](const term& t, const type_ptr& ty) -> term {
            switch (t->k) {
                case tkind::var: {
                    if (seen.insert(t->id).second) return t;
                    uint32_t v = prog.st.fresh_var(ty, freshname("_E"));
                    lin_eqs.push_back(g_eq(mk_var(v), t, ty));
                    return mk_var(v);
                }
                case tkind::name: {
                    uint32_t v = prog.st.fresh_var(ty, freshname("_E"));
                    lin_eqs.push_back(g_eq(mk_var(v), t, ty));
                    return mk_var(v);
                }
                case tkind::unit:
                    return t;
                case tkind::pair: {
                    // left component first: linearization keeps the leftmost
                    // occurrence of a repeated variable
                    term a = lin(t->a, ty->a);
                    term b = lin(t->b, ty->b);
                    return mk_pair(a, b);
                }
                case tkind::app:
                    return mk_app(t->f, lin(t->a, prog.sig.ctors.at(t->f).arg));
                case tkind::abs: {
                    uint32_t w = prog.st.fresh_var(ty, freshname("_A"));
                    abs_pull* p = nullptr;
                    for (auto& q : pulls)
                        if (q.binder == t->id) { p = &q; break; }
                    if (!p) { pulls.push_back({t->id, {}, {}}); p = &pulls.back(); }
                    p->slots.push_back({w, t->a});
                    p->body_types.push_back(ty->a);
                    return mk_var(w);
                }
            }
            return t;
        };
        term linear_head = lin(harg, pi.arg);

        std::set<uint32_t> pulled;
        for (auto& p : pulls) pulled.insert(p.binder);
        // variables standing directly under a pulled abstraction become
        // concretion binds: they are younger than the pulled name, so
        // freshness atoms mentioning them are real constraints
        std::set<uint32_t> conc_bound;
        for (auto& p : pulls)
            for (auto& [w, bt] : p.slots)
                if (bt->k == tkind::var) conc_bound.insert(bt->id);

        // drop body freshness atoms the concretion discipline already enforces
        std::vector<goal> kept;
        for (auto& g : bgoals) {
            if (g->k == gkind::fresh && g->t->k == tkind::name && pulled.count(g->t->id) &&
                !occurs_name(g->t->id, g->u)) {
                auto vs = free_vars(g->u);
                bool implied = true;
                for (auto v : vs)
                    if (!clause_vars.count(v) || conc_bound.count(v)) { implied = false; break; }
                if (implied) continue;
            }
            kept.push_back(g);
        }

        // body = lin_eqs, new a1. ... new ak. (concretions, kept body)
        goal body = g_conj_all(kept);
        for (size_t i = pulls.size(); i-- > 0;) {
            abs_pull& p = pulls[i];
            for (size_t j = p.slots.size(); j-- > 0;) {
                auto& [w, bt] = p.slots[j];
                if (bt->k == tkind::var && !prog.st.var(bt->id).universal) {
                    body = g_conc(mk_var(w), p.binder, bt->id, p.body_types[j], body);
                } else {
                    uint32_t x = prog.st.fresh_var(p.body_types[j], freshname("_C"));
                    body = g_conc(mk_var(w), p.binder, x,
                                  p.body_types[j], g_conj(g_eq(mk_var(x), bt, p.body_types[j]), body));
                }
            }
            body = g_new(p.binder, prog.st.name(p.binder).ntype, body);
        }
        std::vector<goal> all = lin_eqs;
        if (body->k != gkind::top || all.empty()) all.push_back(body);
        body = g_conj_all(all);

        horn_clause c;
        c.pred = pred;
        c.head = linear_head;
        c.body = body;
        std::set<uint32_t> vseen, vbound;
        free_vars_into(c.head, c.vars, vseen);
        goal_free_vars_into(c.body, vbound, c.vars, vseen);
        std::set<uint32_t> bound, nseen;
        for (auto& oc : free_names(c.head))
            if (nseen.insert(oc.name).second) c.names.push_back(oc.name);
        goal_free_names_into(c.body, bound, c.names, nseen);
        return c;
    }
};

// ---------------------------------------------------------------------------

inline void parse_into(program& prog, const std::string& text) {
    parser p(prog);
    p.run(text);
}

inline program parse_program(const std::string& text) {
    program prog;
    parse_into(prog, text);
    return prog;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open " + path, 0, 0);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline program parse_file(const std::string& path) {
    return parse_program(read_file(path));
}

// ---------------------------------------------------------------------------
// Program printing (round-trips through the parser)

inline std::string show_directive(const program& p, const check_directive& d) {
    printer pr{&p.sig, &p.st, {}};
    std::string s = "#check \"" + d.label + "\" " + std::to_string(d.depth) + " : ";
    for (size_t i = 0; i < d.hyps.size(); i++) {
        if (i) s += ", ";
        s += pr.goal_str(d.hyps[i], 1);
    }
    s += " => " + pr.goal_str(d.concl, 1) + ".";
    return s;
}

inline std::string show_program(const program& p) {
    std::ostringstream out;
    const signature& sig = p.sig;
    for (auto& [k, s] : p.decl_order) {
        switch (k) {
            case program::dkind::base:
                out << sig.syms.str(s) << ": type.\n";
                break;
            case program::dkind::name:
                out << sig.syms.str(s) << ": name_type.\n";
                break;
            case program::dkind::ctor: {
                const ctor_info& ci = sig.ctors.at(s);
                if (ci.arg->k == tykind::unit)
                    out << sig.syms.str(s) << ": " << sig.syms.str(ci.result) << ".\n";
                else
                    out << sig.syms.str(s) << ": " << sig.type_str(ci.arg)
                        << " -> " << sig.syms.str(ci.result) << ".\n";
                break;
            }
            case program::dkind::alias:
                out << "type " << sig.syms.str(s) << " = " << sig.type_str(sig.aliases.at(s)) << ".\n";
                break;
            case program::dkind::pred: {
                const pred_info& pi = sig.preds.at(s);
                out << "pred " << sig.syms.str(s);
                if (!pi.args.empty()) {
                    out << "(";
                    for (size_t i = 0; i < pi.args.size(); i++)
                        out << (i ? "," : "") << sig.type_str(pi.args[i]);
                    out << ")";
                }
                out << ".\n";
                break;
            }
            case program::dkind::func: {
                const func_info& fi = sig.funcs.at(s);
                out << "func " << sig.syms.str(s) << "(";
                for (size_t i = 0; i < fi.args.size(); i++)
                    out << (i ? "," : "") << sig.type_str(fi.args[i]);
                out << ") = " << sig.type_str(fi.result) << ".\n";
                break;
            }
        }
    }
    for (auto& c : p.clauses) out << show_clause(p, c) << "\n";
    for (auto& d : p.checks) out << show_directive(p, d) << "\n";
    return out.str();
}

} // namespace nomcheck
