#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "hmlnv/spec.hpp"

namespace hmlnv {

namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok : uint8_t {
    Ident,    // names, variables, constants (also the `v` of disjunction)
    Number,   // 1, -0.5, 1e-3
    LParen, RParen, LBrace, RBrace, LBracket, RBracket,
    Comma, Equals,    // =
    Bang,             // !
    Caret,            // ^
    Implies,          // =>
    Iff,              // <=>
    Less, Greater,    // < >
    EqEq,             // ==
    Star,             // *
    Newline,
    End,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    double number = 0;
    int line = 0, col = 0;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : src_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '\n') {
                emit(out, Tok::Newline, "\n");
                advance();
                ++line_;
                col_ = 1;
                continue;
            }
            if (c == ' ' || c == '\t' || c == '\r') {
                advance();
                continue;
            }
            if (c == '/' && peek(1) == '/') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
                continue;
            }
            if (c == '#') {  // alternative comment marker
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
                continue;
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                lex_ident(out);
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' ||
                ((c == '-' || c == '+') && starts_number())) {
                lex_number(out);
                continue;
            }
            lex_punct(out);
        }
        emit(out, Tok::End, "");
        return out;
    }

private:
    void advance() { ++pos_; ++col_; }
    char peek(size_t k) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }

    bool starts_number() const {
        // '-'/'+' begins a number only when followed by a digit or a dot-digit
        const char n = peek(1);
        return std::isdigit(static_cast<unsigned char>(n)) || (n == '.' && std::isdigit(static_cast<unsigned char>(peek(2))));
    }

    void emit(std::vector<Token>& out, Tok kind, std::string text) {
        out.push_back({kind, std::move(text), 0, line_, col_});
    }

    void lex_ident(std::vector<Token>& out) {
        const int line = line_, col = col_;
        std::string s;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            s += src_[pos_];
            advance();
        }
        out.push_back({Tok::Ident, std::move(s), 0, line, col});
    }

    void lex_number(std::vector<Token>& out) {
        const int line = line_, col = col_;
        const size_t start = pos_;
        if (src_[pos_] == '-' || src_[pos_] == '+') advance();
        while (pos_ < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
            advance();
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            advance();
            if (pos_ < src_.size() && (src_[pos_] == '-' || src_[pos_] == '+')) advance();
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                advance();
        }
        const std::string text = src_.substr(start, pos_ - start);
        char* end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        if (end != text.c_str() + text.size())
            throw ParseError("malformed number '" + text + "'", line, col);
        out.push_back({Tok::Number, text, v, line, col});
    }

    void lex_punct(std::vector<Token>& out) {
        const int line = line_, col = col_;
        const char c = src_[pos_];
        auto two = [&](char a, char b) { return c == a && peek(1) == b; };
        if (two('<', '=') && peek(2) == '>') {
            advance(); advance(); advance();
            out.push_back({Tok::Iff, "<=>", 0, line, col});
            return;
        }
        if (two('=', '>')) {
            advance(); advance();
            out.push_back({Tok::Implies, "=>", 0, line, col});
            return;
        }
        if (two('=', '=')) {
            advance(); advance();
            out.push_back({Tok::EqEq, "==", 0, line, col});
            return;
        }
        Tok kind;
        switch (c) {
            case '(': kind = Tok::LParen; break;
            case ')': kind = Tok::RParen; break;
            case '{': kind = Tok::LBrace; break;
            case '}': kind = Tok::RBrace; break;
            case '[': kind = Tok::LBracket; break;
            case ']': kind = Tok::RBracket; break;
            case ',': kind = Tok::Comma; break;
            case '=': kind = Tok::Equals; break;
            case '!': kind = Tok::Bang; break;
            case '^': kind = Tok::Caret; break;
            case '<': kind = Tok::Less; break;
            case '>': kind = Tok::Greater; break;
            case '*': kind = Tok::Star; break;
            default:
                throw ParseError(std::string("unexpected character '") + c + "'", line, col);
        }
        advance();
        out.push_back({kind, std::string(1, c), 0, line, col});
    }

    const std::string& src_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
};

// ---------------------------------------------------------------------------
// Parser

bool is_variable_name(const std::string& s) {
    return !s.empty() && std::islower(static_cast<unsigned char>(s[0]));
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    Spec run() {
        while (!at(Tok::End)) {
            if (at(Tok::Newline)) {
                next();
                continue;
            }
            if (at(Tok::Ident)) {
                const std::string& kw = cur().text;
                if (kw == "domain") { parse_domain(); continue; }
                if (kw == "predicate") { parse_predicate(AtomKind::Symbolic); continue; }
                if (kw == "subsymbolic") { parse_predicate(AtomKind::SubSymbolic); continue; }
                if (kw == "option") { parse_option(); continue; }
                fail("expected a declaration or a weighted formula");
            }
            if (at(Tok::Number)) { parse_weighted(); continue; }
            fail("expected a declaration or a weighted formula");
        }
        return std::move(spec_);
    }

private:
    const Token& cur() const { return toks_[idx_]; }
    bool at(Tok k) const { return cur().kind == k; }
    const Token& next() { return toks_[idx_++]; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, cur().line, cur().col);
    }
    const Token& expect(Tok k, const char* what) {
        if (!at(k)) fail(std::string("expected ") + what);
        return next();
    }
    void end_of_line() {
        if (!at(Tok::Newline) && !at(Tok::End)) fail("unexpected trailing input");
        if (at(Tok::Newline)) next();
    }

    void parse_domain() {
        next();  // 'domain'
        const std::string name = expect(Tok::Ident, "domain name").text;
        if (spec_.domain_index(name) >= 0) fail("duplicate domain '" + name + "'");
        expect(Tok::Equals, "'='");
        expect(Tok::LBrace, "'{'");
        Domain dom;
        dom.name = name;
        while (true) {
            const std::string c = expect(Tok::Ident, "constant").text;
            if (dom.index_of(c) >= 0) fail("duplicate constant '" + c + "'");
            dom.constants.push_back(c);
            if (at(Tok::Comma)) { next(); continue; }
            break;
        }
        expect(Tok::RBrace, "'}'");
        spec_.domains.push_back(std::move(dom));
        end_of_line();
    }

    void parse_predicate(AtomKind kind) {
        next();  // keyword
        PredicateSchema schema;
        schema.kind = kind;
        schema.name = expect(Tok::Ident, "predicate name").text;
        if (spec_.schema_index(schema.name) >= 0)
            fail("duplicate predicate '" + schema.name + "'");
        expect(Tok::LParen, "'('");
        while (true) {
            const Token& t = expect(Tok::Ident, "domain name");
            const int d = spec_.domain_index(t.text);
            if (d < 0) throw ParseError("unknown domain '" + t.text + "'", t.line, t.col);
            schema.arg_domains.push_back(d);
            if (at(Tok::Comma)) { next(); continue; }
            break;
        }
        expect(Tok::RParen, "')'");
        spec_.schemas.push_back(std::move(schema));
        end_of_line();
    }

    void parse_option() {
        next();  // 'option'
        const std::string key = expect(Tok::Ident, "option name").text;
        if (key == "metric") {
            const Token& t = expect(Tok::Ident, "metric name");
            if (t.text != "euclidean" && t.text != "cosine")
                throw ParseError("unknown metric '" + t.text + "'", t.line, t.col);
            spec_.metric = t.text;
        } else if (key == "softness") {
            const Token& t = expect(Tok::Number, "softness value");
            if (!(t.number > 0)) throw ParseError("softness must be positive", t.line, t.col);
            spec_.default_softness = t.number;
        } else {
            fail("unknown option '" + key + "'");
        }
        end_of_line();
    }

    // ---------------------------------------------------------------- formulas

    // Free variables of the property being parsed, in order of first use.
    std::vector<FreeVar> vars_;
    std::map<std::string, int> var_slots_;

    int var_slot(const std::string& name, int arg_domain, const Token& where) {
        auto it = var_slots_.find(name);
        if (it == var_slots_.end()) {
            const int slot = static_cast<int>(vars_.size());
            vars_.push_back({name, arg_domain});
            var_slots_[name] = slot;
            return slot;
        }
        const int slot = it->second;
        if (vars_[slot].domain != arg_domain)
            throw ParseError("variable '" + name + "' used with conflicting domains",
                             where.line, where.col);
        return slot;
    }

    void parse_weighted() {
        const double weight = next().number;
        vars_.clear();
        var_slots_.clear();
        FormulaPtr f = parse_iff();
        check_symbolic_shape(*f);
        Property p;
        p.id = static_cast<int>(spec_.properties.size());
        p.init_weight = weight;
        p.formula = std::move(f);
        p.free_vars = vars_;
        spec_.properties.push_back(std::move(p));
        end_of_line();
    }

    FormulaPtr parse_iff() {
        FormulaPtr left = parse_implies();
        while (at(Tok::Iff)) {  // left-associative, kept binary
            next();
            left = Formula::connective(Conn::Iff, {std::move(left), parse_implies()});
        }
        return left;
    }

    FormulaPtr parse_implies() {
        FormulaPtr left = parse_or();
        if (!at(Tok::Implies)) return left;
        next();
        FormulaPtr right = parse_implies();  // right-associative
        return Formula::connective(Conn::Implies, {std::move(left), std::move(right)});
    }

    bool at_or_keyword() const { return at(Tok::Ident) && cur().text == "v"; }

    FormulaPtr parse_or() {
        FormulaPtr left = parse_and();
        if (!at_or_keyword()) return left;
        std::vector<FormulaPtr> kids{std::move(left)};
        while (at_or_keyword()) {
            next();
            kids.push_back(parse_and());
        }
        return Formula::connective(Conn::Or, std::move(kids));
    }

    FormulaPtr parse_and() {
        FormulaPtr left = parse_unary();
        if (!at(Tok::Caret)) return left;
        std::vector<FormulaPtr> kids{std::move(left)};
        while (at(Tok::Caret)) {
            next();
            kids.push_back(parse_unary());
        }
        return Formula::connective(Conn::And, std::move(kids));
    }

    FormulaPtr parse_unary() {
        if (at(Tok::Bang)) {
            next();
            return Formula::lnot(parse_unary());
        }
        return parse_primary();
    }

    FormulaPtr parse_primary() {
        if (at(Tok::LParen)) {
            next();
            FormulaPtr inner = parse_group_body();
            expect(Tok::RParen, "')'");
            // (continuous) * (symbolic)
            if (at(Tok::Star)) {
                const Token& star = next();
                if (classify(*inner) != FormulaClass::Continuous)
                    throw ParseError("left factor of '*' must be a soft term", star.line,
                                     star.col);
                expect(Tok::LParen, "'('");
                FormulaPtr sym = parse_group_body();
                expect(Tok::RParen, "')'");
                if (classify(*sym) != FormulaClass::Symbolic)
                    throw ParseError("right factor of '*' must be symbolic", star.line,
                                     star.col);
                return Formula::product(std::move(inner), std::move(sym));
            }
            return inner;
        }
        if (at(Tok::Ident)) return parse_atom_or_soft();
        fail("expected a formula");
    }

    // Body of a parenthesised group: a soft term when it opens with a number
    // or a sub-symbolic atom, otherwise an ordinary formula.
    FormulaPtr parse_group_body() {
        if (at(Tok::Number)) return parse_soft_term();
        if (at(Tok::Ident) && !at_or_keyword()) {
            const int schema = spec_.schema_index(cur().text);
            if (schema >= 0 && spec_.schemas[schema].kind == AtomKind::SubSymbolic)
                return parse_soft_term();
        }
        return parse_iff();
    }

    NumericTerm parse_numeric_term() {
        if (at(Tok::Number)) {
            NumericTerm t;
            t.value = next().number;
            return t;
        }
        const Token& name = expect(Tok::Ident, "sub-symbolic atom or number");
        const int schema = spec_.schema_index(name.text);
        if (schema < 0)
            throw ParseError("unknown predicate '" + name.text + "'", name.line, name.col);
        if (spec_.schemas[schema].kind != AtomKind::SubSymbolic)
            throw ParseError("'" + name.text + "' is not sub-symbolic", name.line, name.col);
        NumericTerm t;
        t.schema = schema;
        t.args = parse_args(schema);
        return t;
    }

    FormulaPtr parse_soft_term() {
        NumericTerm lhs = parse_numeric_term();
        if (at(Tok::EqEq)) {
            next();
            NumericTerm rhs = parse_numeric_term();
            return Formula::soft_eq(std::move(lhs), std::move(rhs));
        }
        IneqDir dir;
        if (at(Tok::Less)) dir = IneqDir::Less;
        else if (at(Tok::Greater)) dir = IneqDir::Greater;
        else fail("expected '==', '<' or '>'");
        next();
        const double tau = expect(Tok::Number, "threshold").number;
        double softness = spec_.default_softness;
        if (at(Tok::Ident) && cur().text == "a") {  // optional `a=<num>`
            next();
            expect(Tok::Equals, "'='");
            const Token& t = expect(Tok::Number, "softness value");
            if (!(t.number > 0)) throw ParseError("softness must be positive", t.line, t.col);
            softness = t.number;
        } else if (at(Tok::LBracket)) {  // tolerated alternative: [a=<num>]
            next();
            const Token& a = expect(Tok::Ident, "'a'");
            if (a.text != "a") throw ParseError("expected 'a'", a.line, a.col);
            expect(Tok::Equals, "'='");
            const Token& t = expect(Tok::Number, "softness value");
            if (!(t.number > 0)) throw ParseError("softness must be positive", t.line, t.col);
            softness = t.number;
            expect(Tok::RBracket, "']'");
        }
        return Formula::soft_ineq(std::move(lhs), tau, dir, softness);
    }

    std::vector<Arg> parse_args(int schema) {
        const PredicateSchema& s = spec_.schemas[schema];
        expect(Tok::LParen, "'('");
        std::vector<Arg> args;
        for (int i = 0; i < s.arity(); ++i) {
            if (i) expect(Tok::Comma, "','");
            const Token& t = expect(Tok::Ident, "argument");
            const int dom = s.arg_domains[i];
            if (is_variable_name(t.text)) {
                args.push_back(Arg::var(var_slot(t.text, dom, t)));
            } else {
                const int c = spec_.domains[dom].index_of(t.text);
                if (c < 0)
                    throw ParseError("constant '" + t.text + "' not in domain '" +
                                         spec_.domains[dom].name + "'",
                                     t.line, t.col);
                args.push_back(Arg::constant(c));
            }
        }
        expect(Tok::RParen, "')'");
        return args;
    }

    FormulaPtr parse_atom_or_soft() {
        const Token& name = cur();
        const int schema = spec_.schema_index(name.text);
        if (schema < 0)
            throw ParseError("unknown predicate '" + name.text + "'", name.line, name.col);
        if (spec_.schemas[schema].kind == AtomKind::SubSymbolic) {
            // Bare sub-symbolic atoms only appear inside soft terms; the
            // enclosing group arranges to land in parse_soft_term instead.
            throw ParseError("sub-symbolic atom '" + name.text +
                                 "' outside a soft term; wrap it like (A(...) < t)",
                             name.line, name.col);
        }
        next();
        return Formula::atom(schema, parse_args(schema));
    }

    // Reject soft terms nested inside connectives: the only allowed shapes are
    // pure symbolic, a single soft term, or (soft) * (symbolic).
    void check_symbolic_shape(const Formula& f) const {
        switch (f.kind) {
            case Formula::Kind::Atom:
                return;
            case Formula::Kind::Connective:
                for (const auto& c : f.children) {
                    if (classify(*c) != FormulaClass::Symbolic)
                        throw ParseError("soft terms cannot appear under connectives");
                    check_symbolic_shape(*c);
                }
                return;
            case Formula::Kind::SoftEq:
            case Formula::Kind::SoftIneq:
                return;
            case Formula::Kind::HybridProduct:
                check_symbolic_shape(*f.sym_part);
                return;
        }
    }

    std::vector<Token> toks_;
    size_t idx_ = 0;
    Spec spec_;
};

}  // namespace

Spec parse_spec_text(const std::string& text) {
    Lexer lexer(text);
    Parser parser(lexer.run());
    return parser.run();
}

Spec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open spec file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_spec_text(buf.str());
}

}  // namespace hmlnv
