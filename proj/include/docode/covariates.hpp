#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "docode/errors.hpp"

namespace docode {

enum class LexKind {
    keyword,
    identifier,
    number_literal,
    string_literal,
    char_literal,
    op,
    punctuation,
    comment,
    annotation,
};

struct LexToken {
    std::string text;
    LexKind kind;

    bool operator==(const LexToken&) const = default;
};

namespace detail {

inline const std::unordered_set<std::string>& java_keywords() {
    static const std::unordered_set<std::string> kw = {
        "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char",
        "class", "const", "continue", "default", "do", "double", "else", "enum",
        "extends", "final", "finally", "float", "for", "goto", "if", "implements",
        "import", "instanceof", "int", "interface", "long", "native", "new",
        "package", "private", "protected", "public", "return", "short", "static",
        "strictfp", "super", "switch", "synchronized", "this", "throw", "throws",
        "transient", "try", "void", "volatile", "while"};
    return kw;
}

inline bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

inline bool ident_part(char c) {
    return ident_start(c) || std::isdigit(static_cast<unsigned char>(c));
}

// Longest-first so maximal munch falls out of the scan order.
inline const std::vector<std::string>& operator_table() {
    static const std::vector<std::string> ops = {
        ">>>=", ">>>", "<<=", ">>=", "==", "!=", "<=", ">=", "&&", "||", "++", "--",
        "+=",   "-=",  "*=",  "/=",  "%=", "&=", "|=", "^=", "<<", ">>", "->", "::",
        "+",    "-",   "*",   "/",   "%",  "=",  "<",  ">",  "!",  "&",  "|",  "^",
        "~",    "?",   ":"};
    return ops;
}

} // namespace detail

/// Full tokenization of a Java method body, including comments and literals
/// as single tokens. Concatenating the token texts and the skipped
/// whitespace reconstructs the input.
inline std::vector<LexToken> lex_java(std::string_view src) {
    std::vector<LexToken> out;
    std::size_t i = 0;
    const std::size_t n = src.size();

    auto starts_with = [&](std::string_view pat) {
        return src.substr(i, pat.size()) == pat;
    };

    while (i < n) {
        const char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }

        if (starts_with("//")) {
            std::size_t e = src.find('\n', i);
            if (e == std::string_view::npos) e = n;
            out.push_back({std::string{src.substr(i, e - i)}, LexKind::comment});
            i = e;
            continue;
        }
        if (starts_with("/*")) {
            std::size_t e = src.find("*/", i + 2);
            if (e == std::string_view::npos) {
                throw UnterminatedCommentError("unterminated block comment at offset " +
                                               std::to_string(i));
            }
            out.push_back({std::string{src.substr(i, e + 2 - i)}, LexKind::comment});
            i = e + 2;
            continue;
        }

        if (c == '"' || c == '\'') {
            const char quote = c;
            std::size_t j = i + 1;
            while (j < n && src[j] != quote) {
                if (src[j] == '\\' && j + 1 < n) ++j;
                ++j;
            }
            if (j >= n) {
                throw UnterminatedLiteralError(std::string{"unterminated "} +
                                               (quote == '"' ? "string" : "char") +
                                               " literal at offset " + std::to_string(i));
            }
            out.push_back({std::string{src.substr(i, j + 1 - i)},
                           quote == '"' ? LexKind::string_literal : LexKind::char_literal});
            i = j + 1;
            continue;
        }

        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            std::size_t j = i;
            while (j < n) {
                const char d = src[j];
                if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '.') {
                    // exponent sign belongs to the number: 1e-5, 0x1p+3
                    if ((d == 'e' || d == 'E' || d == 'p' || d == 'P') && j + 1 < n &&
                        (src[j + 1] == '+' || src[j + 1] == '-') && j + 2 < n &&
                        std::isdigit(static_cast<unsigned char>(src[j + 2]))) {
                        j += 2;
                    }
                    ++j;
                } else {
                    break;
                }
            }
            out.push_back({std::string{src.substr(i, j - i)}, LexKind::number_literal});
            i = j;
            continue;
        }

        if (detail::ident_start(c)) {
            std::size_t j = i + 1;
            while (j < n && detail::ident_part(src[j])) ++j;
            std::string text{src.substr(i, j - i)};
            const LexKind kind = detail::java_keywords().count(text) ? LexKind::keyword
                                                                     : LexKind::identifier;
            out.push_back({std::move(text), kind});
            i = j;
            continue;
        }

        if (c == '@' && i + 1 < n && detail::ident_start(src[i + 1])) {
            std::size_t j = i + 1;
            while (j < n && detail::ident_part(src[j])) ++j;
            out.push_back({std::string{src.substr(i, j - i)}, LexKind::annotation});
            i = j;
            continue;
        }

        if (starts_with("...")) {
            out.push_back({"...", LexKind::punctuation});
            i += 3;
            continue;
        }

        bool matched = false;
        for (const auto& op : detail::operator_table()) {
            if (starts_with(op)) {
                out.push_back({op, LexKind::op});
                i += op.size();
                matched = true;
                break;
            }
        }
        if (matched) continue;

        // braces, brackets, separators, and anything unrecognized
        out.push_back({std::string(1, c), LexKind::punctuation});
        ++i;
    }
    return out;
}

/// Cyclomatic complexity: 1 + decision points (if, for, while, case, catch,
/// &&, ||, ?) outside comments and literals.
inline int mccabe(const std::vector<LexToken>& tokens) {
    int count = 1;
    for (const auto& t : tokens) {
        if (t.kind == LexKind::keyword &&
            (t.text == "if" || t.text == "for" || t.text == "while" || t.text == "case" ||
             t.text == "catch")) {
            ++count;
        } else if (t.kind == LexKind::op &&
                   (t.text == "&&" || t.text == "||" || t.text == "?")) {
            ++count;
        }
    }
    return count;
}

/// The per-method SE metric vector used as common causes. All counts are
/// taken over lexer tokens, so comments and literal contents never
/// contribute. The parenthesized-expression and variable counts are lexical
/// approximations (approx=true in emitted metadata).
struct CovariateVector {
    double mccabe = 1;
    double loc = 0;
    double returns = 0;
    double loops = 0;
    double comparisons = 0;
    double try_catches = 0;
    double parenthesized_expressions = 0;
    double numbers = 0;
    double string_literals = 0;
    double variables = 0;
    double max_nested_blocks = 0;
    double anonymous_classes = 0;
    double inner_classes = 0;
    double lambda_expressions = 0;
    double unique_words = 0;
    double log_statements = 0;
    double modifiers = 0;
    double subwords = 0;

    static constexpr std::array<const char*, 18> names = {
        "mccabe",          "loc",
        "returns",         "loops",
        "comparisons",     "try_catches",
        "parenthesized_expressions", "numbers",
        "string_literals", "variables",
        "max_nested_blocks", "anonymous_classes",
        "inner_classes",   "lambda_expressions",
        "unique_words",    "log_statements",
        "modifiers",       "subwords"};

    std::array<double, 18> values() const {
        return {mccabe,          loc,
                returns,         loops,
                comparisons,     try_catches,
                parenthesized_expressions, numbers,
                string_literals, variables,
                max_nested_blocks, anonymous_classes,
                inner_classes,   lambda_expressions,
                unique_words,    log_statements,
                modifiers,       subwords};
    }

    double by_name(std::string_view name) const {
        const auto vals = values();
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (name == names[i]) return vals[i];
        }
        throw Error("unknown covariate \"" + std::string{name} + "\"");
    }

    bool operator==(const CovariateVector&) const = default;
};

namespace detail {

inline bool is_type_keyword(const LexToken& t) {
    if (t.kind != LexKind::keyword) return false;
    static const std::unordered_set<std::string> types = {
        "int", "long", "short", "byte", "float", "double", "boolean", "char"};
    return types.count(t.text) > 0;
}

inline bool is_modifier_keyword(const LexToken& t) {
    if (t.kind != LexKind::keyword) return false;
    static const std::unordered_set<std::string> mods = {
        "public", "private", "protected", "static",    "final",    "abstract",
        "synchronized", "native", "transient", "volatile", "strictfp"};
    return mods.count(t.text) > 0;
}

inline std::string lower(std::string_view s) {
    std::string out{s};
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::size_t count_anonymous_classes(const std::vector<LexToken>& toks) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (toks[i].kind != LexKind::keyword || toks[i].text != "new") continue;
        std::size_t j = i + 1;
        if (j >= toks.size() || toks[j].kind != LexKind::identifier) continue;
        ++j;
        // qualified names: new a.b.C(...)
        while (j + 1 < toks.size() && toks[j].text == "." &&
               toks[j + 1].kind == LexKind::identifier) {
            j += 2;
        }
        // optional generic arguments: new ArrayList<Foo>(...)
        if (j < toks.size() && toks[j].text == "<") {
            int depth = 0;
            while (j < toks.size()) {
                if (toks[j].text == "<") ++depth;
                else if (toks[j].text == ">") {
                    --depth;
                    if (depth == 0) { ++j; break; }
                }
                ++j;
            }
        }
        if (j >= toks.size() || toks[j].text != "(") continue;
        int pdepth = 0;
        while (j < toks.size()) {
            if (toks[j].text == "(") ++pdepth;
            else if (toks[j].text == ")") {
                --pdepth;
                if (pdepth == 0) { ++j; break; }
            }
            ++j;
        }
        if (j < toks.size() && toks[j].text == "{") ++count;
    }
    return count;
}

inline std::size_t count_variables(const std::vector<LexToken>& toks) {
    std::size_t count = 0;
    bool at_statement_start = true;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto& t = toks[i];
        if (at_statement_start && i + 2 < toks.size()) {
            const bool head = is_type_keyword(t) || t.kind == LexKind::identifier;
            if (head && toks[i + 1].kind == LexKind::identifier &&
                (toks[i + 2].text == "=" || toks[i + 2].text == ";" ||
                 toks[i + 2].text == ",")) {
                ++count;
            }
        }
        at_statement_start = (t.text == ";" || t.text == "{" || t.text == "}");
    }
    return count;
}

} // namespace detail

/// Computes all 18 metrics for one method. The subword count comes from the
/// paired prediction record, not from lexing.
inline CovariateVector extract_covariates(std::string_view source, std::size_t subword_count) {
    std::vector<LexToken> all = lex_java(source);
    std::vector<LexToken> toks;  // comments stripped
    toks.reserve(all.size());
    for (auto& t : all) {
        if (t.kind != LexKind::comment) toks.push_back(std::move(t));
    }

    CovariateVector cv;
    cv.subwords = static_cast<double>(subword_count);
    cv.mccabe = mccabe(toks);

    std::size_t line_begin = 0;
    for (std::size_t i = 0; i <= source.size(); ++i) {
        if (i == source.size() || source[i] == '\n') {
            const std::string_view line = source.substr(line_begin, i - line_begin);
            if (line.find_first_not_of(" \t\r") != std::string_view::npos) cv.loc += 1;
            line_begin = i + 1;
        }
    }

    std::set<std::string> idents;
    int brace_depth = 0;
    int max_depth = 0;
    std::size_t class_count = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto& t = toks[i];
        switch (t.kind) {
            case LexKind::keyword:
                if (t.text == "return") cv.returns += 1;
                else if (t.text == "for" || t.text == "while" || t.text == "do") cv.loops += 1;
                else if (t.text == "catch") cv.try_catches += 1;
                else if (t.text == "class") ++class_count;
                if (detail::is_modifier_keyword(t)) cv.modifiers += 1;
                break;
            case LexKind::op:
                if (t.text == "==" || t.text == "!=" || t.text == "<" || t.text == ">" ||
                    t.text == "<=" || t.text == ">=") {
                    cv.comparisons += 1;
                }
                if (t.text == "->") cv.lambda_expressions += 1;
                break;
            case LexKind::number_literal:
                cv.numbers += 1;
                break;
            case LexKind::string_literal:
                cv.string_literals += 1;
                break;
            case LexKind::identifier: {
                idents.insert(t.text);
                const std::string low = detail::lower(t.text);
                if ((low == "log" || low == "logger") && i + 1 < toks.size() &&
                    toks[i + 1].text == ".") {
                    cv.log_statements += 1;
                }
                break;
            }
            default:
                break;
        }
        if (t.text == "{") {
            ++brace_depth;
            max_depth = std::max(max_depth, brace_depth);
        } else if (t.text == "}") {
            brace_depth = std::max(0, brace_depth - 1);
        }
        if (t.text == "(") {
            bool suppressed = false;
            if (i > 0) {
                const auto& prev = toks[i - 1];
                suppressed = prev.kind == LexKind::identifier ||
                             (prev.kind == LexKind::keyword &&
                              (prev.text == "if" || prev.text == "for" || prev.text == "while" ||
                               prev.text == "switch" || prev.text == "catch"));
            }
            if (!suppressed) cv.parenthesized_expressions += 1;
        }
    }

    cv.max_nested_blocks = max_depth > 0 ? max_depth - 1 : 0;
    cv.unique_words = static_cast<double>(idents.size());
    cv.inner_classes = class_count > 0 ? static_cast<double>(class_count - 1) : 0;
    cv.anonymous_classes = static_cast<double>(detail::count_anonymous_classes(toks));
    cv.variables = static_cast<double>(detail::count_variables(toks));
    return cv;
}

} // namespace docode
