#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "docode/errors.hpp"

namespace docode {

using CategoryId = std::string;

/// Token -> code-concept lookup table. Immutable after load; every operation
/// on it is pure, so concurrent use needs no synchronization.
struct Taxonomy {
    struct Category {
        CategoryId id;
        std::vector<std::string> tokens;
    };

    std::string version;
    std::vector<Category> categories;                    // document order
    std::unordered_map<std::string, std::size_t> owner;  // token -> categories index

    const Category* find(std::string_view name) const {
        for (const auto& c : categories) {
            if (c.id == name) return &c;
        }
        return nullptr;
    }
};

inline std::string_view trim_view(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

/// Parses and validates a taxonomy document:
/// {"version": "...", "categories": {"<name>": ["tok", ...], ...}}
/// Category iteration order is the document order. Rejects tokens that appear
/// in more than one category and categories with no tokens.
inline Taxonomy load_taxonomy(const std::string& config_text) {
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(config_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("taxonomy: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("categories") || !doc["categories"].is_object()) {
        throw ParseError("taxonomy: expected object with a \"categories\" object");
    }

    Taxonomy tax;
    if (doc.contains("version")) {
        if (!doc["version"].is_string()) throw ParseError("taxonomy: \"version\" must be a string");
        tax.version = doc["version"].get<std::string>();
    }

    for (const auto& [name, toks] : doc["categories"].items()) {
        const std::string id{trim_view(name)};
        if (id.empty()) throw ParseError("taxonomy: empty category name");
        for (char ch : id) {
            if (std::isspace(static_cast<unsigned char>(ch))) {
                throw ParseError("taxonomy: category name \"" + id + "\" contains whitespace");
            }
        }
        if (!toks.is_array() || toks.empty()) {
            throw EmptyCategoryError("taxonomy: category \"" + id + "\" has no tokens");
        }
        Taxonomy::Category cat{id, {}};
        const std::size_t cat_index = tax.categories.size();
        for (const auto& t : toks) {
            if (!t.is_string()) throw ParseError("taxonomy: non-string token in \"" + id + "\"");
            const std::string tok{trim_view(t.get<std::string>())};
            if (tok.empty()) throw EmptyTokenError("taxonomy: empty token in \"" + id + "\"");
            auto [it, inserted] = tax.owner.emplace(tok, cat_index);
            if (!inserted) {
                const std::string& other =
                    it->second < tax.categories.size() ? tax.categories[it->second].id : id;
                throw OverlapError("taxonomy: token \"" + tok + "\" appears in \"" + other +
                                   "\" and \"" + id + "\"");
            }
            cat.tokens.push_back(tok);
        }
        tax.categories.push_back(std::move(cat));
    }
    if (tax.categories.empty()) throw EmptyCategoryError("taxonomy: no categories defined");
    return tax;
}

/// Bundled default: ten structural categories over Java reserved words and
/// symbols. Override with a config file for other languages or groupings.
inline const std::string& default_taxonomy_json() {
    static const std::string text = R"json({
  "version": "default-java-1",
  "categories": {
    "blocks": ["{", "}", "(", ")", ";"],
    "exceptions": ["try", "catch", "finally", "throw", "throws"],
    "oop": ["class", "interface", "extends", "implements", "new", "this", "super", "instanceof", "package", "import"],
    "tests": ["assert"],
    "declarations": ["public", "private", "protected", "static", "final", "void", "abstract", "synchronized", "native", "transient", "volatile", "strictfp"],
    "conditionals": ["if", "else", "switch", "case", "default"],
    "loops": ["for", "while", "do", "break", "continue"],
    "operators": ["=", "+", "-", "*", "/", "%", "<", ">", "<=", ">=", "==", "!=", "&&", "||", "!", "&", "|", "^", "~", "<<", ">>", ">>>", "?", ":", "++", "--", "+=", "-=", "*=", "/="],
    "datatype": ["int", "long", "short", "byte", "float", "double", "boolean", "char", "String", "enum"],
    "extraTokens": ["@", "...", "::", "->", "[", "]", ",", "."]
  }
})json";
    return text;
}

inline Taxonomy default_taxonomy() {
    return load_taxonomy(default_taxonomy_json());
}

/// Maps one surface token to its owning category, or nullopt when unmapped.
/// Exact string match after trimming surrounding whitespace.
inline std::optional<CategoryId> map_token(const Taxonomy& tax, std::string_view token) {
    const std::string_view t = trim_view(token);
    if (t.empty()) throw EmptyTokenError("map_token: empty token");
    const auto it = tax.owner.find(std::string{t});
    if (it == tax.owner.end()) return std::nullopt;
    return tax.categories[it->second].id;
}

/// Element-wise map_token; output length equals input length.
inline std::vector<std::optional<CategoryId>> map_sequence(const Taxonomy& tax,
                                                           const std::vector<std::string>& tokens) {
    if (tokens.empty()) throw EmptySequenceError("map_sequence: empty token sequence");
    std::vector<std::optional<CategoryId>> out;
    out.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        try {
            out.push_back(map_token(tax, tokens[i]));
        } catch (const EmptyTokenError&) {
            throw EmptyTokenError("map_sequence: empty token at index " + std::to_string(i));
        }
    }
    return out;
}

} // namespace docode
