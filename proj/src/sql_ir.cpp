#include "sqlrl/sql_ir.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

#include "sqlrl/error.hpp"

namespace sqlrl {

namespace {

// SQLite keyword table (the target dialect).
const std::unordered_set<std::string_view>& keyword_table() {
    static const std::unordered_set<std::string_view> kKeywords = {
        "abort", "action", "add", "after", "all", "alter", "always", "analyze", "and", "as",
        "asc", "attach", "autoincrement", "before", "begin", "between", "by", "cascade",
        "case", "cast", "check", "collate", "column", "commit", "conflict", "constraint",
        "create", "cross", "current", "current_date", "current_time", "current_timestamp",
        "database", "default", "deferrable", "deferred", "delete", "desc", "detach",
        "distinct", "do", "drop", "each", "else", "end", "escape", "except", "exclude",
        "exclusive", "exists", "explain", "fail", "filter", "first", "following", "for",
        "foreign", "from", "full", "generated", "glob", "group", "groups", "having", "if",
        "ignore", "immediate", "in", "index", "indexed", "initially", "inner", "insert",
        "instead", "intersect", "into", "is", "isnull", "join", "key", "last", "left",
        "like", "limit", "match", "materialized", "natural", "no", "not", "nothing",
        "notnull", "null", "nulls", "of", "offset", "on", "or", "order", "others", "outer",
        "over", "partition", "plan", "pragma", "preceding", "primary", "query", "raise",
        "range", "recursive", "references", "regexp", "reindex", "release", "rename",
        "replace", "restrict", "returning", "right", "rollback", "row", "rows", "savepoint",
        "select", "set", "table", "temp", "temporary", "then", "ties", "to", "transaction",
        "trigger", "unbounded", "union", "unique", "update", "using", "vacuum", "values",
        "view", "virtual", "when", "where", "window", "with", "without",
    };
    return kKeywords;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_'; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$'; }

// Multi-char operators, longest first.
constexpr std::array<std::string_view, 10> kLongOps = {
    "->>", "<<", ">>", "<=", ">=", "==", "!=", "<>", "->", "||",
};
constexpr std::string_view kSingleOps = "=<>+-*/%&|~!";
constexpr std::string_view kPunct = "(),;.?";

std::size_t utf8_len(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead >> 5) == 0x6) return 2;
    if ((lead >> 4) == 0xE) return 3;
    if ((lead >> 3) == 0x1E) return 4;
    return 1;  // invalid lead byte: consume one byte and move on
}

}  // namespace

const char* token_kind_name(TokenKind kind) {
    switch (kind) {
        case TokenKind::keyword: return "keyword";
        case TokenKind::identifier: return "identifier";
        case TokenKind::literal_number: return "literal-number";
        case TokenKind::literal_string: return "literal-string";
        case TokenKind::op: return "operator";
        case TokenKind::punct: return "punctuation";
    }
    return "?";
}

const char* clause_name(ClauseKind kind) {
    switch (kind) {
        case ClauseKind::select: return "select";
        case ClauseKind::from: return "from";
        case ClauseKind::join: return "join";
        case ClauseKind::where: return "where";
        case ClauseKind::group_by: return "group_by";
        case ClauseKind::having: return "having";
        case ClauseKind::order_by: return "order_by";
        case ClauseKind::limit: return "limit";
        case ClauseKind::other: return "other";
    }
    return "?";
}

bool is_sql_keyword(std::string_view word) {
    return keyword_table().count(to_lower(word)) > 0;
}

std::vector<SqlToken> tokenize(std::string_view sql, std::size_t max_bytes) {
    if (sql.size() > max_bytes) {
        raise(Errc::input_too_large,
              "sql text is " + std::to_string(sql.size()) + " bytes, cap is " +
                  std::to_string(max_bytes));
    }

    std::vector<SqlToken> tokens;
    std::size_t i = 0;
    const std::size_t n = sql.size();

    auto push = [&](std::size_t begin, std::size_t end, TokenKind kind, std::string text) {
        tokens.push_back(SqlToken{std::move(text), kind, begin, end});
    };

    while (i < n) {
        const unsigned char c = static_cast<unsigned char>(sql[i]);

        if (std::isspace(c)) {
            ++i;
            continue;
        }
        // Comments are stripped: model outputs may carry explanation comments
        // that must not affect rewards.
        if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
            while (i < n && sql[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && sql[i + 1] == '*') {
            i += 2;
            while (i + 1 < n && !(sql[i] == '*' && sql[i + 1] == '/')) ++i;
            i = (i + 1 < n) ? i + 2 : n;  // unterminated block comment runs to EOF
            continue;
        }
        // Quoted regions: '...' string literal ('' escapes), "..."/`...` quoted
        // identifier, [ident]. All preserved verbatim, quotes included.
        if (c == '\'' || c == '"' || c == '`') {
            const char quote = static_cast<char>(c);
            const std::size_t begin = i;
            ++i;
            bool closed = false;
            while (i < n) {
                if (sql[i] == quote) {
                    if (i + 1 < n && sql[i + 1] == quote) {
                        i += 2;  // doubled quote escape
                        continue;
                    }
                    ++i;
                    closed = true;
                    break;
                }
                ++i;
            }
            if (!closed) {
                raise(Errc::unterminated_string,
                      "unterminated quoted region starting at byte " + std::to_string(begin));
            }
            push(begin, i,
                 quote == '\'' ? TokenKind::literal_string : TokenKind::identifier,
                 std::string(sql.substr(begin, i - begin)));
            continue;
        }
        if (c == '[') {
            const std::size_t begin = i;
            while (i < n && sql[i] != ']') ++i;
            if (i == n) {
                raise(Errc::unterminated_string,
                      "unterminated [identifier] starting at byte " + std::to_string(begin));
            }
            ++i;
            push(begin, i, TokenKind::identifier, std::string(sql.substr(begin, i - begin)));
            continue;
        }
        // Numbers: 123, 1.5, .5, 1e-3, 0xFF
        if (std::isdigit(c) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
            const std::size_t begin = i;
            if (c == '0' && i + 1 < n && (sql[i + 1] == 'x' || sql[i + 1] == 'X')) {
                i += 2;
                while (i < n && std::isxdigit(static_cast<unsigned char>(sql[i]))) ++i;
            } else {
                while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
                if (i < n && sql[i] == '.') {
                    ++i;
                    while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
                }
                if (i < n && (sql[i] == 'e' || sql[i] == 'E')) {
                    std::size_t j = i + 1;
                    if (j < n && (sql[j] == '+' || sql[j] == '-')) ++j;
                    if (j < n && std::isdigit(static_cast<unsigned char>(sql[j]))) {
                        i = j;
                        while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
                    }
                }
            }
            push(begin, i, TokenKind::literal_number, std::string(sql.substr(begin, i - begin)));
            continue;
        }
        if (is_ident_start(c)) {
            const std::size_t begin = i;
            while (i < n && is_ident_char(static_cast<unsigned char>(sql[i]))) ++i;
            std::string_view word = sql.substr(begin, i - begin);
            std::string lowered = to_lower(word);
            if (keyword_table().count(lowered) > 0) {
                push(begin, i, TokenKind::keyword, std::move(lowered));
            } else {
                push(begin, i, TokenKind::identifier, std::string(word));
            }
            continue;
        }
        {
            bool matched = false;
            for (std::string_view op : kLongOps) {
                if (sql.substr(i).starts_with(op)) {
                    push(i, i + op.size(), TokenKind::op, std::string(op));
                    i += op.size();
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
        }
        if (kSingleOps.find(static_cast<char>(c)) != std::string_view::npos) {
            push(i, i + 1, TokenKind::op, std::string(1, static_cast<char>(c)));
            ++i;
            continue;
        }
        if (kPunct.find(static_cast<char>(c)) != std::string_view::npos) {
            push(i, i + 1, TokenKind::punct, std::string(1, static_cast<char>(c)));
            ++i;
            continue;
        }
        // Anything else (parameter markers, stray unicode): one codepoint of
        // punctuation, keeping tokenization total.
        {
            const std::size_t len = std::min(utf8_len(c), n - i);
            push(i, i + len, TokenKind::punct, std::string(sql.substr(i, len)));
            i += len;
        }
    }
    return tokens;
}

namespace {

bool is_join_qualifier(const SqlToken& t) {
    if (t.kind != TokenKind::keyword) return false;
    return t.text == "inner" || t.text == "left" || t.text == "right" || t.text == "full" ||
           t.text == "outer" || t.text == "cross" || t.text == "natural";
}

struct Opener {
    std::size_t pos;   // token index where the clause starts
    std::size_t head;  // tokens forming the clause keyword
    ClauseKind kind;
};

}  // namespace

SqlIr segment_clauses(std::string source, std::vector<SqlToken> tokens) {
    std::vector<Opener> openers;
    int depth = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const SqlToken& t = tokens[i];
        if (t.kind == TokenKind::punct) {
            if (t.text == "(") ++depth;
            else if (t.text == ")") depth = std::max(0, depth - 1);
            continue;
        }
        if (depth != 0 || t.kind != TokenKind::keyword) continue;

        auto next_is = [&](std::string_view word) {
            return i + 1 < tokens.size() && tokens[i + 1].kind == TokenKind::keyword &&
                   tokens[i + 1].text == word;
        };

        if (t.text == "select") {
            openers.push_back({i, 1, ClauseKind::select});
        } else if (t.text == "from") {
            openers.push_back({i, 1, ClauseKind::from});
        } else if (t.text == "where") {
            openers.push_back({i, 1, ClauseKind::where});
        } else if (t.text == "having") {
            openers.push_back({i, 1, ClauseKind::having});
        } else if (t.text == "limit") {
            openers.push_back({i, 1, ClauseKind::limit});
        } else if (t.text == "group" && next_is("by")) {
            openers.push_back({i, 2, ClauseKind::group_by});
        } else if (t.text == "order" && next_is("by")) {
            openers.push_back({i, 2, ClauseKind::order_by});
        } else if (t.text == "join") {
            // Fold a contiguous qualifier run (inner/left outer/...) into the
            // join clause it introduces.
            std::size_t start = i;
            while (start > 0 && is_join_qualifier(tokens[start - 1]) &&
                   (openers.empty() || openers.back().pos < start - 1)) {
                --start;
            }
            openers.push_back({start, i - start + 1, ClauseKind::join});
        }
    }

    SqlIr ir;
    ir.source = std::move(source);
    ir.tokens = std::move(tokens);

    if (openers.empty()) {
        if (!ir.tokens.empty()) {
            ir.clauses.push_back({ClauseKind::other, 0, ir.tokens.size(), 0});
        }
        return ir;
    }
    if (openers.front().pos > 0) {
        ir.clauses.push_back({ClauseKind::other, 0, openers.front().pos, 0});
    }
    for (std::size_t k = 0; k < openers.size(); ++k) {
        const std::size_t end =
            (k + 1 < openers.size()) ? openers[k + 1].pos : ir.tokens.size();
        ir.clauses.push_back({openers[k].kind, openers[k].pos, end, openers[k].head});
    }
    return ir;
}

SqlIr parse_sql(std::string_view sql, std::size_t max_bytes) {
    return segment_clauses(std::string(sql), tokenize(sql, max_bytes));
}

std::vector<const ClauseRange*> SqlIr::ranges_of(ClauseKind kind) const {
    std::vector<const ClauseRange*> out;
    for (const ClauseRange& r : clauses) {
        if (r.kind == kind) out.push_back(&r);
    }
    return out;
}

bool SqlIr::has_clause(ClauseKind kind) const {
    return std::any_of(clauses.begin(), clauses.end(),
                       [&](const ClauseRange& r) { return r.kind == kind; });
}

std::vector<std::string> SqlIr::clause_tokens(ClauseKind kind) const {
    std::vector<std::string> out;
    for (const ClauseRange& r : clauses) {
        if (r.kind != kind) continue;
        for (std::size_t i = r.first + r.head; i < r.last; ++i) {
            out.push_back(tokens[i].text);
        }
    }
    return out;
}

std::vector<std::string> SqlIr::token_texts() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const SqlToken& t : tokens) out.push_back(t.text);
    return out;
}

std::string canonicalize(const SqlIr& ir) {
    std::string out;
    for (const SqlToken& t : ir.tokens) {
        if (!out.empty()) out.push_back(' ');
        out += t.text;
    }
    return out;
}

std::string canonical_sql(std::string_view sql, std::size_t max_bytes) {
    return canonicalize(parse_sql(sql, max_bytes));
}

}  // namespace sqlrl
