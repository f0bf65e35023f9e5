#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace sqlrl {

enum class TokenKind {
    keyword,
    identifier,
    literal_number,
    literal_string,
    op,
    punct,
};

const char* token_kind_name(TokenKind kind);

struct SqlToken {
    std::string text;   // normalized lexeme: keywords lowercased, everything else verbatim
    TokenKind kind = TokenKind::punct;
    std::size_t begin = 0;  // byte offsets into the source, [begin, end)
    std::size_t end = 0;
};

enum class ClauseKind {
    select,
    from,
    join,
    where,
    group_by,
    having,
    order_by,
    limit,
    other,
};

const char* clause_name(ClauseKind kind);

struct ClauseRange {
    ClauseKind kind = ClauseKind::other;
    std::size_t first = 0;  // token indices, [first, last)
    std::size_t last = 0;
    std::size_t head = 0;   // leading tokens forming the clause keyword itself (0 for `other`)
};

/// Clause-segmented token stream for one SQL query. Every token index lies in
/// exactly one clause range; ranges are contiguous and in source order.
struct SqlIr {
    std::string source;
    std::vector<SqlToken> tokens;
    std::vector<ClauseRange> clauses;

    std::vector<const ClauseRange*> ranges_of(ClauseKind kind) const;
    bool has_clause(ClauseKind kind) const;
    /// Token texts under a clause, with the clause keyword tokens themselves excluded.
    std::vector<std::string> clause_tokens(ClauseKind kind) const;
    /// All token texts, in order.
    std::vector<std::string> token_texts() const;
};

inline constexpr std::size_t kDefaultMaxSqlBytes = 16 * 1024;

/// True when `word` is in the SQLite keyword table (case-insensitive).
bool is_sql_keyword(std::string_view word);

/// Lex `sql` into tokens. Comments are stripped; string literals keep their
/// quotes and case. Throws Errc::unterminated_string / Errc::input_too_large.
std::vector<SqlToken> tokenize(std::string_view sql, std::size_t max_bytes = kDefaultMaxSqlBytes);

/// Flat, keyword-delimited segmentation: a top-level clause keyword opens a
/// range that ends at the next top-level clause keyword. Parenthesized
/// subqueries stay inside the containing clause. Never fails; anything not
/// under a recognized clause lands in `other`.
SqlIr segment_clauses(std::string source, std::vector<SqlToken> tokens);

/// tokenize + segment_clauses.
SqlIr parse_sql(std::string_view sql, std::size_t max_bytes = kDefaultMaxSqlBytes);

/// Single-space-joined token texts. canonicalize(parse(canonicalize(parse(x))))
/// == canonicalize(parse(x)) for all x.
std::string canonicalize(const SqlIr& ir);

/// Convenience: parse + canonicalize.
std::string canonical_sql(std::string_view sql, std::size_t max_bytes = kDefaultMaxSqlBytes);

}  // namespace sqlrl
