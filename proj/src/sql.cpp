#include "csr/sql.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <unordered_set>

namespace csr {

namespace {

const std::unordered_set<std::string>& keywords() {
  static const std::unordered_set<std::string> set = {
      "ALL",      "AND",      "ANY",       "AS",       "ASC",      "BETWEEN", "BY",
      "CASE",     "CAST",     "CROSS",     "DELETE",   "DESC",     "DISTINCT", "ELSE",
      "END",      "EXCEPT",   "EXISTS",    "FALSE",    "FETCH",    "FROM",    "FULL",
      "GROUP",    "HAVING",   "ILIKE",     "IN",       "INNER",    "INSERT",  "INTERSECT",
      "INTO",     "IS",       "JOIN",      "LATERAL",  "LEFT",     "LIKE",    "LIMIT",
      "MERGE",    "NATURAL",  "NOT",       "NULL",     "OFFSET",   "ON",      "ONLY",
      "OR",       "ORDER",    "OUTER",     "OVER",     "PARTITION", "RECURSIVE", "RETURNING",
      "RIGHT",    "SELECT",   "SET",       "SOME",     "THEN",     "TOP",     "TRUE",
      "UNION",    "UPDATE",   "USING",     "VALUES",   "WHEN",     "WHERE",   "WINDOW",
      "WITH",
  };
  return set;
}

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

// Reads a delimited token starting at `start` (the opening delimiter). A doubled closing
// delimiter is an escaped literal character.
std::pair<std::string, std::size_t> read_delimited(std::string_view sql, std::size_t start, char close,
                                                   const char* what) {
  std::string value;
  std::size_t i = start + 1;
  while (i < sql.size()) {
    if (sql[i] == close) {
      if (i + 1 < sql.size() && sql[i + 1] == close) {
        value.push_back(close);
        i += 2;
        continue;
      }
      return {std::move(value), i + 1};
    }
    value.push_back(sql[i++]);
  }
  throw SqlError(std::string("unterminated ") + what, start);
}

}  // namespace

std::vector<SqlToken> tokenize_sql(std::string_view sql) {
  std::vector<SqlToken> out;
  std::size_t i = 0;
  const std::size_t n = sql.size();
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(sql[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
      while (i < n && sql[i] != '\n') ++i;
    } else if (c == '/' && i + 1 < n && sql[i + 1] == '*') {
      const std::size_t end = sql.find("*/", i + 2);
      if (end == std::string_view::npos) throw SqlError("unterminated comment", i);
      i = end + 2;
    } else if (c == '\'') {
      auto [value, next] = read_delimited(sql, i, '\'', "string literal");
      out.push_back({SqlTokenKind::string_literal, std::move(value), i});
      i = next;
    } else if (c == '"' || c == '`' || c == '[') {
      const char close = c == '[' ? ']' : static_cast<char>(c);
      auto [value, next] = read_delimited(sql, i, close, "quoted identifier");
      out.push_back({SqlTokenKind::identifier, std::move(value), i, true});
      i = next;
    } else if (std::isdigit(c) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
      const std::size_t start = i;
      while (i < n) {
        const unsigned char d = static_cast<unsigned char>(sql[i]);
        if (std::isdigit(d) || d == '.') {
          ++i;
        } else if ((d == 'e' || d == 'E') && i + 1 < n) {
          ++i;
          if (sql[i] == '+' || sql[i] == '-') ++i;
        } else {
          break;
        }
      }
      out.push_back({SqlTokenKind::number, std::string(sql.substr(start, i - start)), start});
    } else if (is_ident_start(c)) {
      const std::size_t start = i;
      while (i < n && is_ident_char(static_cast<unsigned char>(sql[i]))) ++i;
      std::string word(sql.substr(start, i - start));
      std::string up = upper(word);
      if (keywords().count(up)) {
        out.push_back({SqlTokenKind::keyword, std::move(up), start});
      } else {
        out.push_back({SqlTokenKind::identifier, std::move(word), start});
      }
    } else if (c == '(' || c == ')' || c == ',' || c == '.' || c == ';') {
      out.push_back({SqlTokenKind::punctuation, std::string(1, static_cast<char>(c)), i});
      ++i;
    } else {
      static constexpr std::string_view two_char[] = {"<=", ">=", "<>", "!=", "||", "::", "=>"};
      std::size_t len = 1;
      for (std::string_view op : two_char) {
        if (sql.substr(i, 2) == op) len = 2;
      }
      out.push_back({SqlTokenKind::op, std::string(sql.substr(i, len)), i});
      i += len;
    }
  }
  return out;
}

namespace {

class Extractor {
 public:
  Extractor(std::vector<SqlToken> tokens, const SchemaCatalog& catalog)
      : toks_(std::move(tokens)), catalog_(catalog), consumed_(toks_.size(), false) {}

  RelevantSet run() {
    collect_ctes();
    collect_table_refs();
    collect_columns();
    return std::move(result_);
  }

 private:
  bool is_kw(std::size_t i, std::string_view kw) const {
    return i < toks_.size() && toks_[i].kind == SqlTokenKind::keyword && toks_[i].text == kw;
  }
  bool is_punct(std::size_t i, char p) const {
    return i < toks_.size() && toks_[i].kind == SqlTokenKind::punctuation && toks_[i].text[0] == p;
  }
  bool is_ident(std::size_t i) const { return i < toks_.size() && toks_[i].kind == SqlTokenKind::identifier; }

  std::size_t matching_paren(std::size_t open) const {
    int depth = 0;
    for (std::size_t i = open; i < toks_.size(); ++i) {
      if (is_punct(i, '(')) ++depth;
      if (is_punct(i, ')') && --depth == 0) return i;
    }
    return toks_.size();
  }

  void collect_ctes() {
    for (std::size_t i = 0; i < toks_.size(); ++i) {
      if (!is_kw(i, "WITH")) continue;
      std::size_t j = i + 1;
      if (is_kw(j, "RECURSIVE")) ++j;
      while (is_ident(j)) {
        ctes_.insert(lowercase(toks_[j].text));
        consumed_[j] = true;
        ++j;
        if (is_punct(j, '(')) {
          const std::size_t close = matching_paren(j);
          for (std::size_t k = j; k <= close && k < toks_.size(); ++k) consumed_[k] = true;
          j = close + 1;
        }
        if (!is_kw(j, "AS")) break;
        ++j;
        if (!is_punct(j, '(')) break;
        j = matching_paren(j) + 1;
        if (!is_punct(j, ',')) break;
        ++j;
      }
    }
  }

  // Parses one table reference at `i`; returns the index just past it.
  std::size_t table_ref(std::size_t i) {
    while (is_kw(i, "LATERAL") || is_kw(i, "ONLY")) ++i;
    std::size_t end = i;
    std::optional<TableId> target;
    if (is_punct(i, '(')) {
      end = matching_paren(i) + 1;
    } else if (is_ident(i)) {
      std::size_t last = i;
      end = i + 1;
      while (is_punct(end, '.') && is_ident(end + 1)) {
        last = end + 1;
        end += 2;
      }
      if (is_punct(end, '(')) return end;  // table-valued function
      for (std::size_t k = i; k < end; ++k) consumed_[k] = true;
      const std::string name = lowercase(toks_[last].text);
      if (!ctes_.count(name)) {
        target = catalog_.lookup_table(name);
        if (target) {
          result_.tables.insert(*target);
          aliases_[name] = target;
        }
      }
    } else {
      return i;
    }

    std::size_t alias = toks_.size();
    if (is_kw(end, "AS") && is_ident(end + 1)) {
      alias = end + 1;
    } else if (is_ident(end)) {
      alias = end;
    }
    if (alias < toks_.size()) {
      consumed_[alias] = true;
      aliases_[lowercase(toks_[alias].text)] = target;
      end = alias + 1;
    }
    return end;
  }

  void collect_table_refs() {
    for (std::size_t i = 0; i < toks_.size(); ++i) {
      const bool from = is_kw(i, "FROM");
      if (!(from || is_kw(i, "JOIN") || is_kw(i, "UPDATE") || is_kw(i, "INTO"))) continue;
      std::size_t j = table_ref(i + 1);
      while (from && is_punct(j, ',')) {
        const std::size_t next = table_ref(j + 1);
        if (next == j + 1) break;
        j = next;
      }
    }
  }

  std::optional<TableId> resolve_qualifier(const std::string& qualifier) const {
    auto it = aliases_.find(qualifier);
    if (it != aliases_.end()) return it->second;
    return std::nullopt;
  }

  void add_column(TableId table, ColumnId column) {
    result_.columns.emplace(table, column);
  }

  void collect_columns() {
    for (std::size_t i = 0; i < toks_.size(); ++i) {
      if (consumed_[i] || !is_ident(i)) continue;

      std::size_t end = i + 1;
      std::vector<std::size_t> parts{i};
      bool star = false;
      while (is_punct(end, '.')) {
        if (is_ident(end + 1)) {
          parts.push_back(end + 1);
          end += 2;
        } else if (end + 1 < toks_.size() && toks_[end + 1].kind == SqlTokenKind::op &&
                   toks_[end + 1].text == "*") {
          star = true;
          end += 2;
          break;
        } else {
          break;
        }
      }

      if (parts.size() >= 2 || star) {
        if (!star) {
          const std::string qualifier = lowercase(toks_[parts[parts.size() - 2]].text);
          if (auto table = resolve_qualifier(qualifier)) {
            if (auto col = catalog_.find_column(*table, toks_[parts.back()].text)) {
              add_column(*table, *col);
            }
          }
        }
        i = end - 1;
        continue;
      }

      if (is_punct(i + 1, '(')) continue;  // function call
      if (i > 0 && is_kw(i - 1, "AS")) continue;  // output alias
      const std::string name = lowercase(toks_[i].text);
      if (ctes_.count(name) || aliases_.count(name)) continue;

      std::optional<std::pair<TableId, ColumnId>> owner;
      bool ambiguous = false;
      for (TableId t : result_.tables) {
        if (auto col = catalog_.find_column(t, name)) {
          if (owner) ambiguous = true;
          owner = std::make_pair(t, *col);
        }
      }
      if (owner && !ambiguous) add_column(owner->first, owner->second);
    }
  }

  std::vector<SqlToken> toks_;
  const SchemaCatalog& catalog_;
  std::vector<bool> consumed_;
  std::set<std::string> ctes_;
  std::map<std::string, std::optional<TableId>> aliases_;
  RelevantSet result_;
};

}  // namespace

RelevantSet extract_relevant_set(std::string_view sql, const SchemaCatalog& catalog) {
  const bool blank = std::all_of(sql.begin(), sql.end(),
                                 [](unsigned char c) { return std::isspace(c); });
  if (blank) throw SqlError("empty SQL statement", 0);
  return Extractor(tokenize_sql(sql), catalog).run();
}

}  // namespace csr
