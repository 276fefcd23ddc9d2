#pragma once

#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "csr/catalog.hpp"

namespace csr {

enum class SqlTokenKind { keyword, identifier, string_literal, number, punctuation, op };

struct SqlToken {
  SqlTokenKind kind;
  std::string text;  // keywords upper-cased, identifiers unquoted, literals unescaped
  std::size_t offset;
  bool quoted = false;  // quoted identifier ("x", `x`, [x])

  bool operator==(const SqlToken&) const = default;
};

class SqlError : public std::runtime_error {
 public:
  SqlError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

struct RelevantSet {
  TableSet tables;
  std::set<std::pair<TableId, ColumnId>> columns;

  bool empty() const noexcept { return tables.empty(); }
  bool operator==(const RelevantSet&) const = default;
};

/// Comments are stripped; throws SqlError on unterminated literals or comments.
std::vector<SqlToken> tokenize_sql(std::string_view sql);

/// Clause-level extraction of the catalog tables and columns a statement touches.
/// Unknown identifiers are ignored; ambiguous unqualified columns are dropped.
RelevantSet extract_relevant_set(std::string_view sql, const SchemaCatalog& catalog);

}  // namespace csr
