#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace csr {

// Dense ids assigned in document order.
enum class TableId : std::uint32_t {};
enum class ColumnId : std::uint32_t {};

constexpr std::size_t index_of(TableId id) noexcept { return static_cast<std::size_t>(id); }
constexpr std::size_t index_of(ColumnId id) noexcept { return static_cast<std::size_t>(id); }
constexpr TableId table_id(std::size_t i) noexcept { return static_cast<TableId>(i); }
constexpr ColumnId column_id(std::size_t i) noexcept { return static_cast<ColumnId>(i); }

using TableSet = std::set<TableId>;

class CatalogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Column {
  ColumnId id{};
  TableId table{};
  std::string name;
  std::string description;  // empty when the schema has none
  bool is_primary_key = false;

  bool operator==(const Column&) const = default;
};

struct ForeignKey {
  TableId from_table{};
  ColumnId from_column{};
  TableId to_table{};
  ColumnId to_column{};

  bool operator==(const ForeignKey&) const = default;
};

struct Table {
  TableId id{};
  std::string name;
  std::string description;
  std::vector<Column> columns;
  std::vector<ForeignKey> foreign_keys;

  bool operator==(const Table&) const = default;
};

struct CatalogStats {
  std::size_t table_count = 0;
  std::size_t column_count = 0;
  std::vector<std::size_t> fk_per_table;
  std::vector<std::size_t> columns_per_table;
  double median_fk_per_table = 0.0;
  double stddev_columns_per_table = 0.0;
};

/// Immutable, validated schema. Build through CatalogBuilder or load_catalog.
class SchemaCatalog {
 public:
  SchemaCatalog() = default;

  const std::vector<Table>& tables() const noexcept { return tables_; }
  const Table& table(TableId id) const { return tables_.at(index_of(id)); }
  const Column& column(ColumnId id) const;

  std::size_t table_count() const noexcept { return tables_.size(); }
  std::size_t column_count() const noexcept { return column_locations_.size(); }

  /// Case-insensitive exact-name lookup.
  std::optional<TableId> lookup_table(std::string_view name) const;
  std::optional<ColumnId> find_column(TableId table, std::string_view name) const;

  TableSet all_tables() const;

  bool operator==(const SchemaCatalog& other) const { return tables_ == other.tables_; }

 private:
  friend class CatalogBuilder;

  std::vector<Table> tables_;
  std::map<std::string, TableId, std::less<>> name_index_;
  // ColumnId -> (table index, position within table)
  std::vector<std::pair<std::uint32_t, std::uint32_t>> column_locations_;
};

/// Incremental construction with validation at build().
class CatalogBuilder {
 public:
  TableId add_table(std::string name, std::string description = {});
  ColumnId add_column(TableId table, std::string name, std::string description = {},
                      bool primary_key = false);
  /// Resolved by name at build() time so that forward references work.
  void add_foreign_key(TableId from_table, std::string column, std::string ref_table,
                       std::string ref_column);

  SchemaCatalog build() &&;

 private:
  struct PendingForeignKey {
    TableId from_table;
    std::string column;
    std::string ref_table;
    std::string ref_column;
  };

  std::vector<Table> tables_;
  std::vector<PendingForeignKey> pending_;
  std::size_t next_column_ = 0;
};

std::string lowercase(std::string_view text);

SchemaCatalog load_catalog(const nlohmann::json& document);
SchemaCatalog load_catalog(std::string_view document_text);
SchemaCatalog load_catalog_file(const std::filesystem::path& path);

nlohmann::json catalog_to_json(const SchemaCatalog& catalog);

CatalogStats catalog_stats(const SchemaCatalog& catalog);

/// Lower median: element at index floor((n-1)/2) of the sorted values; 0 for empty input.
double lower_median(std::vector<std::size_t> values);

}  // namespace csr
