#include "csr/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace csr {

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

const Column& SchemaCatalog::column(ColumnId id) const {
  const auto [t, pos] = column_locations_.at(index_of(id));
  return tables_[t].columns[pos];
}

std::optional<TableId> SchemaCatalog::lookup_table(std::string_view name) const {
  auto it = name_index_.find(lowercase(name));
  if (it == name_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<ColumnId> SchemaCatalog::find_column(TableId table, std::string_view name) const {
  if (index_of(table) >= tables_.size()) return std::nullopt;
  const std::string key = lowercase(name);
  for (const Column& c : tables_[index_of(table)].columns) {
    if (lowercase(c.name) == key) return c.id;
  }
  return std::nullopt;
}

TableSet SchemaCatalog::all_tables() const {
  TableSet out;
  for (const Table& t : tables_) out.insert(out.end(), t.id);
  return out;
}

TableId CatalogBuilder::add_table(std::string name, std::string description) {
  Table t;
  t.id = table_id(tables_.size());
  t.name = std::move(name);
  t.description = std::move(description);
  tables_.push_back(std::move(t));
  return tables_.back().id;
}

ColumnId CatalogBuilder::add_column(TableId table, std::string name, std::string description,
                                    bool primary_key) {
  Table& t = tables_.at(index_of(table));
  Column c;
  c.id = column_id(next_column_++);
  c.table = table;
  c.name = std::move(name);
  c.description = std::move(description);
  c.is_primary_key = primary_key;
  t.columns.push_back(std::move(c));
  return t.columns.back().id;
}

void CatalogBuilder::add_foreign_key(TableId from_table, std::string column, std::string ref_table,
                                     std::string ref_column) {
  pending_.push_back({from_table, std::move(column), std::move(ref_table), std::move(ref_column)});
}

SchemaCatalog CatalogBuilder::build() && {
  if (tables_.empty()) throw CatalogError("empty catalog");

  SchemaCatalog catalog;
  catalog.tables_ = std::move(tables_);
  catalog.column_locations_.resize(next_column_);

  for (std::size_t ti = 0; ti < catalog.tables_.size(); ++ti) {
    Table& t = catalog.tables_[ti];
    const std::string where = "tables[" + std::to_string(ti) + "]";
    if (t.name.empty()) throw CatalogError(where + ": table name is empty");
    if (!catalog.name_index_.emplace(lowercase(t.name), t.id).second) {
      throw CatalogError(where + ": duplicate table name '" + t.name + "'");
    }
    if (t.columns.empty()) throw CatalogError(where + " '" + t.name + "': table has no columns");

    std::set<std::string> seen;
    for (std::size_t ci = 0; ci < t.columns.size(); ++ci) {
      const Column& c = t.columns[ci];
      if (c.name.empty()) {
        throw CatalogError(where + ".columns[" + std::to_string(ci) + "]: column name is empty");
      }
      if (!seen.insert(lowercase(c.name)).second) {
        throw CatalogError(where + ".columns[" + std::to_string(ci) + "]: duplicate column name '" +
                           c.name + "' in table '" + t.name + "'");
      }
      catalog.column_locations_[index_of(c.id)] = {static_cast<std::uint32_t>(ti),
                                                   static_cast<std::uint32_t>(ci)};
    }
  }

  std::vector<std::size_t> fk_position(catalog.tables_.size(), 0);
  for (const PendingForeignKey& p : pending_) {
    Table& from = catalog.tables_[index_of(p.from_table)];
    const std::string where = "tables[" + std::to_string(index_of(p.from_table)) +
                              "].foreign_keys[" + std::to_string(fk_position[index_of(p.from_table)]++) +
                              "] (" + from.name + "." + p.column + " -> " + p.ref_table + "." +
                              p.ref_column + ")";
    auto from_col = catalog.find_column(from.id, p.column);
    if (!from_col) throw CatalogError(where + ": dangling foreign key, unknown column '" + p.column + "'");
    auto to_table = catalog.lookup_table(p.ref_table);
    if (!to_table) {
      throw CatalogError(where + ": dangling foreign key, unknown table '" + p.ref_table + "'");
    }
    auto to_col = catalog.find_column(*to_table, p.ref_column);
    if (!to_col) {
      throw CatalogError(where + ": dangling foreign key, unknown column '" + p.ref_column + "'");
    }
    if (*to_table == from.id && *to_col == *from_col) {
      throw CatalogError(where + ": foreign key references its own column");
    }
    from.foreign_keys.push_back({from.id, *from_col, *to_table, *to_col});
  }
  return catalog;
}

namespace {

std::string optional_string(const nlohmann::json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw CatalogError(where + ": '" + key + "' must be a string");
  return it->get<std::string>();
}

std::string required_string(const nlohmann::json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw CatalogError(where + ": missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

const nlohmann::json& optional_array(const nlohmann::json& obj, const char* key,
                                     const std::string& where) {
  static const nlohmann::json empty = nlohmann::json::array();
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return empty;
  if (!it->is_array()) throw CatalogError(where + ": '" + key + "' must be an array");
  return *it;
}

}  // namespace

SchemaCatalog load_catalog(const nlohmann::json& document) {
  if (!document.is_object()) throw CatalogError("schema document must be a JSON object");
  auto tables_it = document.find("tables");
  if (tables_it == document.end() || !tables_it->is_array()) {
    throw CatalogError("schema document: missing 'tables' array");
  }
  CatalogBuilder builder;
  std::size_t ti = 0;
  for (const auto& tj : *tables_it) {
    const std::string where = "tables[" + std::to_string(ti) + "]";
    if (!tj.is_object()) throw CatalogError(where + ": must be an object");
    TableId t = builder.add_table(required_string(tj, "name", where),
                                  optional_string(tj, "description", where));
    std::size_t ci = 0;
    for (const auto& cj : optional_array(tj, "columns", where)) {
      const std::string cwhere = where + ".columns[" + std::to_string(ci++) + "]";
      if (!cj.is_object()) throw CatalogError(cwhere + ": must be an object");
      bool pk = false;
      if (auto it = cj.find("primary_key"); it != cj.end() && !it->is_null()) {
        if (!it->is_boolean()) throw CatalogError(cwhere + ": 'primary_key' must be a boolean");
        pk = it->get<bool>();
      }
      builder.add_column(t, required_string(cj, "name", cwhere),
                         optional_string(cj, "description", cwhere), pk);
    }
    std::size_t fi = 0;
    for (const auto& fj : optional_array(tj, "foreign_keys", where)) {
      const std::string fwhere = where + ".foreign_keys[" + std::to_string(fi++) + "]";
      if (!fj.is_object()) throw CatalogError(fwhere + ": must be an object");
      builder.add_foreign_key(t, required_string(fj, "column", fwhere),
                              required_string(fj, "ref_table", fwhere),
                              required_string(fj, "ref_column", fwhere));
    }
    ++ti;
  }
  return std::move(builder).build();
}

SchemaCatalog load_catalog(std::string_view document_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CatalogError(std::string("malformed schema document: ") + e.what());
  }
  return load_catalog(doc);
}

SchemaCatalog load_catalog_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CatalogError("cannot open schema file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return load_catalog(std::string_view(buffer.str()));
  } catch (const CatalogError& e) {
    throw CatalogError(path.string() + ": " + e.what());
  }
}

nlohmann::json catalog_to_json(const SchemaCatalog& catalog) {
  nlohmann::json tables = nlohmann::json::array();
  for (const Table& t : catalog.tables()) {
    nlohmann::json tj;
    tj["name"] = t.name;
    if (!t.description.empty()) tj["description"] = t.description;
    nlohmann::json cols = nlohmann::json::array();
    for (const Column& c : t.columns) {
      nlohmann::json cj;
      cj["name"] = c.name;
      if (!c.description.empty()) cj["description"] = c.description;
      if (c.is_primary_key) cj["primary_key"] = true;
      cols.push_back(std::move(cj));
    }
    tj["columns"] = std::move(cols);
    nlohmann::json fks = nlohmann::json::array();
    for (const ForeignKey& fk : t.foreign_keys) {
      fks.push_back({{"column", catalog.column(fk.from_column).name},
                     {"ref_table", catalog.table(fk.to_table).name},
                     {"ref_column", catalog.column(fk.to_column).name}});
    }
    tj["foreign_keys"] = std::move(fks);
    tables.push_back(std::move(tj));
  }
  return nlohmann::json{{"tables", std::move(tables)}};
}

double lower_median(std::vector<std::size_t> values) {
  if (values.empty()) return 0.0;
  const std::size_t mid = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  return static_cast<double>(values[mid]);
}

CatalogStats catalog_stats(const SchemaCatalog& catalog) {
  CatalogStats s;
  s.table_count = catalog.table_count();
  s.column_count = catalog.column_count();
  s.fk_per_table.assign(s.table_count, 0);
  s.columns_per_table.reserve(s.table_count);

  // A foreign key counts for every table it touches; a self-reference counts once.
  for (const Table& t : catalog.tables()) {
    s.columns_per_table.push_back(t.columns.size());
    for (const ForeignKey& fk : t.foreign_keys) {
      ++s.fk_per_table[index_of(fk.from_table)];
      if (fk.to_table != fk.from_table) ++s.fk_per_table[index_of(fk.to_table)];
    }
  }
  s.median_fk_per_table = lower_median(s.fk_per_table);

  if (s.table_count > 0) {
    const double n = static_cast<double>(s.table_count);
    const double mean =
        std::accumulate(s.columns_per_table.begin(), s.columns_per_table.end(), 0.0) / n;
    double ss = 0.0;
    for (std::size_t c : s.columns_per_table) ss += (static_cast<double>(c) - mean) * (static_cast<double>(c) - mean);
    s.stddev_columns_per_table = std::sqrt(ss / n);
  }
  return s;
}

}  // namespace csr
