#pragma once

#include <random>
#include <string>
#include <vector>

#include "csr/catalog.hpp"
#include "csr/contextual.hpp"

namespace csr::test {

// Six-table retail schema used across the unit tests.
inline SchemaCatalog shop_catalog() {
  CatalogBuilder b;
  const TableId customers = b.add_table("customers", "people who place orders");
  b.add_column(customers, "customer_id", "", true);
  b.add_column(customers, "name", "full customer name");
  b.add_column(customers, "city", "billing city");

  const TableId orders = b.add_table("orders", "purchase orders");
  b.add_column(orders, "order_id", "", true);
  b.add_column(orders, "customer_id", "buyer");
  b.add_column(orders, "order_date", "date the order was placed");
  b.add_column(orders, "total", "order total amount");
  b.add_foreign_key(orders, "customer_id", "customers", "customer_id");

  const TableId items = b.add_table("order_items", "line items of an order");
  b.add_column(items, "order_item_id", "", true);
  b.add_column(items, "order_id");
  b.add_column(items, "product_id");
  b.add_column(items, "quantity", "units ordered");
  b.add_foreign_key(items, "order_id", "orders", "order_id");
  b.add_foreign_key(items, "product_id", "products", "product_id");

  const TableId products = b.add_table("products", "catalog of sellable products");
  b.add_column(products, "product_id", "", true);
  b.add_column(products, "name", "product name");
  b.add_column(products, "price", "unit price");
  b.add_column(products, "category_id");
  b.add_foreign_key(products, "category_id", "categories", "category_id");

  const TableId categories = b.add_table("categories");
  b.add_column(categories, "category_id", "", true);
  b.add_column(categories, "title", "category title");

  const TableId suppliers = b.add_table("suppliers", "vendors supplying stock");
  b.add_column(suppliers, "supplier_id", "", true);
  b.add_column(suppliers, "company");
  b.add_column(suppliers, "country", "supplier country");
  return std::move(b).build();
}

inline std::vector<TracePair> shop_trace() {
  return {
      {"how many orders per customer",
       "SELECT c.name, COUNT(*) FROM customers c JOIN orders o ON o.customer_id = c.customer_id GROUP BY c.name", {}},
      {"total revenue by product category",
       "SELECT cat.title, SUM(p.price * i.quantity) FROM order_items i JOIN products p ON i.product_id = p.product_id "
       "JOIN categories cat ON p.category_id = cat.category_id GROUP BY cat.title", {}},
      {"list suppliers in germany", "SELECT company FROM suppliers WHERE country = 'Germany'", {}},
      {"which city has the most customers", "SELECT city, COUNT(*) FROM customers GROUP BY city", {}},
      {"average order total", "SELECT AVG(total) FROM orders", {}},
      {"products cheaper than ten", "SELECT name FROM products WHERE price < 10", {}},
      {"quantity of items ordered per order date",
       "SELECT o.order_date, SUM(i.quantity) FROM orders o JOIN order_items i ON i.order_id = o.order_id "
       "GROUP BY o.order_date", {}},
      {"customers who bought products in a category",
       "SELECT DISTINCT c.name FROM customers c JOIN orders o ON o.customer_id = c.customer_id "
       "JOIN order_items i ON i.order_id = o.order_id JOIN products p ON p.product_id = i.product_id "
       "WHERE p.category_id = 3", {}},
      {"category titles", "SELECT title FROM categories", {}},
      {"largest orders with customer names",
       "SELECT c.name, o.total FROM orders o, customers c WHERE o.customer_id = c.customer_id ORDER BY o.total DESC",
       {}},
  };
}

/// Random catalogs for oracle comparisons. Names come from a small pool so that questions
/// built from the same pool produce ties and shared tokens.
struct RandomSchema {
  std::mt19937_64 rng;

  explicit RandomSchema(std::uint64_t seed) : rng(seed) {}

  std::size_t uniform(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

  const std::string& word() {
    static const std::vector<std::string> pool = {
        "order", "customer", "price", "region", "account", "item",   "ledger", "date",
        "amount", "status",  "vendor", "stock", "budget", "quota",  "team",   "city",
        "code",  "total",    "name",  "type",  "owner",  "payment", "event",  "rate"};
    return pool[uniform(0, pool.size() - 1)];
  }

  std::string phrase(std::size_t words) {
    std::string s;
    for (std::size_t i = 0; i < words; ++i) s += (i ? " " : "") + word();
    return s;
  }

  SchemaCatalog catalog(std::size_t max_tables = 20) {
    const std::size_t n = uniform(1, max_tables);
    CatalogBuilder b;
    std::vector<std::string> names;
    std::vector<TableId> ids;
    for (std::size_t t = 0; t < n; ++t) {
      names.push_back(word() + "_" + word() + "_" + std::to_string(t));
      ids.push_back(b.add_table(names.back(), coin(0.6) ? phrase(uniform(1, 4)) : ""));
      // Without the primary-key flag and without FKs the table falls back to a surrogate key.
      b.add_column(ids.back(), names.back() + "_id", "", coin(0.8));
      const std::size_t cols = uniform(0, 5);
      for (std::size_t c = 0; c < cols; ++c) {
        b.add_column(ids.back(), word() + "_" + std::to_string(c), coin(0.5) ? phrase(uniform(1, 3)) : "");
      }
      if (coin(0.3)) b.add_column(ids.back(), "shared_code");
    }
    // FK columns point at the first column of an earlier table.
    for (std::size_t t = 1; t < n; ++t) {
      const std::size_t links = uniform(0, 2);
      for (std::size_t j = 0; j < links; ++j) {
        const std::size_t target = uniform(0, t - 1);
        const std::string col = "ref_" + names[target] + "_" + std::to_string(j);
        b.add_column(ids[t], col);
        b.add_foreign_key(ids[t], col, names[target], names[target] + "_id");
      }
    }
    return std::move(b).build();
  }

  /// Trace of single-table and join queries over random tables of `catalog`.
  std::vector<TracePair> trace(const SchemaCatalog& catalog, std::size_t max_pairs = 32) {
    const std::size_t n = uniform(1, max_pairs);
    std::vector<TracePair> out;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t width = uniform(1, std::min<std::size_t>(3, catalog.table_count()));
      std::string sql = "SELECT * FROM ";
      for (std::size_t j = 0; j < width; ++j) {
        const Table& t = catalog.tables()[uniform(0, catalog.table_count() - 1)];
        sql += (j ? ", " : "") + t.name;
      }
      out.push_back({phrase(uniform(1, 6)) + " " + std::to_string(i), sql, {}});
    }
    return out;
  }

  TableSet scope(const SchemaCatalog& catalog) {
    TableSet s;
    for (const Table& t : catalog.tables()) {
      if (coin(0.5)) s.insert(t.id);
    }
    if (s.empty()) s.insert(catalog.tables().front().id);
    return s;
  }
};

}  // namespace csr::test
