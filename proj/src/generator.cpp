#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "csr/eval.hpp"
#include "rng.hpp"

namespace csr {

namespace {

constexpr const char* kDomains[] = {
    "sales",   "finance",  "inventory", "customer", "supplier",  "shipping",  "payroll",   "marketing",
    "support", "billing",  "procurement", "warehouse", "product", "logistics", "contract", "asset",
    "risk",    "audit",    "treasury",  "tax",      "loyalty",   "retail",    "claims",    "manufacturing",
};

constexpr const char* kNouns[] = {
    "account",  "order",    "invoice",  "payment",  "item",     "ledger",  "shipment", "vendor",
    "employee", "region",   "store",    "campaign", "ticket",   "policy",  "price",    "budget",
    "forecast", "receipt",  "refund",   "transfer", "batch",    "schedule", "document", "contact",
    "address",  "category", "channel",  "event",    "quota",    "rate",    "balance",  "agreement",
    "request",  "review",   "plan",     "segment",
};

constexpr const char* kAttributes[] = {
    "amount",       "quantity",     "status",       "code",          "title",        "created_date",
    "updated_date", "start_date",   "end_date",     "total_value",   "unit_cost",    "currency",
    "priority",     "score",        "rating",       "notes",         "label",        "country",
    "city",         "phone",        "email",        "discount",      "tax_rate",     "weight",
    "volume",       "duration",     "tier",         "category_code", "version",      "owner_name",
    "approved_flag", "active_flag", "sequence_no",  "reference_no",  "remarks",      "source_system",
    "margin",       "revenue",      "cost",         "balance_amount", "credit_limit", "due_date",
    "paid_date",    "expiry_date",  "channel_code", "region_code",   "description_text", "external_ref",
    "batch_no",     "risk_score",   "segment_code", "fiscal_year",   "fiscal_period", "approval_date",
    "comment_text", "unit_price",   "net_amount",   "gross_amount",  "late_fee",     "contact_name",
};

constexpr const char* kQualifiers[] = {
    "this quarter", "last month",   "for the current year", "in the last week", "over the past year",
    "for last year", "today",       "this month",           "in the previous quarter", "year to date",
    "since january", "by month",    "by week",              "for the top ten",  "ordered by date",
};

std::string words(std::string_view identifier) {
  std::string out(identifier);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

struct TableShape {
  std::string name;
  std::string domain;
  std::string noun;
  std::vector<std::size_t> refs;  // FK targets
  std::size_t attributes = 1;
};

struct Edge {
  std::size_t from;  // table holding the FK column
  std::size_t to;    // referenced table
};

double pmf_stddev(const std::vector<double>& pmf) {
  double mean = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    const double s = static_cast<double>(i + 1);
    mean += pmf[i] * s;
    sq += pmf[i] * s * s;
  }
  return std::sqrt(std::max(0.0, sq - mean * mean));
}

std::vector<double> mixture_pmf(std::size_t max_size, double tail_mass, double body_ratio, double tail_ratio) {
  std::vector<double> pmf(max_size, 0.0);
  const std::size_t body_end = std::min<std::size_t>(6, max_size);
  double body_total = 0.0, tail_total = 0.0;
  for (std::size_t s = 1; s <= body_end; ++s) body_total += std::pow(body_ratio, static_cast<double>(s - 1));
  for (std::size_t s = 7; s <= max_size; ++s) tail_total += std::pow(tail_ratio, static_cast<double>(s - 7));
  const double body_mass = tail_total > 0.0 ? 1.0 - tail_mass : 1.0;
  for (std::size_t s = 1; s <= body_end; ++s) {
    pmf[s - 1] = body_mass * std::pow(body_ratio, static_cast<double>(s - 1)) / body_total;
  }
  for (std::size_t s = 7; s <= max_size && tail_total > 0.0; ++s) {
    pmf[s - 1] = tail_mass * std::pow(tail_ratio, static_cast<double>(s - 7)) / tail_total;
  }
  return pmf;
}

double median_incident(const std::vector<TableShape>& tables) {
  std::vector<std::size_t> incident(tables.size(), 0);
  for (std::size_t i = 0; i < tables.size(); ++i) {
    for (std::size_t r : tables[i].refs) {
      ++incident[i];
      ++incident[r];
    }
  }
  return lower_median(incident);
}

// Preferential attachment: each table references `out` distinct others chosen with
// probability proportional to (in-degree + 1), yielding a few hub tables.
void wire_foreign_keys(std::vector<TableShape>& tables, std::size_t mean_out, Rng& rng) {
  const std::size_t n = tables.size();
  std::vector<double> in_degree(n, 0.0);
  for (auto& t : tables) t.refs.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = mean_out > 2 ? mean_out - 2 : 1;
    std::size_t out = std::min(lo + rng.below(5), n - 1);
    std::set<std::size_t> chosen;
    while (chosen.size() < out) {
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i && !chosen.count(j)) total += in_degree[j] + 1.0;
      }
      double pick = rng.unit() * total;
      std::size_t target = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || chosen.count(j)) continue;
        target = j;
        pick -= in_degree[j] + 1.0;
        if (pick < 0.0) break;
      }
      chosen.insert(target);
      in_degree[target] += 1.0;
    }
    tables[i].refs.assign(chosen.begin(), chosen.end());
  }
}

}  // namespace

void GeneratorProfile::validate() const {
  if (table_count < 1) throw std::invalid_argument("profile: table_count must be >= 1");
  if (query_count < 1) throw std::invalid_argument("profile: query_count must be >= 1");
  if (questions_per_intent < 1) throw std::invalid_argument("profile: questions_per_intent must be >= 1");
  if (max_tables_per_query < 1) throw std::invalid_argument("profile: max_tables_per_query must be >= 1");
  if (!(tables_per_query_p_ge7 >= 0.0 && tables_per_query_p_ge7 <= 1.0)) {
    throw std::invalid_argument("profile: tables_per_query_p_ge7 must be in [0, 1]");
  }
  if (!(description_coverage >= 0.0 && description_coverage <= 1.0)) {
    throw std::invalid_argument("profile: description_coverage must be in [0, 1]");
  }
  if (!(tables_per_query_stddev > 0.0)) throw std::invalid_argument("profile: stddev must be > 0");
  if (!(fk_median_target >= 0.0)) throw std::invalid_argument("profile: fk_median_target must be >= 0");
  const double cols = column_count > 0 ? static_cast<double>(column_count) / static_cast<double>(table_count)
                                       : columns_per_table_mean;
  if (!(cols >= 2.0)) throw std::invalid_argument("profile: need at least 2 columns per table");
  if (fk_median_target > cols) {
    throw std::invalid_argument("profile: fk_median_target exceeds columns per table");
  }
  if (tables_per_query_p_ge7 > 0.0 && std::min(max_tables_per_query, table_count) < 7) {
    throw std::invalid_argument("profile: relevant sets of 7+ tables need at least 7 tables");
  }
  if (static_cast<double>(table_count) > 1.0 && fk_median_target > 2.0 * static_cast<double>(table_count - 1)) {
    throw std::invalid_argument("profile: fk_median_target not reachable with this many tables");
  }
}

nlohmann::json to_json(const GeneratorProfile& p) {
  return {{"table_count", p.table_count},
          {"column_count", p.column_count},
          {"columns_per_table_mean", p.columns_per_table_mean},
          {"fk_median_target", p.fk_median_target},
          {"tables_per_query_p_ge7", p.tables_per_query_p_ge7},
          {"tables_per_query_stddev", p.tables_per_query_stddev},
          {"max_tables_per_query", p.max_tables_per_query},
          {"query_count", p.query_count},
          {"questions_per_intent", p.questions_per_intent},
          {"description_coverage", p.description_coverage},
          {"seed", p.seed}};
}

GeneratorProfile generator_profile_from_json(const nlohmann::json& j) {
  GeneratorProfile p;
  p.table_count = j.value("table_count", p.table_count);
  p.column_count = j.value("column_count", p.column_count);
  p.columns_per_table_mean = j.value("columns_per_table_mean", p.columns_per_table_mean);
  p.fk_median_target = j.value("fk_median_target", p.fk_median_target);
  p.tables_per_query_p_ge7 = j.value("tables_per_query_p_ge7", p.tables_per_query_p_ge7);
  p.tables_per_query_stddev = j.value("tables_per_query_stddev", p.tables_per_query_stddev);
  p.max_tables_per_query = j.value("max_tables_per_query", p.max_tables_per_query);
  p.query_count = j.value("query_count", p.query_count);
  p.questions_per_intent = j.value("questions_per_intent", p.questions_per_intent);
  p.description_coverage = j.value("description_coverage", p.description_coverage);
  p.seed = j.value("seed", p.seed);
  p.validate();
  return p;
}

GeneratorProfile enterprise_profile(std::uint64_t seed) {
  GeneratorProfile p;
  p.seed = seed;
  return p;
}

GeneratorProfile group_profile(int group, std::uint64_t seed) {
  static constexpr std::pair<std::size_t, std::size_t> sizes[] = {{50, 701}, {100, 1486}, {200, 2567}, {246, 3021}};
  if (group < 1 || group > 4) throw std::invalid_argument("group must be 1..4");
  GeneratorProfile p;
  p.table_count = sizes[group - 1].first;
  p.column_count = sizes[group - 1].second;
  p.columns_per_table_mean = static_cast<double>(p.column_count) / static_cast<double>(p.table_count);
  p.seed = seed;
  return p;
}

std::vector<double> relevant_size_pmf(const GeneratorProfile& profile) {
  const std::size_t max_size = std::min(profile.max_tables_per_query, profile.table_count);
  constexpr double body_ratio = 0.8;
  if (max_size < 7 || profile.tables_per_query_p_ge7 == 0.0) {
    return mixture_pmf(max_size, 0.0, body_ratio, 0.0);
  }
  // Stddev grows with the tail ratio; bisect for the target.
  double lo = 1e-3, hi = 1.5;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double sd = pmf_stddev(mixture_pmf(max_size, profile.tables_per_query_p_ge7, body_ratio, mid));
    (sd < profile.tables_per_query_stddev ? lo : hi) = mid;
  }
  return mixture_pmf(max_size, profile.tables_per_query_p_ge7, body_ratio, 0.5 * (lo + hi));
}

SyntheticWorkload generate_synthetic(const GeneratorProfile& profile) {
  profile.validate();
  Rng rng(profile.seed);
  const std::size_t n = profile.table_count;
  const std::size_t total_columns =
      profile.column_count > 0
          ? profile.column_count
          : static_cast<std::size_t>(std::llround(profile.columns_per_table_mean * static_cast<double>(n)));

  // Table names: distinct domain_noun pairs.
  std::vector<TableShape> tables(n);
  {
    std::vector<std::pair<std::size_t, std::size_t>> combos;
    for (std::size_t d = 0; d < std::size(kDomains); ++d) {
      for (std::size_t w = 0; w < std::size(kNouns); ++w) combos.emplace_back(d, w);
    }
    rng.shuffle(combos);
    for (std::size_t i = 0; i < n; ++i) {
      const auto [d, w] = combos[i % combos.size()];
      tables[i].domain = kDomains[d];
      tables[i].noun = kNouns[w];
      tables[i].name = std::string(kDomains[d]) + "_" + kNouns[w];
      if (i >= combos.size()) tables[i].name += "_" + std::to_string(i / combos.size() + 1);
    }
  }

  // Foreign keys: raise the mean out-degree until the incident-count median meets the target.
  std::size_t mean_out = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(profile.fk_median_target * 0.5)));
  if (n > 1) {
    for (;;) {
      Rng wiring(profile.seed ^ 0x9e3779b97f4a7c15ULL ^ mean_out);
      wire_foreign_keys(tables, mean_out, wiring);
      if (median_incident(tables) >= profile.fk_median_target || mean_out + 2 >= n - 1) break;
      ++mean_out;
    }
  }

  // Columns: primary key + FK columns + attributes; attribute counts are spread with a
  // heavy right tail and adjusted to hit the exact total.
  std::size_t fixed = 0;
  for (const auto& t : tables) fixed += 2 + t.refs.size();
  if (fixed > total_columns) {
    throw std::invalid_argument("profile: foreign keys need " + std::to_string(fixed) +
                                " columns but the profile allows " + std::to_string(total_columns));
  }
  {
    const std::size_t extra = total_columns - fixed;
    std::vector<double> weight(n);
    for (auto& w : weight) w = std::exp(0.8 * rng.normal());
    const double wsum = std::accumulate(weight.begin(), weight.end(), 0.0);
    std::vector<std::pair<double, std::size_t>> frac;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double share = static_cast<double>(extra) * weight[i] / wsum;
      const auto whole = static_cast<std::size_t>(std::floor(share));
      tables[i].attributes = 1 + whole;
      assigned += whole;
      frac.emplace_back(share - static_cast<double>(whole), i);
    }
    std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::size_t j = 0; assigned < extra; ++j, ++assigned) ++tables[frac[j % n].second].attributes;
  }

  CatalogBuilder builder;
  std::vector<std::vector<std::string>> attribute_names(n);
  for (std::size_t i = 0; i < n; ++i) {
    TableShape& t = tables[i];
    const bool described = rng.unit() < profile.description_coverage;
    const TableId tid = builder.add_table(
        t.name, described ? capitalize(t.noun) + " records kept by the " + t.domain + " team" : "");
    builder.add_column(tid, t.name + "_id", rng.unit() < profile.description_coverage ? "Identifier of the " + words(t.name) : "",
                       true);
    for (std::size_t r : t.refs) {
      builder.add_column(tid, tables[r].name + "_id",
                         rng.unit() < profile.description_coverage ? "Reference to " + words(tables[r].name) : "");
      builder.add_foreign_key(tid, tables[r].name + "_id", tables[r].name, tables[r].name + "_id");
    }
    std::vector<std::size_t> pool(std::size(kAttributes));
    std::iota(pool.begin(), pool.end(), 0);
    rng.shuffle(pool);
    for (std::size_t a = 0; a < t.attributes; ++a) {
      std::string name = kAttributes[pool[a % pool.size()]];
      if (rng.unit() < 0.4) name = t.noun + "_" + name;
      if (a >= pool.size()) name += "_" + std::to_string(a / pool.size() + 1);
      // Prefixing can collide with an unprefixed pick; fall back to a numbered name.
      if (std::find(attribute_names[i].begin(), attribute_names[i].end(), name) != attribute_names[i].end()) {
        name += "_" + std::to_string(a + 1);
      }
      builder.add_column(tid, name,
                         rng.unit() < profile.description_coverage
                             ? capitalize(words(name)) + " of the " + t.noun
                             : "");
      attribute_names[i].push_back(std::move(name));
    }
  }

  SyntheticWorkload out;
  out.catalog = std::move(builder).build();

  // Adjacency over FK edges, both directions.
  std::vector<std::vector<Edge>> adjacent(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r : tables[i].refs) {
      adjacent[i].push_back({i, r});
      adjacent[r].push_back({i, r});
    }
  }

  // Relevant-set sizes by stratified inverse-CDF sampling so the trace tracks the pmf closely.
  const std::vector<double> pmf = relevant_size_pmf(profile);
  const std::size_t intents = std::max<std::size_t>(1, (profile.query_count + profile.questions_per_intent / 2) /
                                                           profile.questions_per_intent);
  std::vector<std::size_t> sizes(intents);
  for (std::size_t j = 0; j < intents; ++j) {
    const double u = (static_cast<double>(j) + rng.unit()) / static_cast<double>(intents);
    double acc = 0.0;
    std::size_t s = pmf.size();
    for (std::size_t i = 0; i < pmf.size(); ++i) {
      acc += pmf[i];
      if (u < acc) {
        s = i + 1;
        break;
      }
    }
    sizes[j] = s;
  }
  rng.shuffle(sizes);

  struct Intent {
    std::vector<std::size_t> tables;  // insertion order
    std::vector<Edge> joins;          // joins[i] links tables[i + 1] to an earlier table
  };
  std::vector<Intent> intent_list;
  for (std::size_t size : sizes) {
    Intent in;
    for (int attempt = 0; attempt < 50; ++attempt) {
      in = Intent{};
      in.tables.push_back(rng.below(n));
      std::vector<bool> member(n, false);
      member[in.tables[0]] = true;
      while (in.tables.size() < size) {
        std::vector<Edge> frontier;
        for (std::size_t t : in.tables) {
          for (const Edge& e : adjacent[t]) {
            const std::size_t other = e.from == t ? e.to : e.from;
            if (!member[other]) frontier.push_back(e);
          }
        }
        if (frontier.empty()) break;
        const Edge e = frontier[rng.below(frontier.size())];
        const std::size_t added = member[e.from] ? e.to : e.from;
        member[added] = true;
        in.tables.push_back(added);
        in.joins.push_back(e);
      }
      if (in.tables.size() == size) break;
    }
    intent_list.push_back(std::move(in));
  }

  // Questions and SQL.
  std::unordered_set<std::string> seen_questions;
  std::vector<std::size_t> per_intent(intents, profile.query_count / intents);
  for (std::size_t j = 0; j < profile.query_count % intents; ++j) ++per_intent[j];

  for (std::size_t ii = 0; ii < intents; ++ii) {
    const Intent& in = intent_list[ii];
    for (std::size_t qn = 0; qn < per_intent[ii]; ++qn) {
      // Mention the anchor table and a few others; larger sets mention more tables.
      const std::size_t mention_count =
          std::min(in.tables.size(), 1 + in.tables.size() / 3 + rng.below(2));
      std::vector<std::size_t> mentioned{in.tables[0]};
      {
        std::vector<std::size_t> rest(in.tables.begin() + 1, in.tables.end());
        rng.shuffle(rest);
        for (std::size_t r = 0; mentioned.size() < mention_count && r < rest.size(); ++r) mentioned.push_back(rest[r]);
      }
      auto pick_attr = [&](std::size_t t) -> const std::string& {
        return attribute_names[t][rng.below(attribute_names[t].size())];
      };
      const std::string& col = pick_attr(mentioned[0]);
      const std::size_t col2_table = mentioned[rng.below(mentioned.size())];
      const std::string& col2 = pick_attr(col2_table);

      std::vector<std::string> names;
      for (std::size_t t : mentioned) names.push_back(words(tables[t].name));
      auto join_list = [&](std::size_t from) {
        std::string s;
        for (std::size_t i = from; i < names.size(); ++i) {
          if (i > from) s += (i + 1 == names.size()) ? " and " : ", ";
          s += names[i];
        }
        return s;
      };
      const std::string c1 = words(col), c2 = words(col2);
      std::string question;
      const std::size_t templ = rng.below(8);
      const bool multi = names.size() > 1;
      switch (templ) {
        case 0: question = "how many " + c1 + " per " + names[0] + (multi ? " for each " + join_list(1) : ""); break;
        case 1: question = "list " + c1 + " of " + names[0] + (multi ? " with their " + join_list(1) : " with " + c2); break;
        case 2: question = "show total " + c1 + " by " + names[0] + (multi ? " across " + join_list(1) : ""); break;
        case 3: question = "which " + names[0] + " have " + c1 + " above average" + (multi ? " in " + join_list(1) : ""); break;
        case 4: question = "compare " + c1 + " and " + c2 + " across " + join_list(0); break;
        case 5: question = "what is the average " + c1 + " of " + names[0] + " grouped by " + c2 + (multi ? " joined with " + join_list(1) : ""); break;
        case 6: question = "find " + names[0] + " where " + c1 + " is missing" + (multi ? " in " + join_list(1) : ""); break;
        default: question = "report " + c1 + " and " + c2 + " for " + names[0] + (multi ? " linked to " + join_list(1) : ""); break;
      }
      while (!seen_questions.insert(question).second) {
        question += " " + std::string(kQualifiers[rng.below(std::size(kQualifiers))]);
      }

      // SQL over the whole relevant set.
      const std::size_t alias_style = rng.below(3);
      std::vector<std::string> refs(n);
      auto ref_of = [&](std::size_t t) -> const std::string& { return refs[t]; };
      std::string from = " FROM ";
      for (std::size_t i = 0; i < in.tables.size(); ++i) {
        const std::size_t t = in.tables[i];
        std::string clause = tables[t].name;
        if (alias_style == 0) {
          refs[t] = "t" + std::to_string(i);
          clause += " AS " + refs[t];
        } else if (alias_style == 1) {
          refs[t] = std::string(1, static_cast<char>('a' + i % 26)) + (i >= 26 ? std::to_string(i / 26) : "");
          clause += " " + refs[t];
        } else {
          refs[t] = tables[t].name;
        }
        if (i == 0) {
          from += clause;
        } else {
          const Edge& e = in.joins[i - 1];
          const std::string key = tables[e.to].name + "_id";
          from += " JOIN " + clause + " ON " + ref_of(e.from) + "." + key + " = " + ref_of(e.to) + "." + key;
        }
      }
      std::string sql = "SELECT " + ref_of(mentioned[0]) + "." + col;
      if (col2 != col || col2_table != mentioned[0]) sql += ", " + ref_of(col2_table) + "." + col2;
      if (templ == 0 || templ == 2) sql += ", COUNT(*)";
      sql += from;
      if (templ == 3 || templ == 6) sql += " WHERE " + ref_of(mentioned[0]) + "." + col + " IS NOT NULL";
      if (templ == 0 || templ == 2) {
        sql += " GROUP BY " + ref_of(mentioned[0]) + "." + col;
        if (col2 != col || col2_table != mentioned[0]) sql += ", " + ref_of(col2_table) + "." + col2;
      }

      out.trace.push_back({std::move(question), std::move(sql), std::nullopt});
      TableSet planted;
      for (std::size_t t : in.tables) planted.insert(table_id(t));
      out.planted.push_back(std::move(planted));
    }
  }

  // Interleave intents the way a real query log would.
  std::vector<std::size_t> order(out.trace.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  SyntheticWorkload shuffled{std::move(out.catalog), {}, {}};
  for (std::size_t i : order) {
    shuffled.trace.push_back(std::move(out.trace[i]));
    shuffled.planted.push_back(std::move(out.planted[i]));
  }
  return shuffled;
}

}  // namespace csr
