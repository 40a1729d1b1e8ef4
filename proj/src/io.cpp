#include "spq/io.hpp"

#include "spq/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string_view>

namespace spq {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string_view rest(line);
  while (true) {
    const auto pos = rest.find(',');
    out.emplace_back(trim(rest.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + 1);
  }
  return out;
}

double parse_double(std::string_view text, std::size_t line, std::string_view column) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ArgumentError("line " + std::to_string(line) + ": column '" + std::string(column) +
                        "' is not a finite number: '" + std::string(text) + "'");
  }
  return v;
}

long long parse_int(std::string_view text, std::size_t line, std::string_view column) {
  long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ArgumentError("line " + std::to_string(line) + ": column '" + std::string(column) +
                        "' is not an integer: '" + std::string(text) + "'");
  }
  return v;
}

bool parse_flag(std::string_view text, std::size_t line, std::string_view column) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw ArgumentError("line " + std::to_string(line) + ": column '" + std::string(column) +
                      "' must be 0 or 1");
}

/// Reads the header and data rows, checking every row has the header's width.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

Table read_table(std::istream& in) {
  Table t;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ArgumentError("line " + std::to_string(number) + ": expected " +
                          std::to_string(t.header.size()) + " columns, found " +
                          std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(number);
  }
  if (t.header.empty()) throw ArgumentError("CSV input is empty");
  return t;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path.string());
  return in;
}

/// Counts leading x_1..x_d columns.
std::size_t covariate_columns(const std::vector<std::string>& header) {
  std::size_t d = 0;
  while (d < header.size() && header[d] == "x_" + std::to_string(d + 1)) ++d;
  return d;
}

}  // namespace

void write_field_csv(std::ostream& out, const FieldOnGrid& field) {
  out << "i,j,value,observed\n";
  for (std::size_t k = 0; k < field.region.size(); ++k) {
    const Site s = field.region.site(k);
    out << s.i << ',' << s.j << ',' << format_double(field.values[k]) << ','
        << (field.mask[k] ? 1 : 0) << '\n';
  }
}

void write_plot_csv(std::ostream& out, const FieldOnGrid& field, const std::vector<Site>& targets) {
  out << "i,j,value,observed,is_target\n";
  for (std::size_t k = 0; k < field.region.size(); ++k) {
    const Site s = field.region.site(k);
    const bool target = std::find(targets.begin(), targets.end(), s) != targets.end();
    out << s.i << ',' << s.j << ',' << format_double(field.values[k]) << ','
        << (field.mask[k] ? 1 : 0) << ',' << (target ? 1 : 0) << '\n';
  }
}

FieldCsv read_field_csv(std::istream& in) {
  const Table t = read_table(in);
  const std::vector<std::string> base{"i", "j", "value", "observed"};
  const bool plot = t.header.size() == 5 && t.header[4] == "is_target";
  if ((t.header.size() != 4 && !plot) || !std::equal(base.begin(), base.end(), t.header.begin())) {
    throw ArgumentError("field CSV header must be i,j,value,observed[,is_target]");
  }
  if (t.rows.empty()) throw ArgumentError("field CSV has no rows");

  int n1 = 0;
  int n2 = 0;
  std::vector<Site> sites;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const Site s{static_cast<int>(parse_int(t.rows[r][0], t.line_numbers[r], "i")),
                 static_cast<int>(parse_int(t.rows[r][1], t.line_numbers[r], "j"))};
    if (s.i < 1 || s.j < 1) {
      throw ArgumentError("line " + std::to_string(t.line_numbers[r]) + ": sites are 1-based");
    }
    n1 = std::max(n1, s.i);
    n2 = std::max(n2, s.j);
    sites.push_back(s);
  }
  const GridRegion region(n1, n2);
  if (t.rows.size() != region.size()) {
    throw ArgumentError("field CSV has " + std::to_string(t.rows.size()) + " rows for a " +
                        std::to_string(n1) + "x" + std::to_string(n2) + " region");
  }
  std::vector<double> values(region.size());
  std::vector<bool> mask(region.size());
  std::vector<bool> seen(region.size(), false);
  FieldCsv out{FieldOnGrid(region, values, mask), {}};
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t k = region.index(sites[r]);
    if (seen[k]) {
      throw ArgumentError("line " + std::to_string(t.line_numbers[r]) + ": duplicate site");
    }
    seen[k] = true;
    values[k] = parse_double(t.rows[r][2], t.line_numbers[r], "value");
    mask[k] = parse_flag(t.rows[r][3], t.line_numbers[r], "observed");
    if (plot && parse_flag(t.rows[r][4], t.line_numbers[r], "is_target")) {
      out.targets.push_back(sites[r]);
    }
  }
  std::sort(out.targets.begin(), out.targets.end());
  out.field = FieldOnGrid(region, std::move(values), std::move(mask));
  return out;
}

FieldCsv read_field_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return read_field_csv(in);
}

void write_sample_csv(std::ostream& out, const Sample& sample) {
  for (std::size_t k = 0; k < sample.dim(); ++k) out << "x_" << k + 1 << ',';
  out << "y\n";
  for (std::size_t i = 0; i < sample.size(); ++i) {
    for (double v : sample.covariate(i)) out << format_double(v) << ',';
    out << format_double(sample.response(i)) << '\n';
  }
}

Sample read_sample_csv(std::istream& in) {
  const Table t = read_table(in);
  const std::size_t d = covariate_columns(t.header);
  if (d == 0 || t.header.size() != d + 1 || t.header[d] != "y") {
    throw ArgumentError("sample CSV header must be x_1,...,x_d,y");
  }
  std::vector<double> covariates;
  std::vector<double> responses;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t k = 0; k < d; ++k) {
      covariates.push_back(parse_double(t.rows[r][k], t.line_numbers[r], t.header[k]));
    }
    responses.push_back(parse_double(t.rows[r][d], t.line_numbers[r], "y"));
  }
  if (responses.empty()) throw ArgumentError("sample CSV has no rows");
  return Sample(d, std::move(covariates), std::move(responses));
}

Sample read_sample_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return read_sample_csv(in);
}

std::vector<Query> read_query_csv(std::istream& in) {
  const Table t = read_table(in);
  const std::size_t d = covariate_columns(t.header);
  if (d == 0) throw ArgumentError("query CSV header must start with x_1");
  std::optional<std::size_t> y_col;
  std::optional<std::size_t> p_col;
  for (std::size_t c = d; c < t.header.size(); ++c) {
    if (t.header[c] == "y" && !y_col && !p_col) {
      y_col = c;
    } else if (t.header[c] == "p" && !p_col) {
      p_col = c;
    } else {
      throw ArgumentError("query CSV header must be x_1,...,x_d[,y][,p]; unexpected column '" +
                          t.header[c] + "'");
    }
  }
  std::vector<Query> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    Query q;
    for (std::size_t k = 0; k < d; ++k) {
      q.x.push_back(parse_double(t.rows[r][k], t.line_numbers[r], t.header[k]));
    }
    if (y_col && !t.rows[r][*y_col].empty()) {
      q.y = parse_double(t.rows[r][*y_col], t.line_numbers[r], "y");
    }
    if (p_col && !t.rows[r][*p_col].empty()) {
      q.p = parse_double(t.rows[r][*p_col], t.line_numbers[r], "p");
      if (!(*q.p > 0.0 && *q.p < 1.0)) {
        throw ArgumentError("line " + std::to_string(t.line_numbers[r]) + ": p must lie in (0,1)");
      }
    }
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<Query> read_query_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return read_query_csv(in);
}

std::vector<ResultRow> evaluate_queries(const Sample& sample, const std::vector<Query>& queries,
                                        const EstimatorConfig& cfg, double alpha) {
  for (std::size_t q = 0; q < queries.size(); ++q) {
    if (queries[q].x.size() != sample.dim()) {
      throw ArgumentError("query " + std::to_string(q) + " has dimension " +
                          std::to_string(queries[q].x.size()) + ", sample has " +
                          std::to_string(sample.dim()));
    }
  }
  std::vector<ResultRow> rows;
  auto run = [&](std::size_t id, const char* quantity, auto&& compute) {
    ResultRow row{id, quantity, std::nullopt, {}};
    try {
      row.value = compute();
    } catch (const NumericalError& e) {
      row.error_code = e.code();
    }
    rows.push_back(std::move(row));
  };
  for (std::size_t id = 0; id < queries.size(); ++id) {
    const Query& q = queries[id];
    const LocalFit fit(sample, q.x, cfg);
    if (q.y) {
      run(id, "cdf", [&] { return fit.cdf(*q.y); });
      run(id, "density", [&] { return fit.density(*q.y); });
    }
    if (q.p) {
      run(id, "quantile", [&] { return fit.quantile(*q.p).value; });
      std::optional<IntervalResult> interval;
      std::string failure;
      try {
        interval = confidence_interval(sample, q.x, *q.p, alpha, cfg);
      } catch (const NumericalError& e) {
        failure = e.code();
      }
      rows.push_back({id, "interval_lower",
                      interval ? std::optional<double>(interval->lower) : std::nullopt, failure});
      rows.push_back({id, "interval_upper",
                      interval ? std::optional<double>(interval->upper) : std::nullopt, failure});
    }
  }
  return rows;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "query_id,quantity,value,error_code\n";
  for (const ResultRow& r : rows) {
    out << r.query_id << ',' << r.quantity << ','
        << (r.value ? format_double(*r.value) : std::string()) << ',' << r.error_code << '\n';
  }
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  const Table t = read_table(in);
  if (t.header != std::vector<std::string>{"query_id", "quantity", "value", "error_code"}) {
    throw ArgumentError("results CSV header must be query_id,quantity,value,error_code");
  }
  std::vector<ResultRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ResultRow row;
    row.query_id = static_cast<std::size_t>(parse_int(t.rows[r][0], t.line_numbers[r], "query_id"));
    row.quantity = t.rows[r][1];
    if (!t.rows[r][2].empty()) row.value = parse_double(t.rows[r][2], t.line_numbers[r], "value");
    row.error_code = t.rows[r][3];
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const BandwidthReport& report) {
  json h_p = json::array();
  for (const auto& [p, h] : report.h_p) h_p.push_back({{"p", p}, {"h", h}});
  json curve = json::array();
  for (const CvPoint& pt : report.cv_curve) {
    curve.push_back({{"h", pt.bandwidth}, {"cv_score", pt.score}, {"no_mass", pt.no_mass}});
  }
  return {{"h_mean", report.h_mean}, {"h_p", h_p}, {"cv_curve", curve},
          {"excluded", report.excluded}};
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(); }

}  // namespace

json to_json(const ExperimentReport& report) {
  json offsets = json::array();
  for (const Site& o : report.vicinity.offsets()) offsets.push_back({o.i, o.j});
  json rows = json::array();
  for (const TargetRow& row : report.rows) {
    json preds = json::array();
    for (std::size_t q = 0; q < report.quantiles.size(); ++q) {
      preds.push_back({{"p", report.quantiles[q]},
                       {"value", optional_number(row.predictions[q])},
                       {"error_code", row.failures[q]}});
    }
    json r = {{"site", {row.site.i, row.site.j}}, {"truth", row.truth}, {"predictions", preds}};
    if (row.interval) {
      r["interval"] = {{"lower", row.interval->lower},
                       {"upper", row.interval->upper},
                       {"level", row.interval->level},
                       {"kind", row.interval->kind == IntervalKind::predictive ? "predictive"
                                                                               : "asymptotic"},
                       {"contains_truth", row.interval->contains(row.truth)}};
    } else if (!row.interval_failure.empty()) {
      r["interval"] = {{"error_code", row.interval_failure}};
    }
    rows.push_back(std::move(r));
  }
  json mae_json = json::array();
  for (std::size_t q = 0; q < report.quantiles.size(); ++q) {
    mae_json.push_back({{"p", report.quantiles[q]},
                        {"mae", optional_number(report.mae[q])},
                        {"failed", report.failed[q]}});
  }
  const Coverage cov = coverage_report(report);
  return {{"vicinity", offsets},
          {"dimension", report.dimension},
          {"training_size", report.training_size},
          {"bandwidth", to_json(report.bandwidths)},
          {"targets", rows},
          {"mae", mae_json},
          {"coverage",
           {{"intervals", cov.intervals},
            {"contained", cov.contained},
            {"average_length", cov.average_length}}}};
}

void write_table_csv(std::ostream& out, const std::vector<std::string>& names,
                     const std::vector<const ExperimentReport*>& reports) {
  if (reports.empty() || names.size() != reports.size()) {
    throw ArgumentError("write_table_csv: names and reports must align");
  }
  // column order: first quantile, truth, remaining quantiles
  auto p_label = [](double p) { return "p=" + format_double(p); };
  out << "i,j";
  for (std::size_t v = 0; v < reports.size(); ++v) {
    const auto& qs = reports[v]->quantiles;
    out << ',' << names[v] << ':' << p_label(qs[0]) << ',' << names[v] << ":truth";
    for (std::size_t q = 1; q < qs.size(); ++q) out << ',' << names[v] << ':' << p_label(qs[q]);
  }
  out << '\n';
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : "NA"; };
  const std::size_t n_rows = reports[0]->rows.size();
  for (std::size_t r = 0; r < n_rows; ++r) {
    const Site s = reports[0]->rows[r].site;
    out << s.i << ',' << s.j;
    for (const ExperimentReport* rep : reports) {
      const TargetRow& row = rep->rows.at(r);
      out << ',' << cell(row.predictions[0]) << ',' << format_double(row.truth);
      for (std::size_t q = 1; q < rep->quantiles.size(); ++q) out << ',' << cell(row.predictions[q]);
    }
    out << '\n';
  }
  out << "MAE,";
  for (const ExperimentReport* rep : reports) {
    out << ',' << cell(rep->mae[0]) << ',';
    for (std::size_t q = 1; q < rep->quantiles.size(); ++q) out << ',' << cell(rep->mae[q]);
  }
  out << '\n';
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write " + path.string());
  out << text;
  if (!out) throw ArgumentError("write failed for " + path.string());
}

}  // namespace spq
