#pragma once

#include "spq/estimator.hpp"
#include "spq/field_sim.hpp"
#include "spq/predictor.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spq {

/// Shortest "%.17g" rendering; strtod reads it back exactly.
std::string format_double(double v);

// Field CSV: `i,j,value,observed`, one row per site, row-major. The plot
// variant appends `is_target`.
void write_field_csv(std::ostream& out, const FieldOnGrid& field);
void write_plot_csv(std::ostream& out, const FieldOnGrid& field, const std::vector<Site>& targets);

struct FieldCsv {
  FieldOnGrid field;
  std::vector<Site> targets;  // rows with is_target = 1, when the column exists
};
FieldCsv read_field_csv(std::istream& in);
FieldCsv read_field_csv(const std::filesystem::path& path);

/// Sample CSV: `x_1,...,x_d,y`.
void write_sample_csv(std::ostream& out, const Sample& sample);
Sample read_sample_csv(std::istream& in);
Sample read_sample_csv(const std::filesystem::path& path);

struct Query {
  std::vector<double> x;
  std::optional<double> y;
  std::optional<double> p;
};

/// Query CSV: `x_1,...,x_d[,y][,p]`.
std::vector<Query> read_query_csv(std::istream& in);
std::vector<Query> read_query_csv(const std::filesystem::path& path);

struct ResultRow {
  std::size_t query_id = 0;
  std::string quantity;  // cdf | density | quantile | interval_lower | interval_upper
  std::optional<double> value;
  std::string error_code;  // empty on success
};

/// Evaluates every quantity a query supports at a fixed configuration:
/// cdf and density when y is given, quantile and the asymptotic interval
/// (at level 1 - alpha) when p is given.
std::vector<ResultRow> evaluate_queries(const Sample& sample, const std::vector<Query>& queries,
                                        const EstimatorConfig& cfg, double alpha);

/// Results CSV: `query_id,quantity,value,error_code`.
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(std::istream& in);

nlohmann::json to_json(const BandwidthReport& report);
nlohmann::json to_json(const ExperimentReport& report);

/// Prediction table: per vicinity the columns p=first, truth, remaining p;
/// a trailing MAE row.
void write_table_csv(std::ostream& out, const std::vector<std::string>& names,
                     const std::vector<const ExperimentReport*>& reports);

/// Writes text to a file, throwing ArgumentError when it cannot be opened.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace spq
