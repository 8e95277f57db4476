#pragma once

#include "catcox/bayes_sampler.hpp"
#include "catcox/estimators.hpp"
#include "catcox/survival_core.hpp"
#include "catcox/synthesis.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace catcox {

enum class SpecKind { time, status, continuous, binary, categorical };

/**
 * One input column. Binary columns are numeric 0/1 unless `levels` names the
 * reference and the indicated level. Categoricals expand to one dummy per
 * non-reference level (levels[0] is the reference). Levels match numerically
 * when both sides parse as numbers ("0.5" matches "0.50").
 */
struct ColumnSpec {
    std::string name;
    SpecKind kind = SpecKind::continuous;
    bool standardize = false;
    std::vector<std::string> levels;
    std::vector<std::string> event_codes{"1"};  // status column: values counted as events
    double time_scale = 1.0;                    // time column: multiplier applied on load
    std::vector<std::string> labels;            // optional output names, one per produced column
};

struct DatasetSchema {
    std::vector<ColumnSpec> columns;

    /**
     * {"columns": [{"name": "time", "kind": "time", "scale": 0.0027}, {"name": "status",
     * "kind": "status", "event": ["2"]}, {"name": "age", "kind": "continuous",
     * "standardize": true}, {"name": "edema", "kind": "categorical", "levels": [...]}]}
     */
    static DatasetSchema from_json(const nlohmann::json& j);
    static DatasetSchema from_file(const std::string& path);
    /// time, status (1 = event), then every other header column as an unstandardized continuous covariate.
    static DatasetSchema plain(const std::vector<std::string>& header);
};

struct LoadedDataset {
    SurvivalData<double> data;
    std::vector<std::string> names;      // one per covariate column
    Standardizer<double> transform;      // identity on unstandardized columns
    CovariateGenSchema generator;        // synthetic-covariate groups matching the columns
    std::size_t rows_read = 0;
    std::size_t rows_dropped = 0;

    /// Coefficients on the standardized scale mapped to the original covariate scale.
    Vec<double> to_original_scale(const Vec<double>& beta) const { return beta.cwiseQuotient(transform.scale); }
};

/**
 * Reads a header CSV. Rows with an empty or "NA" cell in any schema column are
 * dropped and counted; flagged continuous columns are standardized to zero mean
 * and unit (n - 1) variance.
 */
LoadedDataset load_dataset(std::istream& in, const DatasetSchema& schema);
LoadedDataset load_dataset(const std::string& path, const DatasetSchema& schema);
/// Plain layout (see DatasetSchema::plain) read off the file's header.
LoadedDataset load_dataset(const std::string& path);

std::vector<std::string> split_csv_line(const std::string& line);

/// Decimal text with 17 significant digits, which round-trips every double.
std::string format_double(double v);

/// Header `time,status,<names>`.
void write_survival_csv(const SurvivalData<double>& data, const std::vector<std::string>& names, std::ostream& out);
/// Header `y_star,x1..xp`.
void write_synthetic_csv(const SyntheticDataset<double>& synth, std::ostream& out);
SyntheticDataset<double> read_synthetic_csv(std::istream& in);

/// One row per kept draw: chain, iteration, beta_1..beta_p, h_1..h_J, tau (when adaptive).
void write_chain_csv(const PosteriorSamples& samples, const std::vector<std::string>& names, std::ostream& out);

/// Parses "a,b,c" into strictly increasing positive numbers.
std::vector<double> parse_grid(const std::string& text);

/**
 * Command-line entry point: subcommands fit, synth, sample, cv and simulate.
 * Failures print {"error": ..., "kind": ...} to `err`; usage errors return 2,
 * runtime errors 1.
 */
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace catcox
