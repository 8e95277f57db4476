#include "catcox/cli_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace catcox {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(const std::string& text)
{
    const std::string s = trim(text);
    if (s.empty()) return std::nullopt;
    const char* first = s.data();
    if (*first == '+') ++first;
    double v = 0;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

bool is_missing(const std::string& cell)
{
    const std::string s = trim(cell);
    return s.empty() || s == "NA";
}

bool level_matches(const std::string& cell, const std::string& level)
{
    const auto a = parse_number(cell), b = parse_number(level);
    if (a && b) return *a == *b;
    return trim(cell) == trim(level);
}

SpecKind kind_from_string(const std::string& k)
{
    static const std::map<std::string, SpecKind> kinds{{"time", SpecKind::time},
                                                       {"status", SpecKind::status},
                                                       {"continuous", SpecKind::continuous},
                                                       {"binary", SpecKind::binary},
                                                       {"categorical", SpecKind::categorical}};
    const auto it = kinds.find(k);
    if (it == kinds.end()) throw std::invalid_argument("schema: unknown column kind '" + k + "'");
    return it->second;
}

std::vector<std::string> string_list(const nlohmann::json& j)
{
    std::vector<std::string> out;
    for (const auto& v : j) out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    return out;
}

std::string read_line(std::istream& in, bool& ok)
{
    std::string line;
    ok = static_cast<bool>(std::getline(in, line));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

[[noreturn]] void cell_error(std::size_t row, const std::string& column, const std::string& what)
{
    throw std::runtime_error("load_dataset: row " + std::to_string(row) + ", column '" + column + "': " + what);
}

} // namespace

DatasetSchema DatasetSchema::from_json(const nlohmann::json& j)
{
    DatasetSchema schema;
    if (!j.contains("columns") || !j["columns"].is_array()) throw std::invalid_argument("schema: missing 'columns' array");
    int times = 0, statuses = 0;
    for (const auto& c : j["columns"]) {
        ColumnSpec spec;
        spec.name = c.at("name").get<std::string>();
        spec.kind = kind_from_string(c.value("kind", std::string("continuous")));
        spec.standardize = c.value("standardize", false);
        if (c.contains("levels")) spec.levels = string_list(c["levels"]);
        if (c.contains("event")) spec.event_codes = string_list(c["event"]);
        if (c.contains("labels")) spec.labels = string_list(c["labels"]);
        spec.time_scale = c.value("scale", 1.0);
        if (spec.kind == SpecKind::time) ++times;
        if (spec.kind == SpecKind::status) ++statuses;
        if (spec.kind == SpecKind::categorical && spec.levels.size() < 2)
            throw std::invalid_argument("schema: categorical column '" + spec.name + "' needs at least two levels");
        if (spec.kind == SpecKind::binary && !spec.levels.empty() && spec.levels.size() != 2)
            throw std::invalid_argument("schema: binary column '" + spec.name + "' takes exactly two levels");
        if (spec.standardize && spec.kind != SpecKind::continuous)
            throw std::invalid_argument("schema: only continuous columns can be standardized ('" + spec.name + "')");
        if (!(spec.time_scale > 0)) throw std::invalid_argument("schema: time scale must be positive");
        schema.columns.push_back(std::move(spec));
    }
    if (times != 1 || statuses != 1) throw std::invalid_argument("schema: need exactly one time and one status column");
    return schema;
}

DatasetSchema DatasetSchema::from_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open schema file " + path);
    return from_json(nlohmann::json::parse(in));
}

DatasetSchema DatasetSchema::plain(const std::vector<std::string>& header)
{
    if (header.size() < 3) throw std::invalid_argument("plain layout needs time, status and at least one covariate");
    DatasetSchema schema;
    for (std::size_t k = 0; k < header.size(); ++k) {
        ColumnSpec spec;
        spec.name = header[k];
        spec.kind = k == 0 ? SpecKind::time : k == 1 ? SpecKind::status : SpecKind::continuous;
        schema.columns.push_back(std::move(spec));
    }
    return schema;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                cur += '"';
                ++k;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(std::move(cur));
    return cells;
}

LoadedDataset load_dataset(std::istream& in, const DatasetSchema& schema)
{
    bool ok = false;
    const std::string header_line = read_line(in, ok);
    if (!ok || trim(header_line).empty()) throw std::runtime_error("load_dataset: empty file");
    const auto header = split_csv_line(header_line);
    std::map<std::string, std::size_t> position;
    for (std::size_t k = 0; k < header.size(); ++k) position[trim(header[k])] = k;

    std::vector<std::size_t> source;
    for (const auto& c : schema.columns) {
        const auto it = position.find(c.name);
        if (it == position.end()) throw std::runtime_error("load_dataset: column '" + c.name + "' not in header");
        source.push_back(it->second);
    }

    // output layout
    LoadedDataset out;
    std::vector<ColumnKind> kinds;
    std::vector<bool> standardize;
    for (const auto& c : schema.columns) {
        const std::size_t first = out.names.size();
        ColumnGroup group;
        switch (c.kind) {
        case SpecKind::time:
        case SpecKind::status: continue;
        case SpecKind::continuous:
            out.names.push_back(c.name);
            kinds.push_back(ColumnKind::continuous);
            standardize.push_back(c.standardize);
            group.strategy = CovariateStrategy::continuous_blend;
            break;
        case SpecKind::binary:
            out.names.push_back(c.levels.empty() ? c.name : c.name + "=" + c.levels[1]);
            kinds.push_back(ColumnKind::binary);
            standardize.push_back(false);
            group.strategy = CovariateStrategy::binary_flatten;
            break;
        case SpecKind::categorical:
            for (std::size_t l = 1; l < c.levels.size(); ++l) {
                out.names.push_back(c.name + "=" + c.levels[l]);
                kinds.push_back(ColumnKind::categorical_expanded);
                standardize.push_back(false);
            }
            group.strategy = CovariateStrategy::categorical_uniform;
            break;
        }
        for (std::size_t k = first; k < out.names.size(); ++k) group.columns.push_back(static_cast<Index>(k));
        if (!c.labels.empty()) {
            if (c.labels.size() != out.names.size() - first)
                throw std::invalid_argument("schema: column '" + c.name + "' has the wrong number of labels");
            for (std::size_t k = first; k < out.names.size(); ++k) out.names[k] = c.labels[k - first];
        }
        out.generator.groups.push_back(std::move(group));
    }
    const Index p = static_cast<Index>(out.names.size());
    if (p == 0) throw std::invalid_argument("schema: no covariate columns");

    std::vector<double> times, values;
    std::vector<bool> events;
    std::size_t row = 1;  // header is row 1
    for (;;) {
        const std::string line = read_line(in, ok);
        if (!ok) break;
        ++row;
        if (trim(line).empty()) continue;
        ++out.rows_read;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("load_dataset: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                     " fields, header has " + std::to_string(header.size()));
        bool missing = false;
        for (std::size_t k = 0; k < schema.columns.size() && !missing; ++k) missing = is_missing(cells[source[k]]);
        if (missing) {
            ++out.rows_dropped;
            continue;
        }
        for (std::size_t k = 0; k < schema.columns.size(); ++k) {
            const auto& c = schema.columns[k];
            const std::string& cell = cells[source[k]];
            switch (c.kind) {
            case SpecKind::time: {
                const auto v = parse_number(cell);
                if (!v) cell_error(row, c.name, "cannot parse '" + cell + "'");
                if (!(*v > 0)) cell_error(row, c.name, "time must be positive");
                times.push_back(*v * c.time_scale);
                break;
            }
            case SpecKind::status: {
                bool event = false;
                for (const auto& code : c.event_codes) event = event || level_matches(cell, code);
                events.push_back(event);
                break;
            }
            case SpecKind::continuous: {
                const auto v = parse_number(cell);
                if (!v) cell_error(row, c.name, "cannot parse '" + cell + "'");
                values.push_back(*v);
                break;
            }
            case SpecKind::binary: {
                if (!c.levels.empty()) {
                    if (level_matches(cell, c.levels[1])) values.push_back(1.0);
                    else if (level_matches(cell, c.levels[0])) values.push_back(0.0);
                    else cell_error(row, c.name, "unknown level '" + cell + "'");
                } else {
                    const auto v = parse_number(cell);
                    if (!v || (*v != 0 && *v != 1)) cell_error(row, c.name, "binary value must be 0 or 1, got '" + cell + "'");
                    values.push_back(*v);
                }
                break;
            }
            case SpecKind::categorical: {
                std::size_t level = c.levels.size();
                for (std::size_t l = 0; l < c.levels.size(); ++l)
                    if (level_matches(cell, c.levels[l])) level = l;
                if (level == c.levels.size()) cell_error(row, c.name, "unknown level '" + cell + "'");
                for (std::size_t l = 1; l < c.levels.size(); ++l) values.push_back(l == level ? 1.0 : 0.0);
                break;
            }
            }
        }
    }
    const Index n = static_cast<Index>(times.size());
    if (n == 0) throw std::runtime_error("load_dataset: no usable rows");

    Mat<double> x = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), n, p);
    out.transform = Standardizer<double>::identity(p);
    for (Index j = 0; j < p; ++j) {
        if (!standardize[static_cast<std::size_t>(j)]) continue;
        const double mean = x.col(j).mean();
        const double var = n > 1 ? (x.col(j).array() - mean).square().sum() / static_cast<double>(n - 1) : 0.0;
        if (!(var > 0)) throw std::domain_error("load_dataset: column '" + out.names[static_cast<std::size_t>(j)] + "' is constant");
        out.transform.center[j] = mean;
        out.transform.scale[j] = std::sqrt(var);
    }
    x = out.transform.apply(x);
    Vec<double> t = Eigen::Map<const Vec<double>>(times.data(), n);
    StatusVec s(n);
    for (Index i = 0; i < n; ++i) s[i] = events[static_cast<std::size_t>(i)];
    out.data = SurvivalData<double>(std::move(x), std::move(t), std::move(s), std::move(kinds));
    return out;
}

LoadedDataset load_dataset(const std::string& path, const DatasetSchema& schema)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open data file " + path);
    return load_dataset(in, schema);
}

LoadedDataset load_dataset(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open data file " + path);
    bool ok = false;
    const std::string header = read_line(in, ok);
    if (!ok || trim(header).empty()) throw std::runtime_error("load_dataset: empty file");
    std::vector<std::string> names;
    for (const auto& h : split_csv_line(header)) names.push_back(trim(h));
    in.clear();
    in.seekg(0);
    return load_dataset(in, DatasetSchema::plain(names));
}

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_survival_csv(const SurvivalData<double>& data, const std::vector<std::string>& names, std::ostream& out)
{
    if (static_cast<Index>(names.size()) != data.cols()) throw std::invalid_argument("write_survival_csv: one name per column");
    out << "time,status";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (Index i = 0; i < data.rows(); ++i) {
        out << format_double(data.times()[i]) << ',' << (data.status()[i] ? 1 : 0);
        for (Index j = 0; j < data.cols(); ++j) out << ',' << format_double(data.covariates()(i, j));
        out << '\n';
    }
}

void write_synthetic_csv(const SyntheticDataset<double>& synth, std::ostream& out)
{
    out << "y_star";
    for (Index j = 0; j < synth.cols(); ++j) out << ",x" << j + 1;
    out << '\n';
    for (Index i = 0; i < synth.size(); ++i) {
        out << format_double(synth.times[i]);
        for (Index j = 0; j < synth.cols(); ++j) out << ',' << format_double(synth.covariates(i, j));
        out << '\n';
    }
}

SyntheticDataset<double> read_synthetic_csv(std::istream& in)
{
    bool ok = false;
    const auto header = split_csv_line(read_line(in, ok));
    if (!ok || header.size() < 2 || trim(header[0]) != "y_star") throw std::runtime_error("read_synthetic_csv: bad header");
    const Index p = static_cast<Index>(header.size()) - 1;
    std::vector<double> values;
    std::size_t row = 1;
    for (;;) {
        const std::string line = read_line(in, ok);
        if (!ok) break;
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) throw std::runtime_error("read_synthetic_csv: row " + std::to_string(row) + " has the wrong width");
        for (std::size_t k = 0; k < cells.size(); ++k) {
            const auto v = parse_number(cells[k]);
            if (!v) throw std::runtime_error("read_synthetic_csv: row " + std::to_string(row) + ", column " + std::to_string(k + 1) + " is not a number");
            values.push_back(*v);
        }
    }
    const Index M = static_cast<Index>(values.size()) / (p + 1);
    const Mat<double> all = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), M, p + 1);
    SyntheticDataset<double> s;
    s.times = all.col(0);
    s.covariates = all.rightCols(p);
    s.meta.scheme = "imported";
    return s;
}

void write_chain_csv(const PosteriorSamples& samples, const std::vector<std::string>& names, std::ostream& out)
{
    const Index p = samples.beta_draws.cols(), J = samples.h_draws.cols();
    out << "chain,iteration";
    for (Index j = 0; j < p; ++j)
        out << ",beta_" << (static_cast<Index>(names.size()) == p ? names[static_cast<std::size_t>(j)] : std::to_string(j + 1));
    for (Index j = 0; j < J; ++j) out << ",h_" << j + 1;
    if (samples.has_tau()) out << ",tau";
    out << '\n';
    for (Index r = 0; r < samples.draws(); ++r) {
        const Index chain = r / samples.kept_per_chain;
        out << chain + 1 << ',' << samples.burnin + (r % samples.kept_per_chain) + 1;
        for (Index j = 0; j < p; ++j) out << ',' << format_double(samples.beta_draws(r, j));
        for (Index j = 0; j < J; ++j) out << ',' << format_double(samples.h_draws(r, j));
        if (samples.has_tau()) out << ',' << format_double(samples.tau_draws[r]);
        out << '\n';
    }
}

std::vector<double> parse_grid(const std::string& text)
{
    std::vector<double> grid;
    for (const auto& cell : split_csv_line(text)) {
        const auto v = parse_number(cell);
        if (!v) throw std::invalid_argument("grid: cannot parse '" + cell + "'");
        grid.push_back(*v);
    }
    if (grid.empty()) throw std::invalid_argument("grid: empty");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] > 0)) throw std::invalid_argument("grid: values must be positive");
        if (k && !(grid[k] > grid[k - 1])) throw std::invalid_argument("grid: values must be strictly increasing");
    }
    return grid;
}

} // namespace catcox
