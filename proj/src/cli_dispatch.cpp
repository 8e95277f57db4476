#include "catcox/cli_io.hpp"

#include "catcox/parallel.hpp"
#include "catcox/simlab.hpp"
#include "catcox/tuning.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>

namespace catcox {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataArgs {
    std::string data;
    std::string schema;
};

void add_data_options(CLI::App* cmd, DataArgs& args)
{
    cmd->add_option("--data", args.data, "input CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--schema", args.schema, "JSON column schema (default: time,status,covariates...)")
        ->check(CLI::ExistingFile);
}

LoadedDataset load(const DataArgs& args)
{
    return args.schema.empty() ? load_dataset(args.data) : load_dataset(args.data, DatasetSchema::from_file(args.schema));
}

std::filesystem::path prepare_out(const std::string& dir)
{
    std::filesystem::path p(dir);
    std::filesystem::create_directories(p);
    return p;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

/// "cv", a number, or absent.
std::optional<double> numeric_or_cv(const std::string& text, const std::string& flag, bool& cv)
{
    cv = false;
    if (text.empty()) return std::nullopt;
    if (text == "cv") {
        cv = true;
        return std::nullopt;
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !(v > 0)) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw UsageError(flag + " takes a positive number or 'cv', got '" + text + "'");
    }
}

nlohmann::json dataset_json(const LoadedDataset& ld)
{
    return {{"n", ld.data.rows()},
            {"p", ld.data.cols()},
            {"events", ld.data.event_count()},
            {"rows_read", ld.rows_read},
            {"rows_dropped", ld.rows_dropped}};
}

struct FitArgs {
    DataArgs data;
    std::string method;
    std::string tau, lambda;
    Index M = 0;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::string grid;
    int K = 10;
    bool standardized = false;
};

int run_fit(const FitArgs& a, int threads, std::ostream& out)
{
    const bool synthetic = a.method == "cre" || a.method == "wme";
    const bool penalized = a.method == "ridge" || a.method == "lasso";
    if (!a.tau.empty() && !synthetic) throw UsageError("--tau applies to --method cre|wme only");
    if (!a.lambda.empty() && !penalized) throw UsageError("--lambda applies to --method ridge|lasso only");
    if (synthetic && a.tau.empty()) throw UsageError("--method " + a.method + " needs --tau <value>|cv");
    if (penalized && a.lambda.empty()) throw UsageError("--method " + a.method + " needs --lambda <value>|cv");
    bool cv = false;
    const auto fixed = synthetic ? numeric_or_cv(a.tau, "--tau", cv) : numeric_or_cv(a.lambda, "--lambda", cv);
    if (!a.grid.empty() && !cv) throw UsageError("--grid needs cross-validation (--tau cv or --lambda cv)");
    if ((synthetic || cv) && !a.seed) throw UsageError("--seed is required for --method " + a.method + (cv ? " with cv" : ""));

    const auto ld = load(a.data);
    const auto& data = ld.data;
    const std::uint64_t seed = a.seed.value_or(0);
    const Index M = a.M > 0 ? a.M : default_synthetic_size(data.cols());

    std::optional<SyntheticDataset<double>> synth;
    std::optional<CatalyticPrior<double>> prior;
    if (synthetic) {
        synth = make_synthetic(data, M, ld.generator, seed);
        if (a.method == "cre") prior.emplace(*synth, static_cast<double>(data.cols()), synth->meta.psi_hat);
    }

    nlohmann::json summary;
    summary["method"] = a.method;
    summary["data"] = dataset_json(ld);
    double value = fixed.value_or(0.0);
    if (cv) {
        CVConfig config;
        config.K = a.K;
        config.seed = derive_seed(seed, 2);
        config.threads = threads;
        TunedFit fit;
        if (a.method == "cre") fit = cre_tuned(*prior);
        else if (a.method == "wme") fit = wme_tuned(*synth);
        else if (a.method == "ridge") fit = ridge_tuned();
        else fit = lasso_tuned();
        config.grid = !a.grid.empty() ? parse_grid(a.grid) : synthetic ? default_tau_grid(data.cols()) : default_lambda_grid(data);
        const auto res = cvpl(data, fit, config);
        value = res.best_value;
        summary["cv"] = {{"K", a.K}, {"grid", res.grid}, {"scores", res.scores}, {"best", res.best_value},
                         {"fold_seed", res.fold_seed}};
    }

    FitResult<double> fit;
    if (a.method == "mple") fit = mple(data);
    else if (a.method == "cre") fit = cre(data, prior->with_tau(value));
    else if (a.method == "wme") fit = wme(data, *synth, value);
    else if (a.method == "ridge") fit = ridge(data, value);
    else fit = lasso(data, value);
    if (synthetic) summary["tau"] = value;
    if (penalized) summary["lambda"] = value;
    if (synthetic) summary["synthetic"] = {{"M", M}, {"seed", seed}, {"psi_hat", synth->meta.psi_hat}};
    summary["converged"] = fit.converged;
    summary["diverged"] = fit.diverged;
    summary["iterations"] = fit.iterations;
    summary["scale"] = a.standardized ? "standardized" : "original";

    const Vec<double> beta = a.standardized ? fit.beta : ld.to_original_scale(fit.beta);
    std::vector<Interval<double>> ci;
    if (a.method == "mple" && !fit.diverged) ci = wald_intervals(fit, 0.95);
    std::ostringstream table;
    table << "name,estimate" << (ci.empty() ? "" : ",lower,upper") << '\n';
    for (Index j = 0; j < data.cols(); ++j) {
        const auto& name = ld.names[static_cast<std::size_t>(j)];
        nlohmann::json c{{"name", name}, {"estimate", beta[j]}};
        table << name << ',' << format_double(beta[j]);
        if (!ci.empty()) {
            const double s = a.standardized ? 1.0 : ld.transform.scale[j];
            c["lower"] = ci[static_cast<std::size_t>(j)].lower / s;
            c["upper"] = ci[static_cast<std::size_t>(j)].upper / s;
            table << ',' << format_double(ci[static_cast<std::size_t>(j)].lower / s) << ','
                  << format_double(ci[static_cast<std::size_t>(j)].upper / s);
        }
        table << '\n';
        summary["coefficients"].push_back(c);
    }
    const auto dir = prepare_out(a.out);
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    write_text(dir / "table.csv", table.str());
    out << summary.dump(2) << '\n';
    return 0;
}

struct CvArgs {
    DataArgs data;
    std::string method;
    std::string grid;
    int K = 10;
    std::uint64_t seed = 0;
    Index M = 0;
    std::string out = ".";
};

int run_cv(const CvArgs& a, int threads, std::ostream& out)
{
    const auto ld = load(a.data);
    const auto& data = ld.data;
    CVConfig config;
    config.K = a.K;
    config.seed = derive_seed(a.seed, 2);
    config.threads = threads;
    TunedFit fit;
    std::optional<SyntheticDataset<double>> synth;
    if (a.method == "cre" || a.method == "wme") {
        synth = make_synthetic(data, a.M > 0 ? a.M : default_synthetic_size(data.cols()), ld.generator, a.seed);
        if (a.method == "cre")
            fit = cre_tuned(CatalyticPrior<double>(*synth, static_cast<double>(data.cols()), synth->meta.psi_hat));
        else
            fit = wme_tuned(*synth);
        config.grid = a.grid.empty() ? default_tau_grid(data.cols()) : parse_grid(a.grid);
    } else {
        fit = a.method == "ridge" ? ridge_tuned() : lasso_tuned();
        config.grid = a.grid.empty() ? default_lambda_grid(data) : parse_grid(a.grid);
    }
    const auto res = cvpl(data, fit, config);
    nlohmann::json summary{{"method", a.method}, {"data", dataset_json(ld)}, {"K", a.K},
                           {"best", res.best_value}, {"best_index", res.best_index}, {"fold_seed", res.fold_seed},
                           {"diverged_fits", res.diverged_fits}};
    std::ostringstream table;
    table << "value,cvpl\n";
    for (std::size_t g = 0; g < res.grid.size(); ++g) table << format_double(res.grid[g]) << ',' << format_double(res.scores[g]) << '\n';
    const auto dir = prepare_out(a.out);
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    write_text(dir / "table.csv", table.str());
    out << summary.dump(2) << '\n';
    return 0;
}

struct SynthArgs {
    DataArgs data;
    Index M = 0;
    std::uint64_t seed = 0;
    std::string out = ".";
};

int run_synth(const SynthArgs& a, std::ostream& out)
{
    const auto ld = load(a.data);
    const Index M = a.M > 0 ? a.M : default_synthetic_size(ld.data.cols());
    const auto synth = make_synthetic(ld.data, M, ld.generator, a.seed);
    const auto dir = prepare_out(a.out);
    std::ofstream f(dir / "synthetic.csv");
    if (!f) throw std::runtime_error("cannot write synthetic.csv");
    write_synthetic_csv(synth, f);
    nlohmann::json summary{{"M", M}, {"seed", a.seed}, {"psi_hat", synth.meta.psi_hat}, {"blend", synth.meta.blend},
                           {"fallback_columns", synth.meta.fallback_columns}, {"columns", ld.names}};
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    out << summary.dump(2) << '\n';
    return 0;
}

struct SampleArgs {
    DataArgs data;
    std::string prior = "catalytic";
    std::optional<double> tau;
    std::optional<double> variance;
    int iterations = 4000;
    int burnin = 2000;
    int chains = 1;
    std::uint64_t seed = 0;
    Index intervals = 20;
    Index M = 0;
    std::string out = ".";
    bool standardized = false;
};

int run_sample(const SampleArgs& a, int threads, std::ostream& out)
{
    if (a.prior == "catalytic" && !a.tau) throw UsageError("--prior catalytic needs --tau");
    if (a.prior != "catalytic" && a.tau) throw UsageError("--tau applies to --prior catalytic only");
    if (a.prior != "gaussian" && a.variance) throw UsageError("--variance applies to --prior gaussian only");
    if (a.burnin >= a.iterations) throw UsageError("--burnin must be smaller than --iters");

    const auto ld = load(a.data);
    const auto& data = ld.data;
    const double p = static_cast<double>(data.cols());
    std::optional<BetaPrior> prior;
    nlohmann::json summary;
    if (a.prior == "gaussian") {
        prior = BetaPrior::make_gaussian(a.variance.value_or(1.0));
    } else {
        const Index M = a.M > 0 ? a.M : default_synthetic_size(data.cols());
        auto synth = make_synthetic(data, M, ld.generator, derive_seed(a.seed, 1));
        summary["synthetic"] = {{"M", M}, {"psi_hat", synth.meta.psi_hat}};
        const double psi = synth.meta.psi_hat;
        if (a.prior == "catalytic") {
            prior = BetaPrior::make_catalytic(CatalyticPrior<double>(std::move(synth), *a.tau, psi));
        } else {
            prior = BetaPrior::make_adaptive(CatalyticPrior<double>(std::move(synth), p, psi, AdaptiveHyper{}));
        }
    }
    const auto grid = build_partition(data, a.intervals);
    const auto gp = GammaProcessConfig::from_data(data);
    SamplerConfig sc;
    sc.iterations = a.iterations;
    sc.burnin = a.burnin;
    sc.chains = a.chains;
    sc.seed = a.seed;
    sc.threads = threads;
    sc.adaptive_tau = a.prior == "adaptive";
    const auto samples = sample_posterior(data, grid, gp, *prior, sc);
    const auto coef = posterior_summary(samples);

    summary["prior"] = a.prior;
    if (a.tau) summary["tau"] = *a.tau;
    summary["data"] = dataset_json(ld);
    summary["iterations"] = a.iterations;
    summary["burnin"] = a.burnin;
    summary["chains"] = a.chains;
    summary["seed"] = a.seed;
    summary["intervals"] = grid.intervals();
    summary["beta_acceptance"] = samples.beta_acceptance;
    summary["h_acceptance"] = samples.h_acceptance;
    summary["scale"] = a.standardized ? "standardized" : "original";
    for (Index j = 0; j < data.cols(); ++j) {
        const auto& c = coef[static_cast<std::size_t>(j)];
        const double s = a.standardized ? 1.0 : ld.transform.scale[j];
        summary["coefficients"].push_back({{"name", ld.names[static_cast<std::size_t>(j)]},
                                           {"mean", c.mean / s},
                                           {"sd", c.sd / s},
                                           {"lower", c.lower / s},
                                           {"upper", c.upper / s},
                                           {"rhat", std::isfinite(c.rhat) ? nlohmann::json(c.rhat) : nlohmann::json()}});
    }
    if (samples.has_tau()) summary["tau_mean"] = samples.tau_draws.mean();
    const auto dir = prepare_out(a.out);
    std::ofstream chain(dir / "chain.csv");
    if (!chain) throw std::runtime_error("cannot write chain.csv");
    write_chain_csv(samples, ld.names, chain);
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    out << summary.dump(2) << '\n';
    return 0;
}

struct SimulateArgs {
    std::string scenario = "table2";
    std::vector<Index> p{20};
    std::vector<Index> n{100};
    double censor = 0.2;
    int reps = 100;
    std::optional<std::uint64_t> seed;
    bool bayes = false;
    Index M = 0;
    std::string methods;
    std::string out = ".";
};

int run_simulate(const SimulateArgs& a, int threads, std::ostream& out)
{
    if (!a.seed) throw UsageError("simulate requires --seed");
    const auto dir = prepare_out(a.out);
    nlohmann::json summary;
    std::ostringstream table;
    if (a.scenario == "table2") {
        SimulationConfig config;
        config.p = a.p.front();
        config.n = a.n.front();
        config.censor_rate = a.censor;
        config.replications = a.reps;
        config.seed = *a.seed;
        config.threads = threads;
        if (a.M > 0) config.M = a.M;
        if (!a.methods.empty()) config.methods = split_csv_line(a.methods);
        if (a.bayes)
            for (const auto& m : bayes_method_tags()) config.methods.push_back(m);
        const auto report = run_study(config);
        write_report_csv(report, "table2", table);
        summary = nlohmann::json::parse(report_json(report, "table2"));
    } else if (a.scenario == "bias") {
        table << "seed,index,beta0,beta_hat\n";
        int diverged = 0;
        for (int s = 0; s < a.reps; ++s) {
            Rng rng = make_rng(*a.seed, static_cast<std::uint64_t>(s) + 1);
            const auto demo = mple_bias_demo(a.p.front(), a.n.front(), rng);
            diverged += demo.diverged ? 1 : 0;
            for (Index j = 0; j < demo.beta0.size(); ++j)
                table << s << ',' << j + 1 << ',' << format_double(demo.beta0[j]) << ',' << format_double(demo.beta_hat[j]) << '\n';
        }
        summary = {{"scenario", "bias"}, {"p", a.p.front()}, {"n", a.n.front()}, {"reps", a.reps}, {"seed", *a.seed},
                   {"diverged", diverged}};
    } else if (a.scenario == "consistency") {
        ConsistencyConfig config;
        config.p_list = a.p;
        config.n_list = a.n;
        config.seeds = a.reps;
        config.seed = *a.seed;
        config.censor_rate = a.censor;
        config.threads = threads;
        if (a.M > 0) config.M = a.M;
        const auto cells = consistency_demo(config);
        write_consistency_csv(cells, table);
        summary = {{"scenario", "consistency"}, {"seeds", a.reps}, {"seed", *a.seed}, {"M", config.M}};
        for (const auto& c : cells)
            summary["cells"].push_back({{"p", c.p}, {"n", c.n}, {"cre_loss", c.cre_loss.mean}, {"wme_loss", c.wme_loss.mean}});
    } else {
        throw UsageError("unknown scenario '" + a.scenario + "'");
    }
    write_text(dir / "table.csv", table.str());
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    out << table.str();
    return 0;
}

void print_error(std::ostream& err, const std::string& kind, const std::string& message)
{
    err << nlohmann::json{{"error", message}, {"kind", kind}}.dump() << '\n';
}

} // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Cox regression with catalytic priors"};
    app.require_subcommand(1);
    int threads = default_thread_budget();
    app.add_option("--threads", threads, "worker threads (default: CATCOX_THREADS or 1)")->check(CLI::PositiveNumber);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "point estimate");
    add_data_options(fit_cmd, fit.data);
    fit_cmd->add_option("--method", fit.method)->required()->check(CLI::IsMember({"mple", "cre", "wme", "ridge", "lasso"}));
    fit_cmd->add_option("--tau", fit.tau, "total synthetic weight, or 'cv'");
    fit_cmd->add_option("--lambda", fit.lambda, "penalty, or 'cv'");
    fit_cmd->add_option("--synthetic-size", fit.M);
    fit_cmd->add_option("--seed", fit.seed);
    fit_cmd->add_option("--grid", fit.grid, "comma-separated CV grid");
    fit_cmd->add_option("--k", fit.K, "CV folds")->check(CLI::Range(2, 1000000));
    fit_cmd->add_option("--out", fit.out);
    fit_cmd->add_flag("--standardized-scale", fit.standardized, "report coefficients for the standardized covariates");

    CvArgs cv;
    auto* cv_cmd = app.add_subcommand("cv", "cross-validated partial likelihood over a grid");
    add_data_options(cv_cmd, cv.data);
    cv_cmd->add_option("--method", cv.method)->required()->check(CLI::IsMember({"cre", "wme", "ridge", "lasso"}));
    cv_cmd->add_option("--grid", cv.grid);
    cv_cmd->add_option("--k", cv.K)->check(CLI::Range(2, 1000000));
    cv_cmd->add_option("--seed", cv.seed)->required();
    cv_cmd->add_option("--synthetic-size", cv.M);
    cv_cmd->add_option("--out", cv.out);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate synthetic data");
    add_data_options(synth_cmd, synth.data);
    synth_cmd->add_option("--M", synth.M);
    synth_cmd->add_option("--seed", synth.seed)->required();
    synth_cmd->add_option("--out", synth.out);

    SampleArgs sample;
    auto* sample_cmd = app.add_subcommand("sample", "posterior sampling with a gamma-process baseline");
    add_data_options(sample_cmd, sample.data);
    sample_cmd->add_option("--prior", sample.prior)->check(CLI::IsMember({"catalytic", "adaptive", "gaussian"}));
    sample_cmd->add_option("--tau", sample.tau)->check(CLI::PositiveNumber);
    sample_cmd->add_option("--variance", sample.variance)->check(CLI::PositiveNumber);
    sample_cmd->add_option("--iters", sample.iterations)->check(CLI::PositiveNumber);
    sample_cmd->add_option("--burnin", sample.burnin)->check(CLI::NonNegativeNumber);
    sample_cmd->add_option("--chains", sample.chains)->check(CLI::PositiveNumber);
    sample_cmd->add_option("--seed", sample.seed)->required();
    sample_cmd->add_option("--intervals", sample.intervals, "baseline partition size J")->check(CLI::PositiveNumber);
    sample_cmd->add_option("--synthetic-size", sample.M);
    sample_cmd->add_option("--out", sample.out);
    sample_cmd->add_flag("--standardized-scale", sample.standardized);

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "simulation studies");
    sim_cmd->add_option("--scenario", sim.scenario)->check(CLI::IsMember({"table2", "bias", "consistency"}));
    sim_cmd->add_option("--p", sim.p, "dimension (comma list for consistency)")->delimiter(',');
    sim_cmd->add_option("--n", sim.n, "sample size (comma list for consistency)")->delimiter(',');
    sim_cmd->add_option("--censor", sim.censor)->check(CLI::Range(0.0, 1.0));
    sim_cmd->add_option("--reps", sim.reps)->check(CLI::NonNegativeNumber);
    sim_cmd->add_option("--seed", sim.seed);
    sim_cmd->add_flag("--bayes", sim.bayes, "add the posterior-mean rows");
    sim_cmd->add_option("--M", sim.M);
    sim_cmd->add_option("--methods", sim.methods, "comma-separated method tags");
    sim_cmd->add_option("--out", sim.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        print_error(err, "usage", e.what());
        return 2;
    }
    try {
        if (*fit_cmd) return run_fit(fit, threads, out);
        if (*cv_cmd) return run_cv(cv, threads, out);
        if (*synth_cmd) return run_synth(synth, out);
        if (*sample_cmd) return run_sample(sample, threads, out);
        return run_simulate(sim, threads, out);
    } catch (const UsageError& e) {
        print_error(err, "usage", e.what());
        return 2;
    } catch (const std::exception& e) {
        print_error(err, "runtime", e.what());
        return 1;
    }
}

} // namespace catcox
