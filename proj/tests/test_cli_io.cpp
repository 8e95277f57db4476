#include "doctest.h"

#include "catcox/cli_io.hpp"
#include "test_support.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace catcox;
using catcox::testing::random_data;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("catcox_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run(std::vector<std::string> args, std::string* err_text = nullptr, std::string* out_text = nullptr)
{
    args.insert(args.begin(), "catcox");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    if (err_text) *err_text = err.str();
    if (out_text) *out_text = out.str();
    return code;
}

nlohmann::json read_json(const fs::path& p)
{
    std::ifstream f(p);
    return nlohmann::json::parse(f);
}

const char* kSchema = R"({"columns": [
  {"name": "days", "kind": "time", "scale": 0.5},
  {"name": "state", "kind": "status", "event": ["2"]},
  {"name": "age", "kind": "continuous", "standardize": true},
  {"name": "sex", "kind": "binary", "levels": ["m", "f"]},
  {"name": "grade", "kind": "categorical", "levels": ["0", "0.5", "1"], "labels": ["g_half", "g_one"]},
  {"name": "flag", "kind": "binary"}
]})";

const char* kCsv = "id,days,state,age,sex,grade,flag\n"
                   "1,10,2,50.5,f,0.0,1\n"
                   "2,20,0,61,m,0.5,0\n"
                   "3,30,1,NA,m,1.0,0\n"
                   "4,40,2,47,\"f\",1,1\n"
                   "5,,2,55,m,0,0\n"
                   "6,60,2,70,m,0.50,1\n";

} // namespace

TEST_CASE("schema-driven loading")
{
    std::istringstream in(kCsv);
    const auto ld = load_dataset(in, DatasetSchema::from_json(nlohmann::json::parse(kSchema)));
    CHECK(ld.rows_read == 6);
    CHECK(ld.rows_dropped == 2);
    REQUIRE(ld.data.rows() == 4);
    REQUIRE(ld.data.cols() == 5);
    CHECK(ld.names == std::vector<std::string>{"age", "sex=f", "g_half", "g_one", "flag"});
    CHECK(ld.data.times()[0] == 5.0);
    CHECK(ld.data.times()[3] == 30.0);
    CHECK(ld.data.status()[0]);
    CHECK_FALSE(ld.data.status()[1]);
    const Mat<double>& x = ld.data.covariates();
    CHECK(x.col(1) == Vec<double>((Vec<double>(4) << 1, 0, 1, 0).finished()));
    CHECK(x.col(2) == Vec<double>((Vec<double>(4) << 0, 1, 0, 1).finished()));
    CHECK(x.col(3) == Vec<double>((Vec<double>(4) << 0, 0, 1, 0).finished()));

    // direct recomputation of the standardization
    const double mean = x.col(0).mean();
    const double var = (x.col(0).array() - mean).square().sum() / 3.0;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::abs(var - 1.0) < 1e-12);
    const Vec<double> raw = (Vec<double>(4) << 50.5, 61, 47, 70).finished();
    CHECK(std::abs(ld.transform.center[0] - raw.mean()) < 1e-12);
    Vec<double> unit = Vec<double>::Ones(5);
    CHECK(ld.to_original_scale(unit)[0] == doctest::Approx(1.0 / ld.transform.scale[0]));

    REQUIRE(ld.generator.groups.size() == 4);
    CHECK(ld.generator.groups[2].strategy == CovariateStrategy::categorical_uniform);
    CHECK(ld.generator.groups[2].columns == std::vector<Index>{2, 3});
}

TEST_CASE("loading errors")
{
    const auto schema = DatasetSchema::from_json(nlohmann::json::parse(kSchema));
    std::istringstream empty("");
    CHECK_THROWS_AS(load_dataset(empty, schema), std::runtime_error);

    std::istringstream bad("id,days,state,age,sex,grade,flag\n1,10,2,abc,f,0,1\n");
    try {
        load_dataset(bad, schema);
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("'age'") != std::string::npos);
    }
    std::istringstream zero_time("id,days,state,age,sex,grade,flag\n1,0,2,50,f,0,1\n");
    CHECK_THROWS_AS(load_dataset(zero_time, schema), std::runtime_error);
    std::istringstream all_missing("id,days,state,age,sex,grade,flag\n1,NA,2,50,f,0,1\n");
    CHECK_THROWS_AS(load_dataset(all_missing, schema), std::runtime_error);
    std::istringstream level("id,days,state,age,sex,grade,flag\n1,3,2,50,x,0,1\n2,4,2,51,f,0,1\n");
    CHECK_THROWS_AS(load_dataset(level, schema), std::runtime_error);

    CHECK_THROWS_AS(DatasetSchema::from_json(nlohmann::json::parse(R"({"columns": [{"name": "t", "kind": "time"}]})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_grid("1,0.5"), std::invalid_argument);
    CHECK(parse_grid("0.5,1,4") == std::vector<double>{0.5, 1, 4});
}

TEST_CASE("CSV round trips are exact")
{
    const auto dir = scratch("roundtrip");
    const auto d = random_data(40, 3, 9);
    const std::vector<std::string> names{"a", "b", "c"};
    {
        std::ofstream f(dir / "d.csv");
        write_survival_csv(d, names, f);
    }
    const auto back = load_dataset((dir / "d.csv").string());
    CHECK(back.data.covariates() == d.covariates());
    CHECK(back.data.times() == d.times());
    CHECK((back.data.status() == d.status()).all());
    CHECK(back.names == names);

    const auto synth = make_synthetic(d, 25, CovariateGenSchema::from_data(d), 3);
    std::stringstream s;
    write_synthetic_csv(synth, s);
    const auto synth_back = read_synthetic_csv(s);
    CHECK(synth_back.covariates == synth.covariates);
    CHECK(synth_back.times == synth.times);
}

TEST_CASE("CLI results equal the library calls")
{
    const auto dir = scratch("cli");
    const auto d = random_data(120, 20, 4);
    std::vector<std::string> names;
    for (int j = 1; j <= 20; ++j) names.push_back("x" + std::to_string(j));
    {
        std::ofstream f(dir / "d.csv");
        write_survival_csv(d, names, f);
    }
    const std::string data = (dir / "d.csv").string();
    REQUIRE(run({"fit", "--data", data, "--method", "wme", "--tau", "20", "--seed", "5", "--out", (dir / "wme").string()}) == 0);
    const auto summary = read_json(dir / "wme" / "summary.json");
    const auto synth = make_synthetic(d, default_synthetic_size(20), CovariateGenSchema::from_data(d), 5);
    const auto lib = wme(d, synth, 20.0);
    for (Index j = 0; j < 20; ++j) CHECK(summary["coefficients"][static_cast<std::size_t>(j)]["estimate"].get<double>() == lib.beta[j]);

    REQUIRE(run({"fit", "--data", data, "--method", "mple", "--out", (dir / "mple").string()}) == 0);
    const auto ms = read_json(dir / "mple" / "summary.json");
    const auto m = mple(d);
    CHECK(ms["coefficients"][3]["estimate"].get<double>() == m.beta[3]);
    CHECK(ms["coefficients"][3].contains("lower"));

    REQUIRE(run({"synth", "--data", data, "--M", "50", "--seed", "5", "--out", (dir / "synth").string()}) == 0);
    std::ifstream sf(dir / "synth" / "synthetic.csv");
    const auto synth_file = read_synthetic_csv(sf);
    CHECK(synth_file.covariates == make_synthetic(d, 50, CovariateGenSchema::from_data(d), 5).covariates);
}

TEST_CASE("CLI usage errors are machine readable")
{
    const auto dir = scratch("usage");
    const auto d = random_data(30, 2, 1);
    {
        std::ofstream f(dir / "d.csv");
        write_survival_csv(d, {"a", "b"}, f);
    }
    const std::string data = (dir / "d.csv").string();
    std::string err;
    CHECK(run({"simulate", "--scenario", "table2", "--p", "20", "--reps", "1"}, &err) == 2);
    const auto j = nlohmann::json::parse(err);
    CHECK(j["kind"] == "usage");
    CHECK(j["error"].get<std::string>().find("--seed") != std::string::npos);

    CHECK(run({"fit", "--data", data, "--method", "ridge", "--tau", "3"}, &err) == 2);
    CHECK(nlohmann::json::parse(err)["kind"] == "usage");
    CHECK(run({"fit", "--data", data, "--method", "mple", "--bogus"}, &err) == 2);
    CHECK(run({"fit", "--data", data, "--method", "cre", "--tau", "cv"}, &err) == 2);
    CHECK(run({"frobnicate"}, &err) == 2);
    CHECK(run({"fit", "--data", (dir / "missing.csv").string(), "--method", "mple"}, &err) == 2);
    std::ofstream(dir / "empty.csv").close();
    CHECK(run({"fit", "--data", (dir / "empty.csv").string(), "--method", "mple", "--out", dir.string()}, &err) == 1);
    CHECK(nlohmann::json::parse(err)["kind"] == "runtime");
}

TEST_CASE("CLI simulation emits the MPLE row")
{
    const auto dir = scratch("simulate");
    std::string out;
    REQUIRE(run({"simulate", "--scenario", "table2", "--p", "20", "--censor", "0.2", "--reps", "100", "--seed", "7",
                 "--methods", "mple", "--out", dir.string()},
                nullptr, &out) == 0);
    std::ifstream f(dir / "table.csv");
    std::stringstream text;
    text << f.rdbuf();
    CHECK(text.str().find("table2,mple,squared_error,") != std::string::npos);
    CHECK(out == text.str());
    CHECK(read_json(dir / "summary.json")["methods"]["mple"]["squared_error"]["count"] == 100);
}

TEST_CASE("CLI sampling writes one chain row per kept draw")
{
    const auto dir = scratch("sample");
    const auto d = random_data(60, 2, 3);
    {
        std::ofstream f(dir / "d.csv");
        write_survival_csv(d, {"a", "b"}, f);
    }
    REQUIRE(run({"sample", "--data", (dir / "d.csv").string(), "--prior", "adaptive", "--iters", "300", "--burnin",
                 "100", "--chains", "2", "--seed", "4", "--intervals", "5", "--out", dir.string()}) == 0);
    std::ifstream f(dir / "chain.csv");
    std::string line;
    std::getline(f, line);
    CHECK(line == "chain,iteration,beta_a,beta_b,h_1,h_2,h_3,h_4,h_5,tau");
    int rows = 0;
    while (std::getline(f, line)) ++rows;
    CHECK(rows == 400);
    const auto s = read_json(dir / "summary.json");
    CHECK(s["coefficients"].size() == 2);
    CHECK(s["tau_mean"].get<double>() > 0);
}
