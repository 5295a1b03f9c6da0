#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mwh/random.hpp"
#include "mwh/serialize.hpp"

namespace fs = std::filesystem;

namespace {

#ifndef MWH_CLI_PATH
#define MWH_CLI_PATH "mw-harmonics"
#endif

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    fs::path log = fs::temp_directory_path() / "mwh_cli_test.log";
    std::string cmd = std::string(MWH_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WEXITSTATUS(rc), ss.str()};
}

fs::path sandbox() {
    fs::path dir = fs::temp_directory_path() / "mwh_cli_sandbox";
    fs::create_directories(dir);
    return dir;
}

void write_config(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    out << j.dump(2);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("characteristic of identity weights is one everywhere") {
    fs::path dir = sandbox();
    write_config(dir / "id.json",
                 {{"seed", 1},
                  {"d", 1},
                  {"level", 3},
                  {"weights", nlohmann::json::array({{{"kind", "identity"}, {"n", 2}}})},
                  {"exponents", {{"p", {2.0}}, {"r", {1.0}}, {"s", "inf"}}},
                  {"cubes", "dyadic:2"}});
    auto res = run_cli("characteristic --kind roudenko --config " + (dir / "id.json").string() + " --out " +
                       dir.string());
    REQUIRE(res.exit_code == 0);
    std::ifstream csv(dir / "characteristic_roudenko.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "cube,value,slack");
    int rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        auto first = line.find(',');
        auto second = line.find(',', first + 1);
        CHECK(line.substr(first + 1, second - first - 1) == "1");
    }
    CHECK(rows == 7);
}

TEST_CASE("malformed exponents exit with code 1 and the named constraint") {
    fs::path dir = sandbox();
    write_config(dir / "bad.json",
                 {{"seed", 1},
                  {"d", 1},
                  {"level", 2},
                  {"weights", nlohmann::json::array({{{"kind", "identity"}, {"n", 1}},
                                                     {{"kind", "identity"}, {"n", 1}}})},
                  {"exponents", {{"p", {1.0, 1.0}}, {"r", {2.0, 1.0}}, {"s", "inf"}}},
                  {"cubes", "dyadic:1"}});
    auto res = run_cli("characteristic --kind roudenko --config " + (dir / "bad.json").string() + " --out " +
                       dir.string());
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("p >= r") != std::string::npos);
}

TEST_CASE("missing config exits with code 1") {
    auto res = run_cli("characteristic --kind roudenko --config /nonexistent.json");
    CHECK(res.exit_code == 1);
}

TEST_CASE("identical config and seed give byte-identical csv for any worker count") {
    fs::path dir = sandbox();
    write_config(dir / "max.json",
                 {{"seed", 11},
                  {"d", 1},
                  {"level", 4},
                  {"weights", nlohmann::json::array({{{"kind", "random_log_lipschitz"}, {"n", 2}, {"seed", 9}},
                                                     {{"kind", "random_log_lipschitz"}, {"n", 2}, {"seed", 10}}})},
                  {"fields", {{"kind", "random"}, {"n", {2, 2}}}},
                  {"rvec", {1.0, 1.0}},
                  {"cubes", "dyadic:4"}});
    auto a = run_cli("maximal --op weighted --config " + (dir / "max.json").string() + " --out " +
                     (dir / "t1").string() + " --threads 1");
    auto b = run_cli("maximal --op weighted --config " + (dir / "max.json").string() + " --out " +
                     (dir / "t2").string() + " --threads 2");
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    CHECK(slurp(dir / "t1" / "maximal_weighted.csv") == slurp(dir / "t2" / "maximal_weighted.csv"));
}

TEST_CASE("reduce emits a certified operator") {
    fs::path dir = sandbox();
    write_config(dir / "red.json",
                 {{"seed", 2},
                  {"d", 1},
                  {"level", 3},
                  {"weights", nlohmann::json::array({{{"kind", "random_log_lipschitz"}, {"n", 2}, {"seed", 4}}})},
                  {"p", 2.0}});
    auto res = run_cli("reduce --config " + (dir / "red.json").string() + " --out " + dir.string());
    REQUIRE(res.exit_code == 0);
    auto out = nlohmann::json::parse(slurp(dir / "reducing_operator.json"));
    CHECK(out.at("upper_slack").get<double>() <= 1e-3);
    CHECK(out.at("lower_margin").get<double>() >= 1.0 - 1e-3);
    CHECK(out.at("a").size() == 2);
}

TEST_CASE("serialization round trips") {
    using namespace mwh;
    // rational: dyadic as [mantissa, exp], thirds as num/den
    CHECK(rational_from_json(rational_to_json(Rational(3, 8))) == Rational(3, 8));
    CHECK(rational_from_json(rational_to_json(Rational(-5, 12))) == Rational(-5, 12));
    Cube q({Rational(1, 3), Rational(-1, 2)}, Rational(3, 4));
    CHECK(cube_from_json(cube_to_json(q)) == q);

    Rng rng(9);
    auto body = make_sum({make_ellipsoid(rng.spd_matrix(2, 0.5, 2.0)),
                          make_scaled(0.5, make_hull({rng.normal_vector(2), rng.normal_vector(2)}))});
    auto round = body_from_json(body_to_json(body));
    for (int t = 0; t < 32; ++t) {
        Eigen::VectorXd v = rng.unit_vector(2);
        CHECK(support(round, v) == doctest::Approx(support(body, v)).epsilon(1e-14));
    }
}

TEST_CASE("weight fields export to csv") {
    using namespace mwh;
    GridLayout layout(Cube({Rational(0)}, Rational(1)), 2);
    WeightSpec spec;
    spec.kind = WeightSpec::Kind::RandomLogLipschitz;
    spec.n = 2;
    spec.seed = 3;
    auto w = make_weight(spec, layout);
    auto csv = weight_field_csv(w);
    std::istringstream in(csv.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "cell,w00,w01,w10,w11");
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 4);
}

TEST_CASE("sparse-dominate reports a martingale family") {
    fs::path dir = sandbox();
    write_config(dir / "sd.json", {{"seed", 3},
                                   {"d", 1},
                                   {"level", 4},
                                   {"kernel", {{"name", "riesz"}, {"m", 1}, {"d", 1}}},
                                   {"fields", {{"kind", "constant"}, {"n", {1}}}}});
    auto res = run_cli("sparse-dominate --config " + (dir / "sd.json").string() + " --out " + dir.string());
    REQUIRE(res.exit_code == 0);
    auto out = nlohmann::json::parse(slurp(dir / "sparse_domination.json"));
    CHECK(out.at("martingale_half_sparse").get<bool>());
    CHECK(out.at("constant").get<double>() > 0.0);
    CHECK(!out.at("aborted").get<bool>());
}
