#include <gtest/gtest.h>

#include <sstream>

#include "hillriesz/cli.hpp"

using namespace hillriesz;
using namespace hillriesz::cli;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
  Json doc;
};

Run run(const std::string& command, const Json& config) {
  RunConfig cfg;
  apply_config(cfg, config);
  std::ostringstream out, err;
  Run r;
  r.code = execute(command, cfg, out, err);
  r.out = out.str();
  r.err = err.str();
  if (r.code == ok && cfg.format == "json" && cfg.out == "-") r.doc = Json::parse(r.out);
  return r;
}

Json cos4_config() {
  return Json::parse(R"({"potential": {"type": "trig", "coeffs": [[2, 1], [-2, 1]]}, "m_max": 10, "m_asym": 3, "K": 64,
                         "N_list": [4, 8, 16]})");
}

}  // namespace

TEST(Config, DefaultsAndOverlay) {
  RunConfig cfg;
  apply_config(cfg, Json::parse(R"({"bc": "antiperiodic", "m_max": 12, "N_list": [2, 4],
                                   "tolerances": {"tol_ode": 1e-9, "thresholds": {"gram_failure_slope": 0.6}},
                                   "lambda": "free", "output": {"format": "csv"}})"));
  EXPECT_EQ(cfg.bc, Bc::antiperiodic);
  EXPECT_EQ(cfg.m_max, 12);
  EXPECT_EQ(cfg.m_asym, 5);
  EXPECT_EQ(cfg.N_list, (std::vector<int>{2, 4}));
  EXPECT_EQ(cfg.tol_ode, 1e-9);
  EXPECT_EQ(cfg.thresholds.gram_failure_slope, 0.6);
  EXPECT_EQ(cfg.thresholds.gram_consistent_slope, 0.2);
  EXPECT_TRUE(cfg.free_lambda);
  EXPECT_EQ(cfg.format, "csv");
  validate(cfg);
  EXPECT_EQ(cfg.K, 2 * 12 + 16);
}

TEST(Config, UnknownKeysAreRejected) {
  RunConfig cfg;
  EXPECT_THROW(apply_config(cfg, Json::parse(R"({"m_maxx": 3})")), ConfigError);
  EXPECT_THROW(apply_config(cfg, Json::parse(R"({"tolerances": {"tol": 1}})")), ConfigError);
  EXPECT_THROW(apply_config(cfg, Json::parse(R"({"tolerances": {"thresholds": {"slope": 1}}})")), ConfigError);
  EXPECT_THROW(apply_config(cfg, Json::parse(R"([1, 2])")), ConfigError);
  EXPECT_THROW(apply_config(cfg, Json::parse(R"({"lambda": "guess"})")), ConfigError);
}

TEST(Config, InvariantsAreValidated) {
  auto bad = [](const char* text) {
    RunConfig cfg;
    apply_config(cfg, Json::parse(text));
    EXPECT_THROW(validate(cfg), ConfigError) << text;
  };
  bad(R"({"m_max": 5, "m_asym": 5})");
  bad(R"({"m_max": 10, "K": 20})");
  bad(R"({"N_list": [8, 8]})");
  bad(R"({"N_list": []})");
  bad(R"({"rho_grid": 512})");
  bad(R"({"tolerances": {"tol_ode": 1e-3}})");
  bad(R"({"output": {"format": "xml"}})");
  bad(R"({"potential": {"type": "trig", "coeffs": [[40, 1]]}, "m_max": 10, "K": 40})");
}

TEST(Config, ValidationFailureExitsWithTwo) {
  auto cfg = cos4_config();
  cfg["m_asym"] = 12;
  const auto r = run("spectrum", cfg);
  EXPECT_EQ(r.code, config_error);
  EXPECT_NE(r.err.find("m_asym"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(run("nonsense", cos4_config()).code, config_error);
}

TEST(PotentialSpec, AllFormsParse) {
  EXPECT_TRUE(parse_potential(Json::parse(R"({"type": "zero"})")).is_zero());
  const auto t = parse_potential(Json::parse(R"({"type": "trig", "coeffs": [[2, 1], [-2, 1, 0.5]]})"));
  EXPECT_EQ(t.coefficient(-2), cplx(1.0, 0.5));
  const auto p = parse_potential(Json::parse(R"({"type": "power", "alpha": 1, "c": [0, 2], "mmax": 4, "parity": "odd"})"));
  EXPECT_EQ(p.coefficient(5), cplx(0.0, 1.0));
  const auto a = parse_potential(Json::parse(R"({"type": "asym-power", "alpha": 1, "beta": 2, "mmax": 4})"));
  EXPECT_EQ(a.coefficient(-4), cplx(0.25));
  const auto o = parse_potential(Json::parse(R"({"type": "one-sided", "alpha": 2, "mmax": 3})"));
  EXPECT_EQ(o.coefficient(-2), cplx(0.0));
  const auto s = parse_potential(Json::parse(R"({"type": "samples", "values": [1, 2, [3, 1], 4], "kmax": 1})"));
  EXPECT_EQ(s.max_frequency(), 1);
  const auto w = parse_potential(Json::parse(R"({"type": "sawtooth", "L": 1024, "period": 2, "kmax": 8})"));
  EXPECT_EQ(w.max_frequency(), 8);
}

TEST(PotentialSpec, MalformedSpecsAreConfigErrors) {
  for (const char* text : {R"({"type": "nonsense"})", R"({"coeffs": []})", R"({"type": "trig"})",
                           R"({"type": "trig", "coeffs": [[1.5, 1]]})", R"({"type": "power", "alpha": 1})",
                           R"({"type": "power", "alpha": "x", "mmax": 3})", R"({"type": "power", "alpha": 1, "mmax": 3, "parity": "even-ish"})",
                           R"({"type": "samples", "values": [1, 2, 3]})", R"({"type": "trig", "coeffs": [[1, 1]], "real": true})"})
    EXPECT_THROW(parse_potential(Json::parse(text)), ConfigError) << text;
}

TEST(Coeffs, CosineRowAndRatios) {
  const auto r = run("coeffs", cos4_config());
  ASSERT_EQ(r.code, ok);
  const auto& rows = r.doc["result"]["coefficients"];
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows[0]["m"], 1);
  EXPECT_EQ(rows[0]["n"], 2);
  EXPECT_EQ(rows[0]["q_plus_re"], 1.0);
  EXPECT_EQ(rows[0]["q_minus_re"], 1.0);
  EXPECT_EQ(rows[0]["ratio"], 1.0);
  EXPECT_TRUE(rows[1]["ratio"].is_null());

  auto cfg = cos4_config();
  cfg["potential"] = Json::parse(R"({"type": "asym-power", "alpha": 1, "beta": 2, "mmax": 10})");
  const auto a = run("coeffs", cfg);
  for (const auto& row : a.doc["result"]["coefficients"])
    EXPECT_NEAR(row["ratio"].get<double>(), row["m"].get<double>(), 1e-12);
}

TEST(Coeffs, ZeroPotentialRowsAreZero) {
  const auto r = run("coeffs", Json::parse(R"({"m_max": 6, "m_asym": 2})"));
  ASSERT_EQ(r.code, ok);
  for (const auto& row : r.doc["result"]["coefficients"]) {
    EXPECT_EQ(row["q_plus_re"], 0.0);
    EXPECT_EQ(row["q_minus_im"], 0.0);
  }
}

TEST(Spectrum, ZeroPotentialColumnsAreFree) {
  const auto r = run("spectrum", Json::parse(R"({"m_max": 6, "m_asym": 2})"));
  ASSERT_EQ(r.code, ok);
  for (const auto& row : r.doc["result"]["pairs"]) {
    const int m = row["m"];
    EXPECT_NEAR(row["lambda_re"].get<double>(), 4.0 * pi * pi * m * m, 1e-9);
    EXPECT_EQ(row["class"], "DoubleGeometric2");
  }
}

TEST(Oracle, CosineAgreesWithGalerkin) {
  const auto r = run("oracle", cos4_config());
  ASSERT_EQ(r.code, ok);
  EXPECT_LE(r.doc["result"]["overall_deviation"].get<double>(), 1e-8);
  EXPECT_TRUE(r.doc["result"]["flagged"].empty());
  EXPECT_EQ(r.doc["result"]["roots"].size(), 20u);
}

TEST(Criterion, CosineHitsTheHypothesisGateAndStrictModeExitsWithFour) {
  auto r = run("criterion", cos4_config());
  ASSERT_EQ(r.code, ok);
  EXPECT_EQ(r.doc["result"]["status"], "not-applicable");
  EXPECT_EQ(r.doc["result"]["verdict"], "indeterminate");
  auto cfg = cos4_config();
  cfg["strict"] = true;
  r = run("criterion", cfg);
  EXPECT_EQ(r.code, strict_indeterminate);
  EXPECT_FALSE(r.out.empty());
}

TEST(Asymptotics, CosineClosedFormRowAtFreeLambda) {
  auto cfg = cos4_config();
  cfg["lambda"] = "free";
  const auto r = run("asymptotics", cfg);
  ASSERT_EQ(r.code, ok);
  bool seen = false;
  for (const auto& row : r.doc["result"]["entries"]) {
    if (row["m"] != 3) continue;
    seen = true;
    EXPECT_NEAR(row["a1_re"].get<double>(), 1.0 / (64.0 * pi * pi), 1e-15);
    EXPECT_NEAR(row["a1p_re"].get<double>(), 1.0 / (64.0 * pi * pi), 1e-15);
    EXPECT_NEAR(row["a1_integral_re"].get<double>(), 1.0 / (64.0 * pi * pi), 1e-6);
  }
  EXPECT_TRUE(seen);
  for (const auto& row : r.doc["result"]["I_decomposition"]) EXPECT_LE(row["identity_residual"].get<double>(), 1e-10);
  EXPECT_EQ(r.doc["result"]["harmonic_sums"].size(), 8u);
}

TEST(Asymptotics, ZeroPotentialTablesAreZero) {
  const auto r = run("asymptotics", Json::parse(R"({"m_max": 6, "m_asym": 2})"));
  ASSERT_EQ(r.code, ok);
  for (const auto& row : r.doc["result"]["entries"]) {
    EXPECT_EQ(row["a1_re"], 0.0);
    EXPECT_EQ(row["R2"], 0.0);
    EXPECT_TRUE(row["deviation_ratio"].is_null());
  }
  EXPECT_FALSE(r.doc["result"]["trends"]["deviation_ratio"]["applicable"].get<bool>());
}

TEST(Gram, ZeroPotentialSeriesIsOne) {
  const auto r = run("gram", Json::parse(R"({"m_max": 20, "m_asym": 3, "N_list": [8, 16, 32]})"));
  ASSERT_EQ(r.code, ok);
  for (const auto& row : r.doc["result"]["series"]) EXPECT_NEAR(row["cond"].get<double>(), 1.0, 1e-12);
}

TEST(Gram, OversizedSectionIsAConfigError) {
  EXPECT_EQ(run("gram", Json::parse(R"({"m_max": 6, "m_asym": 3, "N_list": [8, 16]})")).code, config_error);
}

TEST(Failures, PairingAmbiguityExitsWithThree) {
  const auto r =
      run("spectrum", Json::parse(R"({"potential": {"type": "trig", "coeffs": [[2, 400], [-2, 400]]}, "m_max": 4, "m_asym": 2})"));
  EXPECT_EQ(r.code, numerical_failure);
  EXPECT_NE(r.err.find("pairing"), std::string::npos);
}

TEST(Document, EmbedsVersionAndResolvedConfig) {
  const auto r = run("rho", cos4_config());
  ASSERT_EQ(r.code, ok);
  EXPECT_EQ(r.doc["tool"], "hillriesz");
  EXPECT_EQ(r.doc["version"], version);
  EXPECT_EQ(r.doc["command"], "rho");
  EXPECT_EQ(r.doc["config"]["K"], 64);
  EXPECT_EQ(r.doc["config"]["potential"]["type"], "trig");
  EXPECT_EQ(r.doc["config"]["tolerances"]["thresholds"]["cluster_factor"], 100.0);
  // the embedded config reproduces the run
  RunConfig again;
  Json embedded = r.doc["config"];
  apply_config(again, embedded);
  std::ostringstream out, err;
  ASSERT_EQ(execute("rho", again, out, err), ok);
  EXPECT_EQ(out.str(), r.out);
}

TEST(Document, OutputIsByteIdenticalAcrossRuns) {
  for (const char* command : {"spectrum", "criterion", "asymptotics"}) {
    const auto a = run(command, cos4_config());
    const auto b = run(command, cos4_config());
    EXPECT_EQ(a.out, b.out) << command;
  }
}

TEST(Document, CsvProjection) {
  auto cfg = cos4_config();
  cfg["output"] = Json{{"format", "csv"}};
  const auto r = run("report", cfg);
  ASSERT_EQ(r.code, ok);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, std::string("# hillriesz ") + version + " report");
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("# config {", 0), 0u);
  std::vector<std::string> sections;
  while (std::getline(lines, line))
    if (line.rfind("# ", 0) == 0) sections.push_back(line.substr(2));
  const std::vector<std::string> expect{"coeffs.coefficients", "rho.rho",        "spectrum.pairs",
                                        "spectrum.anomalies",  "oracle.oracle",  "criterion.criterion",
                                        "asymptotics.entries", "asymptotics.harmonic_sums", "asymptotics.I_decomposition",
                                        "gram.series"};
  EXPECT_EQ(sections, expect);
  EXPECT_NE(r.out.find("\nm,n,q_plus_re,q_plus_im,q_minus_re,q_minus_im,ratio\n1,2,1,0,1,0,1\n"), std::string::npos);
}

TEST(Document, OutputFileIsWritten) {
  auto cfg = cos4_config();
  const std::string path = ::testing::TempDir() + "hillriesz_coeffs.json";
  cfg["output"] = Json{{"path", path}};
  const auto r = run("coeffs", cfg);
  EXPECT_EQ(r.code, ok);
  std::ifstream f(path);
  const Json doc = Json::parse(f);
  EXPECT_EQ(doc["command"], "coeffs");
}

TEST(Serialization, SeventeenDigitFloatsAndNulls) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "null");
  std::ostringstream os;
  write_json(Json{{"a", 0.5}, {"b", Json::array({1, 2})}, {"c", Json::array({Json{{"d", nullptr}}})}, {"e", Json::object()}}, os);
  EXPECT_EQ(os.str(), "{\n  \"a\": 0.5,\n  \"b\": [1, 2],\n  \"c\": [\n    {\n      \"d\": null\n    }\n  ],\n  \"e\": {}\n}");
  EXPECT_EQ(csv_cell(Json("a,b")), "\"a,b\"");
  EXPECT_EQ(csv_cell(Json(nullptr)), "");
  EXPECT_EQ(csv_cell(Json(true)), "true");
}

TEST(Exit, CodesByExceptionType) {
  EXPECT_EQ(exit_code_for(ConfigError("x")), config_error);
  EXPECT_EQ(exit_code_for(TruncationTooSmall(1, 2)), config_error);
  EXPECT_EQ(exit_code_for(FrequencyOutOfRange(9)), config_error);
  EXPECT_EQ(exit_code_for(PairingAmbiguity({3})), numerical_failure);
  EXPECT_EQ(exit_code_for(SolverFailure("x", 1.0)), numerical_failure);
  EXPECT_EQ(exit_code_for(StiffnessError("x")), numerical_failure);
  EXPECT_EQ(exit_code_for(DiscAnomaly(1, 3)), numerical_failure);
}
