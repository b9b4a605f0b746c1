#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "ssnsm/simulation.hpp"

using namespace ssnsm;
using namespace ssnsm::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ssnsm_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string ingest_error(const fs::path& path, const ColumnMapping& m = {}) {
  try {
    ingest_csv(path, m);
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

// Small validator covering the keywords the schema uses.
void validate(const json& v, const json& s, const std::string& where, std::vector<std::string>& errors) {
  auto fail = [&](const std::string& msg) { errors.push_back(where + ": " + msg); };
  if (s.contains("type")) {
    const std::string t = s["type"];
    const bool ok = (t == "object" && v.is_object()) || (t == "array" && v.is_array()) ||
                    (t == "number" && v.is_number()) ||
                    (t == "integer" && v.is_number_integer()) ||
                    (t == "boolean" && v.is_boolean()) || (t == "string" && v.is_string());
    if (!ok) return fail("expected " + t);
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (s.contains("minimum") && x < s["minimum"].get<double>()) fail("below minimum");
    if (s.contains("maximum") && x > s["maximum"].get<double>()) fail("above maximum");
    if (s.contains("exclusiveMinimum") && x <= s["exclusiveMinimum"].get<double>()) fail("not above exclusiveMinimum");
  }
  if (v.is_object()) {
    for (const auto& r : s.value("required", json::array()))
      if (!v.contains(r.get<std::string>())) fail("missing " + r.get<std::string>());
    const json props = s.value("properties", json::object());
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (props.contains(it.key())) validate(it.value(), props[it.key()], where + "." + it.key(), errors);
      else if (s.contains("additionalProperties") && !s["additionalProperties"].get<bool>())
        fail("unexpected property " + it.key());
    }
  }
  if (v.is_array()) {
    if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) fail("too few items");
    if (s.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i) validate(v[i], s["items"], where + "[" + std::to_string(i) + "]", errors);
  }
}

SurvivalDataset small_data(int n = 120) {
  ScenarioSpec spec;
  spec.n = n;
  spec.error = ErrorFamily::skew_t(0.0, 1.0, -15.0, 3.0);
  spec.seed = 31;
  return generate_replicate(spec, 0);
}

}  // namespace

TEST_CASE("CSV numbers use six significant digits") {
  CHECK(format_csv_number(3.14159265) == "3.14159");
  CHECK(format_csv_number(0.000123456789) == "0.000123457");
  CHECK(format_csv_number(1234567.0) == "1.23457e+06");
  CHECK(format_csv_number(std::nan("")) == "NA");
}

TEST_CASE("dataset CSV round-trips exactly") {
  const fs::path dir = temp_dir("roundtrip");
  const SurvivalDataset d = small_data();
  write_dataset_csv(dir / "d.csv", d, {"x1", "x2"});
  const IngestResult r = ingest_csv(dir / "d.csv", {});
  CHECK(r.dropped == 0);
  CHECK(r.covariate_names == std::vector<std::string>{"x1", "x2"});
  CHECK(r.data.times == d.times);
  CHECK(r.data.deltas == d.deltas);
  CHECK(r.data.covariates == d.covariates);
}

TEST_CASE("ingest maps columns, handles quotes and drops rows with missing values") {
  const fs::path dir = temp_dir("ingest");
  const fs::path p = write_text(dir / "a.csv",
                                "id,\"surv time\",dead,age,score\n"
                                "1,10,1,50,3\n"
                                "2,12,0,NA,4\n"
                                "\n"
                                "3,\"7.5\",1,61,\n"
                                "4,20,1,70,1\r\n"
                                "5,4,0,44,2\n"
                                "6,9,1,58,5\n");
  ColumnMapping m{"surv time", "dead", {"age"}};
  const IngestResult r = ingest_csv(p, m);
  CHECK(r.dropped == 1);
  CHECK(r.data.size() == 5);
  CHECK(r.data.times[1] == 7.5);
  CHECK(r.data.covariates(1, 0) == 61.0);
  m.covariates = {"age", "score"};
  CHECK(ingest_csv(p, m).dropped == 2);
}

TEST_CASE("ingest errors name the offending line") {
  const fs::path dir = temp_dir("errors");
  CHECK(ingest_error(write_text(dir / "a.csv", "time,status,x\n1,1,2\n2,1\n")).find(":3:") != std::string::npos);
  CHECK(ingest_error(write_text(dir / "b.csv", "time,status,x\n1,1,2\n0,1,3\n")).find(":3: non-positive time") != std::string::npos);
  CHECK(ingest_error(write_text(dir / "c.csv", "time,status,x\n1,2,2\n")).find(":2: status") != std::string::npos);
  CHECK(ingest_error(write_text(dir / "d.csv", "time,status,x\n1,1,abc\n")).find(":2: non-numeric") != std::string::npos);
  CHECK(ingest_error(write_text(dir / "e.csv", "time,status,x\n1,0,1\n2,0,2\n")).find("no events") != std::string::npos);
  CHECK(ingest_error(write_text(dir / "f.csv", "t,status,x\n1,1,1\n")).find("no column 'time'") != std::string::npos);
  CHECK(ingest_error(dir / "missing.csv").find("cannot open") != std::string::npos);
}

TEST_CASE("bundled synthetic lung data has the documented shape") {
  const IngestResult r = ingest_csv(fs::path(SSNSM_DATA_DIR) / "synthetic_lung.csv", {});
  CHECK(r.data.size() == 167);
  CHECK(r.dropped == 61);
  CHECK(r.covariate_names.size() == 7);
  const double cens = 1.0 - static_cast<double>(r.data.num_events()) / static_cast<double>(r.data.size());
  CHECK(cens == doctest::Approx(0.281).epsilon(0.02));
}

TEST_CASE("fitted model JSON follows the schema") {
  std::ifstream in(fs::path(SSNSM_SCHEMA_DIR) / "fitted_model.schema.json");
  const json schema = json::parse(in);
  const FittedModel m = fit_ssnsm(small_data());
  const json j = model_to_json(m);
  std::vector<std::string> errors;
  validate(j, schema, "$", errors);
  for (const auto& e : errors) FAIL_CHECK(e);
  CHECK(j["theta"]["beta"].size() == 2);
  CHECK(j["q"]["support"].size() == m.q.size());
  CHECK(j["loglik_trace"].size() == m.loglik_trace.size());
  // The validator itself rejects bad documents.
  json bad = j;
  bad["q"]["weights"][0] = -1.0;
  bad.erase("converged");
  errors.clear();
  validate(bad, schema, "$", errors);
  CHECK(errors.size() == 2);
}

TEST_CASE("fit command writes deterministic tables") {
  const fs::path dir = temp_dir("fit");
  write_dataset_csv(dir / "d.csv", small_data(), {"x1", "x2"});
  RunConfig c;
  c.input = dir / "d.csv";
  c.methods = {Method::normal, Method::gehan, Method::gee};
  c.bootstrap = 10;
  c.workers = 2;
  c.profiles = {"a:0,0", "1,1"};
  c.curve_points = 5;
  std::ostringstream log, err;
  c.out = dir / "run1";
  CHECK(cmd_fit(c, log, err) == 0);
  c.out = dir / "run2";
  c.workers = 1;
  CHECK(cmd_fit(c, log, err) == 0);
  for (const char* f : {"coefficients.csv", "ibs.csv", "survival_curves.csv", "fit.json"})
    CHECK(read_text(dir / "run1" / f) == read_text(dir / "run2" / f));
  const std::string coef = read_text(dir / "run1" / "coefficients.csv");
  CHECK(coef.rfind("method,term,estimate,se,table\n", 0) == 0);
  CHECK(coef.find("gehan,x2,") != std::string::npos);
  const std::string curves = read_text(dir / "run1" / "survival_curves.csv");
  CHECK(curves.find("normal,a,") != std::string::npos);
  CHECK(curves.find("normal,profile2,") != std::string::npos);
  const json j = json::parse(read_text(dir / "run1" / "fit.json"));
  CHECK(j["methods"].size() == 3);
  CHECK(j["methods"][0]["coefficients"].size() == 3);
}

TEST_CASE("evaluate and predict commands") {
  const fs::path dir = temp_dir("eval");
  write_dataset_csv(dir / "d.csv", small_data(), {"x1", "x2"});
  RunConfig c;
  c.input = dir / "d.csv";
  c.methods = {Method::normal};
  c.ibs_grid = 20;
  c.out = dir / "out";
  std::ostringstream log, err;
  CHECK(cmd_evaluate(c, log, err) == 0);
  CHECK(read_text(dir / "out" / "brier.csv").rfind("method,t_star,brier\n", 0) == 0);
  CHECK(cmd_predict(c, log, err) == 0);
  CHECK(read_text(dir / "out" / "predictions.csv").find("normal,119,") != std::string::npos);
}

TEST_CASE("simulate command writes the summary table") {
  const fs::path dir = temp_dir("sim");
  RunConfig c;
  c.command = Command::simulate;
  c.preset = "sim1/n200/tau4/normal";
  c.reps = 3;
  c.methods = {Method::normal, Method::gee};
  c.out = dir;
  std::ostringstream log, err;
  CHECK(run(c, log, err) == 0);
  const std::string t = read_text(dir / "simulation.csv");
  CHECK(t.rfind("method,coefficient,mse,bias,failures\n", 0) == 0);
  CHECK(t.find("gee,beta2,") != std::string::npos);
  c.preset.clear();
  CHECK(run(c, log, err) != 0);
}

TEST_CASE("argument parsing, config files and the seed fallback") {
  const fs::path dir = temp_dir("args");
  write_dataset_csv(dir / "d.csv", small_data(), {"x1", "x2"});
  const std::string out = (dir / "out").string();
  const fs::path cfg = write_text(dir / "run.ini", "command=fit\nmethods=normal\nbootstrap=0\nout=" + out + "\n");
  const std::string input = (dir / "d.csv").string();
  {
    const char* argv[] = {"ssnsm-aft", "--config", cfg.c_str(), "--input", input.c_str()};
    CHECK(main_entry(5, const_cast<char**>(argv)) == 0);
    CHECK(fs::exists(dir / "out" / "coefficients.csv"));
  }
  {
    ::setenv("SSNSM_AFT_SEED", "123", 1);
    const char* argv[] = {"ssnsm-aft", "--config", cfg.c_str(), "--input", input.c_str()};
    CHECK(main_entry(5, const_cast<char**>(argv)) == 0);
    CHECK(json::parse(read_text(dir / "out" / "fit.json"))["seed"] == 123);
    ::setenv("SSNSM_AFT_SEED", "x", 1);
    CHECK(main_entry(5, const_cast<char**>(argv)) == 2);
    ::unsetenv("SSNSM_AFT_SEED");
  }
  {
    const char* argv[] = {"ssnsm-aft", "--command", "fit", "--input", input.c_str(), "--methods", "bogus"};
    CHECK(main_entry(7, const_cast<char**>(argv)) == 2);
  }
  {
    const char* argv[] = {"ssnsm-aft", "--command", "explode"};
    CHECK(main_entry(3, const_cast<char**>(argv)) != 0);
  }
}
