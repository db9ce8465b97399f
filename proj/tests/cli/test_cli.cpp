#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "../support.hpp"

#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

const fs::path& work() {
  static const fs::path dir = testsupport::scratch_dir("cli");
  return dir;
}

Run cli(const std::string& args) {
  const fs::path o = work() / "stdout.txt", e = work() / "stderr.txt";
  const std::string cmd = std::string("'") + LEAFPIPE_CLI + "' " + args + " >'" + o.string() + "' 2>'" + e.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testsupport::read_file(o);
  r.err = testsupport::read_file(e);
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Small generated dataset and a config sized for it, built once.
const fs::path& dataset() {
  static const fs::path root = [] {
    const Run r = cli("--seed 3 --out " + q(work() / "synth") + " synth-data --per-class 15 --side 32");
    REQUIRE(r.code == 0);
    return work() / "synth" / "images";
  }();
  return root;
}

std::string cfg() {
  const fs::path p = work() / "config.json";
  if (!fs::exists(p)) testsupport::write_text(p, R"({"image_size": 32, "dicdm_image_size": 16})");
  return "--config " + q(p) + " ";
}

bool one_error_line(const Run& r, const std::string& kind) {
  return r.err.rfind("error: " + kind + ":", 0) == 0 && r.err.find('\n') == r.err.size() - 1;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  Run r = cli("--bogus-flag synth-data");
  CHECK(r.code == 2);
  CHECK(one_error_line(r, "usage"));
  r = cli("frobnicate");
  CHECK(r.code == 2);
  CHECK(one_error_line(r, "usage"));
  CHECK(cli("--jobs 0 ingest .").code == 2);
  CHECK(cli("reduce").code == 2);
  CHECK(cli("").code == 2);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("runtime errors exit with 1 and one line") {
  Run r = cli("ingest " + q(work() / "does-not-exist"));
  CHECK(r.code == 1);
  CHECK(one_error_line(r, "ingest"));
  r = cli("train " + q(work() / "missing.csv") + " --out " + q(work() / "m.json"));
  CHECK(r.code == 1);
  CHECK(one_error_line(r, "io"));
  testsupport::write_text(work() / "broken.json", "{\"folds\": ");
  r = cli("--config " + q(work() / "broken.json") + " --print-config");
  CHECK(r.code == 1);
  CHECK(one_error_line(r, "parse"));
}

TEST_CASE("print-config reflects overrides") {
  const Run r = cli(cfg() + "--seed 11 --print-config");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["seed"] == 11);
  CHECK(j["image_size"] == 32);
  CHECK(j["folds"] == 10);
}

TEST_CASE("ingest and segment") {
  Run r = cli("ingest " + q(dataset()));
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.dump().find("sheath_blight") != std::string::npos);

  const fs::path img = dataset() / "brown_spot" / "brown_spot_0000.png";
  r = cli(cfg() + "--out " + q(work() / "seg") + " segment " + q(img) + " --overlay");
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out).contains("threshold"));
  CHECK(fs::exists(work() / "seg" / "brown_spot_0000_mask.png"));
  CHECK(fs::exists(work() / "seg" / "brown_spot_0000_gray.png"));
  CHECK(fs::exists(work() / "seg" / "brown_spot_0000_overlay.png"));
}

TEST_CASE("extract is reproducible and feeds train, eval, reduce and select") {
  const fs::path a = work() / "a.csv", b = work() / "b.csv";
  REQUIRE(cli(cfg() + "--out " + q(a) + " extract " + q(dataset())).code == 0);
  REQUIRE(cli(cfg() + "--jobs 3 --out " + q(b) + " extract " + q(dataset())).code == 0);
  const std::string text = testsupport::read_file(a);
  CHECK(text == testsupport::read_file(b));
  CHECK(text.rfind("sample_id,label,tex.area,", 0) == 0);
  CHECK(fs::exists(work() / "a.csv.meta.json"));

  const fs::path model = work() / "model.json";
  Run r = cli(cfg() + "--out " + q(model) + " train " + q(a));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("252-504-6") != std::string::npos);
  r = cli("eval " + q(a) + " --model " + q(model));
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out).contains("accuracy"));

  std::string renamed = text;
  renamed.replace(renamed.find("tex.mean"), 8, "tex.avg_");
  testsupport::write_text(work() / "renamed.csv", renamed);
  r = cli("--out " + q(work() / "m2.json") + " train " + q(work() / "renamed.csv"));
  CHECK(r.code == 1);
  CHECK(one_error_line(r, "dictionary-mismatch"));
  r = cli("eval " + q(work() / "renamed.csv") + " --model " + q(model));
  CHECK(r.code == 1);
  CHECK(one_error_line(r, "dictionary-mismatch"));

  const fs::path k = work() / "kpca.csv";
  REQUIRE(cli(cfg() + "--out " + q(k) + " reduce " + q(a) + " --method kpca --components 8").code == 0);
  CHECK(testsupport::read_file(k).rfind("sample_id,label,kpca.000,", 0) == 0);
  REQUIRE(cli("--out " + q(work() / "mk.json") + " train " + q(k)).code == 0);

  const fs::path s = work() / "anova.csv";
  r = cli(cfg() + "--out " + q(s) + " select " + q(a) + " --method anova --k 10");
  REQUIRE(r.code == 0);
  const auto sel = testsupport::read_file(s);
  CHECK(std::count(sel.begin(), sel.begin() + static_cast<long>(sel.find('\n')), ',') == 11);
  REQUIRE(cli("--out " + q(work() / "ms.json") + " train " + q(s)).code == 0);
  CHECK(cli("--out " + q(work() / "x.csv") + " reduce " + q(a) + " --method lda").code == 1);
}

TEST_CASE("run-experiment and report") {
  const fs::path out = work() / "exp";
  Run r = cli(cfg() + "--seed 7 --out " + q(out) + " run-experiment " + q(dataset()) + " --rows KPCA --folds 10");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(testsupport::read_file(out / "report.json"));
  REQUIRE(j["rows"].size() == 1);
  CHECK(j["rows"][0]["features"] == 65);
  CHECK(j["rows"][0]["hidden"] == 130);
  CHECK(j["rows"][0]["status"] == "ok");
  CHECK(j["folds"] == 10);
  CHECK(j["seed"] == 7);
  CHECK(j["schema_version"] == 1);
  CHECK(j["config_hash"].get<std::string>().size() == 16);
  const std::string table = testsupport::read_file(out / "table.txt");
  CHECK(r.out == table);

  r = cli("report " + q(out / "report.json"));
  REQUIRE(r.code == 0);
  CHECK(r.out == table);
  r = cli("report " + q(out / "report.json") + " --csv");
  CHECK(r.out == testsupport::read_file(out / "table.csv"));

  CHECK(cli("run-experiment " + q(dataset()) + " --rows nonsense").code == 1);
  testsupport::write_text(work() / "bad_report.json", R"({"schema_version": 9})");
  r = cli("report " + q(work() / "bad_report.json"));
  CHECK(r.code == 1);
  CHECK(one_error_line(r, "version"));
}
