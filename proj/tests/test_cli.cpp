#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::path(DGS_TEST_WORKDIR) / "cli";

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Run run(const std::string& exe, const std::string& args) {
  const auto out = kWork / "stdout.txt";
  const auto err = kWork / "stderr.txt";
  const std::string cmd = "\"" + exe + "\" " + args + " > \"" + out.string() + "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

Run dgs(const std::string& args) { return run(DGS_CLI, args); }

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// One fixture shared by every case; built on first use.
const fs::path& fixture() {
  static const fs::path dir = [] {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    const auto d = kWork / "fx";
    const auto r = run(DGS_FIXTURE, "--out " + q(d) + " --classes 4 --original-per-class 200 --ipc 10");
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("every subcommand answers --help with exit 0") {
  fixture();
  for (const char* sub : {"", "validate", "dist", "smooth", "sample", "metrics", "dag", "dag cluster", "dag simulate", "plot"}) {
    CAPTURE(sub);
    CHECK(dgs(std::string(sub) + " --help").code == 0);
  }
}

TEST_CASE("validate") {
  const auto& fx = fixture();
  const auto ok = dgs("validate " + q(fx / "original.jsonl"));
  CHECK(ok.code == 0);
  const auto report = nlohmann::json::parse(ok.out);
  CHECK(report["valid"] == true);
  CHECK(report["items"] == 800);
  CHECK(report["labels"] == 4);

  write(kWork / "dup.jsonl",
        "{\"id\":\"a/1\",\"label\":\"a\",\"difficulty\":0.2}\n{\"id\":\"a/1\",\"label\":\"a\",\"difficulty\":0.3}\n");
  const auto dup = dgs("validate " + q(kWork / "dup.jsonl"));
  CHECK(dup.code == 2);
  CHECK(dup.out.find("a/1") != std::string::npos);
  CHECK(dup.out.find("duplicate id") != std::string::npos);

  write(kWork / "unknown.jsonl", "{\"id\":\"a/1\",\"label\":\"a\",\"difficulty\":0.2,\"colour\":\"red\"}\n");
  CHECK(dgs("validate " + q(kWork / "unknown.jsonl")).code == 2);
  CHECK(dgs("validate " + q(kWork / "missing.jsonl")).code == 2);
  CHECK(dgs("validate").code == 2);
}

TEST_CASE("option ranges are enforced") {
  const auto& fx = fixture();
  CHECK(dgs("smooth " + q(fx / "original.jsonl") + " --lambda 1.5 --out " + q(kWork)).code == 2);
  CHECK(dgs("smooth " + q(fx / "original.jsonl") + " --grid-max-percent 60 --out " + q(kWork)).code == 2);
  CHECK(dgs("dist " + q(fx / "original.jsonl") + " --shape triangle --out " + q(kWork)).code == 2);
  CHECK(dgs("no-such-command").code == 2);
}

TEST_CASE("dist reproduces the fixture histograms") {
  const auto& fx = fixture();
  const auto out = kWork / "dist";
  REQUIRE(dgs("dist " + q(fx / "original.jsonl") + " --ipc 10 --out " + q(out)).code == 0);
  const auto hist = nlohmann::json::parse(slurp(out / "histograms.json"));
  const auto truth = nlohmann::json::parse(slurp(fx / "truth.json"));
  REQUIRE(hist["histograms"].size() == truth["original"].size());
  for (std::size_t c = 0; c < truth["original"].size(); ++c) {
    CHECK(hist["histograms"][c]["label"] == truth["original"][c]["label"]);
    CHECK(hist["histograms"][c]["counts"] == truth["original"][c]["counts"]);
  }
  for (const auto& plan : hist["plans"]) {
    int total = 0;
    for (const auto& t : plan["targets"]) total += t.get<int>();
    CHECK(total == 10);
  }
  REQUIRE(dgs("dist " + q(fx / "pool.jsonl") + " --format csv --ipc 10 --out " + q(out)).code == 0);
  CHECK(fs::exists(out / "histograms.csv"));
  CHECK(fs::exists(out / "plans.csv"));
}

TEST_CASE("smooth writes its report and annotated manifest") {
  const auto& fx = fixture();
  const auto out = kWork / "smooth";
  REQUIRE(dgs("smooth " + q(fx / "pool.jsonl") + " --out " + q(out)).code == 0);
  const auto report = nlohmann::json::parse(slurp(out / "smoothing.json"));
  CHECK(report["classes"].size() == 4);
  CHECK(report["config"]["lambda"] == 0.5);
  CHECK(dgs("validate " + q(out / "smoothed.jsonl")).code == 0);
}

TEST_CASE("sample is reproducible byte for byte") {
  const auto& fx = fixture();
  const std::string args = "sample --original " + q(fx / "original.jsonl") + " --pool " + q(fx / "pool.jsonl") +
                           " --ipc 10 --seed 3 --out ";
  REQUIRE(dgs(args + q(kWork / "s1")).code == 0);
  REQUIRE(dgs(args + q(kWork / "s2")).code == 0);
  CHECK(slurp(kWork / "s1" / "distilled.jsonl") == slurp(kWork / "s2" / "distilled.jsonl"));
  CHECK(slurp(kWork / "s1" / "sampling_report.json") == slurp(kWork / "s2" / "sampling_report.json"));
  const auto report = nlohmann::json::parse(slurp(kWork / "s1" / "sampling_report.json"));
  CHECK(report["distilled_items"] == 40);
  CHECK(dgs("validate " + q(kWork / "s1" / "distilled.jsonl")).code == 0);
}

TEST_CASE("metrics, guided generation and plots") {
  const auto& fx = fixture();
  const auto out = kWork / "misc";
  CHECK(dgs("metrics --original " + q(fx / "original.jsonl") + " --pool " + q(fx / "pool.jsonl") + " --generated " +
            q(fx / "pool.jsonl") + " --real " + q(fx / "original.jsonl") + " --out " + q(out))
            .code == 0);
  const auto metrics = nlohmann::json::parse(slurp(out / "metrics.json"));
  CHECK(metrics["bias"]["classes"].size() == 4);
  CHECK(metrics["representativeness"]["per_item"].size() == 200);

  CHECK(dgs("dag cluster --original " + q(fx / "original.jsonl") + " --ipc 10 --out " + q(out)).code == 0);
  CHECK(fs::exists(out / "centers.json"));
  CHECK(dgs("dag simulate --mixture " + q(fx / "mixture.json") + " --original " + q(fx / "original.jsonl") +
            " --ipc 10 --out " + q(out))
            .code == 0);
  const auto gen = dgs("validate " + q(out / "generated.jsonl"));
  CHECK(gen.code == 0);
  CHECK(nlohmann::json::parse(gen.out)["items"] == 40);

  write(kWork / "mix2.json", R"({"dim": 2, "components": [{"weight": 1, "mean": [0, 0], "std": 1}]})");
  CHECK(dgs("dag simulate --mixture " + q(kWork / "mix2.json") + " --center 1,1 --out " + q(out)).code == 0);
  CHECK(slurp(out / "trajectory.csv").rfind("t,z0,z1\n", 0) == 0);
  CHECK(dgs("dag simulate --mixture " + q(kWork / "mix2.json") + " --center 1,1 --t-stop 52 --out " + q(out)).code == 2);
  CHECK(dgs("dag simulate --mixture " + q(kWork / "missing.json") + " --center 1,1 --out " + q(out)).code == 2);

  CHECK(dgs("plot " + q(fx / "pool.jsonl") + " --label class0 --out " + q(out)).code == 0);
  CHECK(slurp(out / "kde.csv").rfind("x,density\n", 0) == 0);
  CHECK(slurp(out / "plot.svg").find("<svg") != std::string::npos);
}
