#include <doctest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <json.hpp>

#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args, bool merge_stderr = true) {
  const std::string cmd =
      std::string("'") + IHI_CLI_PATH + "' " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::string digest_line(const std::string& out) {
  const auto at = out.find("config digest: ");
  REQUIRE(at != std::string::npos);
  return out.substr(at, out.find('\n', at) - at);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// params/, scenes/scene_0000.ihic, y.ihic and nu.ihic (noiseless).
struct Workspace {
  ihi::test::TempDir dir{"cli"};
  Workspace() {
    REQUIRE(run("make-params --output " + q(dir / "params")).code == 0);
    REQUIRE(run("make-scenes --output " + q(dir / "scenes") + " --count 1 --height 16").code == 0);
    const Result sim = run("simulate --input " + q(first_scene()) + " --params " +
                           q(dir / "params") + " --output " + q(dir / "y.ihic") + " --gt-nu " +
                           q(dir / "nu.ihic") + " --deterministic");
    REQUIRE_MESSAGE(sim.code == 0, sim.out);
  }
  fs::path first_scene() const {
    for (const auto& e : fs::directory_iterator(dir / "scenes"))
      if (e.path().extension() == ".ihic") return e.path();
    return {};
  }
  std::string reconstruct(const std::string& extra) const {
    return "reconstruct --input " + q(dir / "y.ihic") + " --params " + q(dir / "params") +
           " --reference " + q(dir / "nu.ihic") + " " + extra;
  }
};

}  // namespace

TEST_CASE("fprime on noiseless input prints at least 60 dB") {
  Workspace w;
  const Result r = run(w.reconstruct("--method fprime --output " + q(w.dir / "x.ihic")));
  REQUIRE_MESSAGE(r.code == 0, r.out);
  const auto at = r.out.find("PSNR ");
  REQUIRE(at != std::string::npos);
  const std::string value = r.out.substr(at + 5, r.out.find(' ', at + 5) - at - 5);
  MESSAGE("printed PSNR " << value);
  CHECK((value == "inf" || std::stod(value) >= 60.0));
  CHECK(fs::exists(w.dir / "x.ihic"));
  CHECK(fs::exists(w.dir / "x.json"));
}

TEST_CASE("json output and config digests") {
  Workspace w;
  const Result a = run("--json " + w.reconstruct("--method unfold --stages 2"), false);
  REQUIRE(a.code == 0);
  const json j = json::parse(a.out);
  CHECK(j["command"] == "reconstruct");
  CHECK(j["trace"].size() == 3);
  CHECK(j.contains("config_digest"));

  const std::string base = digest_line(run(w.reconstruct("--method unfold --stages 2")).out);
  CHECK(digest_line(run(w.reconstruct("--method unfold --stages 2")).out) == base);
  CHECK(digest_line(run(w.reconstruct("--method unfold --stages 3")).out) != base);
  // Rewriting an input with another seed changes the digest.
  const Result sim = run("simulate --input " + q(w.first_scene()) + " --params " +
                         q(w.dir / "params") + " --output " + q(w.dir / "y.ihic") + " --seed 9");
  REQUIRE(sim.code == 0);
  CHECK(digest_line(run(w.reconstruct("--method unfold --stages 2")).out) != base);
}

TEST_CASE("exit codes") {
  ihi::test::TempDir dir("cli_codes");
  REQUIRE(run("make-params --output " + q(dir / "p")).code == 0);
  REQUIRE(run("make-scenes --output " + q(dir / "s") + " --count 1 --height 8").code == 0);
  REQUIRE(run("simulate --input " + q(dir / "s/scene_0000.ihic") + " --params " + q(dir / "p") +
              " --output " + q(dir / "y.ihic"))
              .code == 0);

  const fs::path missing = dir / "no_params_here";
  const Result io = run("reconstruct --input " + q(dir / "y.ihic") + " --params " + q(missing));
  CHECK(io.code == 3);
  CHECK(io.out.find(missing.string()) != std::string::npos);
  const Result no_input = run("reconstruct --input " + q(dir / "nothing.ihic") + " --params " + q(dir / "p"));
  CHECK(no_input.code == 3);
  CHECK(no_input.out.find("nothing.ihic") != std::string::npos);

  CHECK(run("reconstruct --bogus-flag").code == 2);
  CHECK(run("").code == 2);
  CHECK(run("simulate --input a.ihic").code == 2);
  CHECK(run("make-params --output " + q(dir / "p2") + " --profile planet").code == 2);

  // Wrong-shape prior server: numerical failure class.
  const std::string server = std::string(IHI_CLI_PATH) + " serve-prior --mode wrong-shape";
  const Result shape = run("reconstruct --input " + q(dir / "y.ihic") + " --params " + q(dir / "p") +
                           " --method unfold --prior external --prior-command '" + server + "'");
  CHECK(shape.code == 4);
  CHECK(shape.out.find("stage 0") != std::string::npos);
}

TEST_CASE("external echo prior matches identity") {
  Workspace w;
  const std::string server = std::string(IHI_CLI_PATH) + " serve-prior --mode echo";
  REQUIRE(run(w.reconstruct("--method unfold --prior identity --output " + q(w.dir / "a.ihic")))
              .code == 0);
  const Result r = run(w.reconstruct("--method unfold --prior external --prior-command '" + server +
                                     "' --output " + q(w.dir / "b.ihic")));
  REQUIRE_MESSAGE(r.code == 0, r.out);
  CHECK(slurp(w.dir / "a.ihic") == slurp(w.dir / "b.ihic"));
}

TEST_CASE("simulate is independent of the thread count") {
  Workspace w;
  for (int threads : {1, 3}) {
    const fs::path out = w.dir / ("t" + std::to_string(threads) + ".ihic");
    REQUIRE(run("--threads " + std::to_string(threads) + " simulate --input " + q(w.first_scene()) +
                " --params " + q(w.dir / "params") + " --output " + q(out) + " --seed 5")
                .code == 0);
  }
  CHECK(slurp(w.dir / "t1.ihic") == slurp(w.dir / "t3.ihic"));
}

TEST_CASE("calibration, dataset and evaluation commands") {
  ihi::test::TempDir dir("cli_flow");
  REQUIRE(run("make-calibration --output " + q(dir / "cap") + " --truth " + q(dir / "truth") +
              " --height 128")
              .code == 0);
  const Result cal = run("calibrate --captures " + q(dir / "cap") + " --output " + q(dir / "est") +
                         " --report " + q(dir / "report.json"));
  REQUIRE_MESSAGE(cal.code == 0, cal.out);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "est"));

  REQUIRE(run("make-scenes --output " + q(dir / "s") + " --count 2 --height 64").code == 0);
  const Result ds = run("make-dataset --sources " + q(dir / "s") + " --params " + q(dir / "est") +
                        " --output " + q(dir / "ds") + " --test-count 1");
  REQUIRE_MESSAGE(ds.code == 0, ds.out);
  CHECK(fs::exists(dir / "ds/manifest.json"));

  const Result ev = run("--json evaluate --dataset " + q(dir / "ds") + " --method fprime --report " +
                            q(dir / "eval.json"),
                        false);
  REQUIRE(ev.code == 0);
  const json j = json::parse(ev.out);
  CHECK(j.contains("config_digest"));
  CHECK(fs::exists(dir / "eval.json"));
  const Result table = run("evaluate --dataset " + q(dir / "ds") + " --method traditional");
  CHECK(table.code == 0);
  CHECK(table.out.find("mean") != std::string::npos);
}

TEST_CASE("selftest passes within budget") {
  const auto t0 = std::chrono::steady_clock::now();
  const Result r = run("selftest");
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE(r.out);
  CHECK(r.code == 0);
  CHECK(seconds <= 120.0);
}
