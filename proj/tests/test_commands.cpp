#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "chordarc/commands.hpp"
#include "chordarc/io.hpp"
#include "chordarc/parallel.hpp"

using namespace chordarc;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "chordarc_test_commands" / name;
  fs::remove_all(dir);
  return dir.string();
}

RunConfig small_config(const std::string& out, const std::string& curve = R"({"kind": "segment"})") {
  auto cfg = parse_config(R"({
    "curve": )" + curve + R"(,
    "function": {"kind": "arc_power", "alpha": 0.6},
    "levels": {"lo": 1, "hi": 3, "fit_lo": 1},
    "grid": {"theta": 0.5},
    "samples": {"error": 256, "gradient": 32},
    "inverse": {"k_lo": 3, "k_hi": 5, "samples": 64},
    "verify": {"level": 2, "distance_samples": 2000, "harmonic_points": 10, "representation_samples": 64}
  })");
  cfg.output = out;
  return cfg;
}

nlohmann::json read_json(const std::string& path) { return nlohmann::json::parse(read_file(path)); }

int guarded(const std::function<int()>& body, std::string* err = nullptr) {
  std::ostringstream es;
  const int code = run_guarded(body, es);
  if (err) *err = es.str();
  return code;
}

}  // namespace

TEST_CASE("required inverse levels") {
  InverseParams ip;  // k = 2..6, c1 = 4
  CHECK(required_inverse_levels(ip) == std::vector<int>{0, 1, 2, 3, 4});
  ip.k_lo = 0;
  ip.k_hi = 1;
  CHECK(required_inverse_levels(ip).empty());  // delta > |L| at every radius
}

TEST_CASE("check-curve reports b") {
  const std::string out = scratch("check");
  std::ostringstream os;
  CHECK(cmd_check_curve(small_config(out), os) == kExitOk);
  auto j = read_json(out + "/curve.json");
  CHECK(j["chord_arc"].get<double>() == 1.0);
  CHECK(j["dyadic"].size() == 6);
  CHECK(j["dyadic"][2]["points"].get<int>() == 5);
  CHECK(fs::exists(out + "/run.log"));

  const std::string out2 = scratch("check_semi");
  auto cfg = small_config(out2, R"({"kind": "semicircle", "radius": 1})");
  cfg.chord_arc_samples = 1024;
  CHECK(cmd_check_curve(cfg, os) == kExitOk);
  j = read_json(out2 + "/curve.json");
  CHECK(j["chord_arc"].get<double>() == doctest::Approx(std::numbers::pi / 2).epsilon(0.01));
}

TEST_CASE("errors map to exit codes") {
  std::string err;
  CHECK(guarded([] { return load_config(CHORDARC_TEST_DATA "/malformed.json"), 0; }, &err) == kExitInvalidConfig);
  CHECK(err.find("line 3") != std::string::npos);
  CHECK(guarded([] { return parse_config(R"({"curve": {"radiuss": 1}})"), 0; }) == kExitInvalidConfig);
  CHECK(guarded([] { throw ConstructionError("boom"); return 0; }, &err) == kExitConstruction);
  CHECK(err.find("boom") != std::string::npos);
  CHECK(guarded([] { throw ResourceLimit("too big"); return 0; }) == kExitConstruction);
  CHECK(guarded([] { return kExitVerifyFailed; }) == kExitVerifyFailed);

  // no dumps at all
  const std::string out = scratch("empty");
  fs::create_directories(out + "/approximants");
  std::ostringstream os;
  const auto cfg = small_config(out);
  CHECK(guarded([&] { return cmd_inverse(cfg, "", os); }, &err) == kExitConstruction);
  CHECK(err.find("no approximant dumps") != std::string::npos);
  CHECK(guarded([&] { return cmd_report(cfg, os); }) == kExitConstruction);
}

TEST_CASE("direct, inverse and report on a small problem") {
  const std::string out = scratch("pipeline");
  const auto cfg = small_config(out);
  std::ostringstream os;
  REQUIRE(cmd_direct(cfg, os) == kExitOk);
  const auto d = read_json(out + "/direct.json");
  CHECK(d["format"] == "chordarc-direct-report");
  CHECK(d["levels"].size() == 3);
  CHECK(d["fit"]["points"].get<int>() == 3);
  CHECK(d["config"]["levels"]["hi"].get<int>() == 3);
  CHECK(d["curve"]["chord_arc_sampled"].get<double>() == 1.0);
  CHECK(d["ledger"].contains("c5"));
  CHECK(fs::exists(out + "/direct.csv"));
  CHECK(fs::exists(out + "/direct.svg"));
  for (int n = 1; n <= 3; ++n) CHECK(fs::exists(dump_path(out + "/approximants", n)));

  REQUIRE(cmd_inverse(cfg, "", os) == kExitOk);
  const auto inv = read_json(out + "/inverse.json");
  CHECK(inv["violations"].get<int>() == 0);
  CHECK(inv["radii"].size() == 3);

  CHECK(cmd_report(cfg, os) == kExitOk);
  const std::string md = read_file(out + "/report.md");
  CHECK(md.find("Direct run") != std::string::npos);
  CHECK(md.find("Inverse") != std::string::npos);

  SUBCASE("a missing level is named") {
    const std::string dir = scratch("partial");
    fs::create_directories(dir);
    fs::copy_file(dump_path(out + "/approximants", 1), dump_path(dir, 1));
    fs::copy_file(dump_path(out + "/approximants", 3), dump_path(dir, 3));
    std::string err;
    CHECK(guarded([&] { return cmd_inverse(cfg, dir, os); }, &err) == kExitConstruction);
    CHECK(err.find("missing approximant levels") != std::string::npos);
    CHECK(err.find(": 2") != std::string::npos);
  }
  SUBCASE("a corrupted dump names its line") {
    const std::string dir = scratch("corrupt");
    fs::create_directories(dir);
    for (int n = 1; n <= 3; ++n) fs::copy_file(dump_path(out + "/approximants", n), dump_path(dir, n));
    std::string text = read_file(dump_path(dir, 2));
    std::size_t p = text.find('\n');
    p = text.find('\n', p + 1) + 1;  // start of line 3
    text.replace(p, text.find('\n', p) - p, "{\"x\": nope}");
    write_atomic(dump_path(dir, 2), text);
    std::string err;
    CHECK(guarded([&] { return cmd_inverse(cfg, dir, os); }, &err) == kExitConstruction);
    CHECK(err.find("level_2.jsonl:3:") != std::string::npos);
  }
  SUBCASE("dumps from another curve are refused") {
    auto other = cfg;
    other.curve.length = 2.0;
    std::string err;
    CHECK(guarded([&] { return cmd_inverse(other, out + "/approximants", os); }, &err) == kExitConstruction);
    CHECK(err.find("curve length") != std::string::npos);
  }
}

TEST_CASE("a single level skips the rate fit") {
  const std::string out = scratch("single");
  auto cfg = small_config(out);
  cfg.level_lo = cfg.level_hi = 2;
  cfg.k_lo = 4;
  cfg.k_hi = 4;
  std::ostringstream os;
  CHECK(cmd_direct(cfg, os) == kExitOk);
  const auto d = read_json(out + "/direct.json");
  CHECK_FALSE(d.contains("fit"));
  CHECK(d["fit_note"].get<std::string>().find("at least 3") != std::string::npos);
  CHECK(os.str().find("rate fit skipped") != std::string::npos);
}

TEST_CASE("direct artifacts are byte identical across runs and thread counts") {
  const std::string a = scratch("det_a"), b = scratch("det_b");
  std::ostringstream os;
  auto ca = small_config(a), cb = small_config(b);
  ca.level_hi = cb.level_hi = 2;
  ca.fit_level_lo = cb.fit_level_lo = 1;
  ca.k_lo = cb.k_lo = 3;
  ca.k_hi = cb.k_hi = 4;
  REQUIRE(cmd_direct(ca, os) == kExitOk);
  const unsigned before = thread_count();
  set_thread_count(before == 1 ? 2 : 1);
  REQUIRE(cmd_direct(cb, os) == kExitOk);
  set_thread_count(before);
  for (const char* f : {"direct.json", "direct.csv", "direct.svg", "approximants/level_2.jsonl"})
    CHECK_MESSAGE(read_file(a + "/" + f) == read_file(b + "/" + f), f);
}

TEST_CASE("verify writes its property table") {
  const std::string out = scratch("verify");
  const auto cfg = small_config(out);
  std::ostringstream os;
  const int code = cmd_verify(cfg, os);
  const auto v = read_json(out + "/verify.json");
  INFO(os.str());
  CHECK(code == kExitOk);
  CHECK(v["passed"].get<bool>());
  CHECK(v["properties"].size() == 10);
  CHECK(os.str().find("PASS mass-balance") != std::string::npos);
}
