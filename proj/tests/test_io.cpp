#include "qci/cli.hpp"

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <sys/wait.h>

using namespace qci;
using namespace qci::cli;
namespace fs = std::filesystem;

namespace {

const char* kLiouville = R"("model": {"type": "liouville", "a": [2.0, 0.3], "b": [0.5, 0.2]})";
const char* kFlat = R"("model": {"type": "liouville", "a": [0.6], "b": [0.4]})";

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("qci_test_io_" + name);
    fs::remove_all(p);
    return p;
}

RunConfig cfg(const std::string& body) { return parse_config_text("{" + body + "}"); }

std::string config_error(const std::string& body) {
    try {
        cfg(body);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) return e.what();
        return "other error: " + std::string(e.what());
    }
    return "no error";
}

json read_json(const fs::path& p) { return json::parse(io::read_file(p)); }

} // namespace

TEST_CASE("content hashes and number formatting", "[io]") {
    CHECK(io::git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK(io::git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
    CHECK(io::fmt(0.1) == "0.10000000000000001");
    CHECK(std::stod(io::fmt(1.0 / 3.0)) == 1.0 / 3.0);
    io::Csv csv({"a", "b"});
    csv.add({"1", "x,y"});
    csv.add({"say \"hi\"", "2"});
    CHECK(csv.text() == "a,b\n1,\"x,y\"\n\"say \"\"hi\"\"\",2\n");
    CHECK_THROWS_AS(csv.add({"only one"}), Error);
}

TEST_CASE("config validation names the offending field", "[io]") {
    CHECK(config_error(R"("experiment": "classify", )" + std::string(kLiouville) + R"(, "params": {"energies": [[1, 0.5]]})") ==
          "no error");
    CHECK_THAT(config_error(R"("experiment": "classify", )" + std::string(kLiouville) +
                            R"(, "params": {"energies": [[1, 0.5]], "energy": 1})"),
               Catch::Matchers::ContainsSubstring("params.energy: unknown key"));
    CHECK_THAT(config_error(R"("experiment": "classify", "colour": 1, )" + std::string(kLiouville) +
                            R"(, "params": {"energies": [[1, 0.5]]})"),
               Catch::Matchers::ContainsSubstring("colour: unknown key"));
    CHECK_THAT(config_error(R"("experiment": "classify", "model": {"type": "liouville", "a": [2.0], "b": [0.5], "c": 1},
                              "params": {"energies": [[1, 0.5]]})"),
               Catch::Matchers::ContainsSubstring("model.c: unknown key"));
    CHECK_THAT(config_error(R"("experiment": "supnorm-sweep", )" + std::string(kFlat) +
                            R"(, "params": {"hValues": [0.01, 0.02, 0.03, 0.04, 0.05, 0.1]})"),
               Catch::Matchers::ContainsSubstring("strictly decreasing"));
    CHECK_THAT(config_error(R"("experiment": "spectrum", )" + std::string(kFlat) + R"(, "params": {"h": "small"})"),
               Catch::Matchers::ContainsSubstring("params.h: wrong type"));
    CHECK_THAT(config_error(R"("experiment": "walk", )" + std::string(kFlat)), Catch::Matchers::ContainsSubstring("unknown experiment"));
    CHECK_THAT(config_error(R"("experiment": "supnorm-sweep", )" + std::string(kFlat) + R"(, "params": {"region": "equator"})"),
               Catch::Matchers::ContainsSubstring("params.region"));
    CHECK_THAT(config_error(R"("experiment": "spectrum", "model": {"type": "sor", "profile": "parabola"}, "params": {"h": 0.1})"),
               Catch::Matchers::ContainsSubstring("even-derivatives"));
    CHECK_THAT(config_error(R"("experiment": "decay", "model": {"type": "ho"}, "params": {"region": [1.2, 1.5]})"),
               Catch::Matchers::ContainsSubstring("params.hValues: missing"));
    CHECK_THAT(config_error(R"("experiment": "classify")"), Catch::Matchers::ContainsSubstring("model: missing"));
    CHECK_THAT(config_error("\"experiment\": "), Catch::Matchers::ContainsSubstring("invalid JSON"));
}

TEST_CASE("classify run writes the artifacts", "[io]") {
    auto dir = scratch("classify");
    auto c = cfg(R"("experiment": "classify", )" + std::string(kLiouville) + R"(, "params": {"energies": [[1, 0.5]]})");
    auto man = run(c, dir);
    auto summary = read_json(dir / "summary.json");
    CHECK(summary["classification"] == "Fold");
    auto mj = read_json(dir / "manifest.json");
    CHECK(mj["configHash"] == man.configHash);
    for (const char* f : {"results.csv", "errors.csv", "summary.json"})
        CHECK(mj["files"][f] == io::git_blob_hash(io::read_file(dir / f)));
    CHECK_FALSE(fs::exists(dir / "manifest.json.tmp"));
    // output location does not enter the config hash
    auto moved = cfg(R"("experiment": "classify", "output": "elsewhere", )" + std::string(kLiouville) +
                     R"(, "params": {"energies": [[1, 0.5]]})");
    CHECK(config_hash(moved) == man.configHash);
}

TEST_CASE("flat sweep: exponent zero, reruns are byte identical", "[io]") {
    const std::string body = R"("experiment": "supnorm-sweep", )" + std::string(kFlat) +
                             R"(, "params": {"hValues": [0.125, 0.0909, 0.0625, 0.0435, 0.03125, 0.015625]})";
    auto c = cfg(body);
    auto a = scratch("sweep_a"), b = scratch("sweep_b");
    auto ma = run(c, a, 1);
    auto mb = run(c, b, 3);
    CHECK(ma.fileHashes == mb.fileHashes);
    auto again = run(c, a, 2);
    CHECK(again.fileHashes == ma.fileHashes);
    auto s = read_json(a / "summary.json");
    CHECK(std::abs(s["fit"]["exponent"].get<double>()) < 1e-6);
    CHECK(ma.errorCount == 0);
}

TEST_CASE("every row lands in results or errors", "[io]") {
    auto dir = scratch("action");
    auto c = cfg(R"("experiment": "action", "model": {"type": "sor"}, "params": {"e1": 1, "e2": 0.5,
                   "points": [[0.8], [0.5], [0.9], [0.0], [-0.85]]})");
    auto man = run(c, dir);
    auto results = io::read_file(dir / "results.csv");
    auto errors = io::read_file(dir / "errors.csv");
    auto lines = [](const std::string& t) { return std::count(t.begin(), t.end(), '\n') - 1; };
    CHECK(lines(results) == 3);
    CHECK(lines(errors) == 2);
    CHECK(man.errorCount == 2);
    CHECK(errors.find("AllowedRegion") != std::string::npos);
}

TEST_CASE("an aborted run leaves no manifest", "[io]") {
    auto dir = scratch("abort");
    auto ok = cfg(R"("experiment": "classify", )" + std::string(kLiouville) + R"(, "params": {"energies": [[1, 0.5]]})");
    run(ok, dir);
    REQUIRE(fs::exists(dir / "manifest.json"));
    // h below the oracle cap
    auto bad = cfg(R"("experiment": "oracle-compare", )" + std::string(kLiouville) + R"(, "params": {"h": 0.005})");
    CHECK_THROWS_AS(run(bad, dir), Error);
    CHECK_FALSE(fs::exists(dir / "manifest.json"));
}

TEST_CASE("oracle and decay experiments through the runner", "[io]") {
    auto dir = scratch("oracle");
    auto c = cfg(R"("experiment": "oracle-compare", )" + std::string(kLiouville) + R"(, "params": {"h": 0.05, "counts": [64, 64]})");
    run(c, dir);
    auto s = read_json(dir / "summary.json");
    CHECK(s["bijective"] == true);
    CHECK(s["maxRelDiff"].get<double>() < 1e-3);

    auto dd = scratch("decay");
    auto d = cfg(R"("experiment": "decay", "model": {"type": "ho"}, "params": {"hValues": [0.005, 0.0025], "region": [1.15, 1.6]})");
    auto man = run(d, dd);
    CHECK(man.errorCount == 0);
    auto ds = read_json(dd / "summary.json");
    REQUIRE(ds["perH"].size() == 2);
    for (const auto& row : ds["perH"]) CHECK(row["band"].get<double>() < 0.15);
}

#ifdef QCI_CONFIG_DIR
TEST_CASE("shipped configs validate against their subcommand", "[io]") {
    int seen = 0;
    for (const auto& e : fs::directory_iterator(QCI_CONFIG_DIR)) {
        if (e.path().extension() != ".json") continue;
        INFO(e.path().filename().string());
        RunConfig c;
        REQUIRE_NOTHROW(c = parse_config_text(io::read_file(e.path())));
        CHECK_FALSE(c.output.empty());
        ++seen;
    }
    CHECK(seen >= 7);
}
#endif

#ifdef QCI_CLI_PATH
TEST_CASE("command line exit codes", "[io][cli]") {
    auto dir = scratch("cli");
    fs::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& text) {
        io::atomic_write(dir / name, text);
        return (dir / name).string();
    };
    auto status = [](const std::string& cmd) {
        int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    };
    const std::string exe = QCI_CLI_PATH;
    auto good = write("good.json", "{\"experiment\": \"classify\", " + std::string(kLiouville) +
                                       ", \"params\": {\"energies\": [[1, 0.5]]}}");
    auto bad = write("bad.json", "{\"experiment\": \"classify\", \"params\": {}}");
    auto partial = write("partial.json", R"({"experiment": "action", "model": {"type": "sor"},
                                             "params": {"e1": 1, "e2": 0.5, "points": [[0.8], [0.1]]}})");
    CHECK(status(exe + " classify --config " + good + " --out " + (dir / "o1").string()) == 0);
    CHECK(status(exe + " classify --config " + bad + " --out " + (dir / "o2").string()) == 2);
    CHECK(status(exe + " spectrum --config " + good + " --out " + (dir / "o3").string()) == 2);
    CHECK(status(exe + " action --config " + partial + " --out " + (dir / "o4").string()) == 3);
    CHECK(status(exe + " classify") == 2);
}
#endif
