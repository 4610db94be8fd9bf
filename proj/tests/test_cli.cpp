#include "test_util.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pbank/binary_io.hpp"

using testutil::TempDir;

namespace {

std::string cli_path() {
    const char* env = std::getenv("PBANK_CLI");
    REQUIRE(env != nullptr);
    return env;
}

int run_cli(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " >/dev/null 2>/dev/null";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string slurp(const std::filesystem::path& p) {
    const auto bytes = pbank::read_file_bytes(p);
    return std::string(bytes.begin(), bytes.end());
}

}  // namespace

TEST_CASE("CLI pipeline: gen -> cluster -> train -> encode -> eval") {
    TempDir dir;
    const auto d = dir.path().string();
    REQUIRE(run_cli("gen --clusters 4 --per 30 --dims 32 --noise 0.1 --seed 1 --output " + d) ==
            0);
    REQUIRE(std::filesystem::exists(dir.file("train.pbfm")));
    REQUIRE(run_cli("cluster --input " + d + "/train.pbfm --d 8 --seed 1 --output " + d +
                    "/partition.pbsp") == 0);
    REQUIRE(run_cli("train-bpb --input " + d + "/train.pbfm --partition " + d +
                    "/partition.pbsp --k 10 --iters 30 --seed 1 --threads 1 --output " + d +
                    "/bank.pblb") == 0);
    REQUIRE(run_cli("encode --bank " + d + "/bank.pblb --input " + d +
                    "/gallery.pbfm --output " + d + "/gallery.pbbc") == 0);
    REQUIRE(run_cli("encode --bank " + d + "/bank.pblb --input " + d + "/query.pbfm --output " +
                    d + "/query.pbbc") == 0);
    REQUIRE(run_cli("eval --gallery " + d + "/gallery.pbbc --queries " + d +
                    "/query.pbbc --gallery-labels " + d + "/gallery_labels.csv --query-labels " +
                    d + "/query_labels.csv --k 3 --method bpb --output " + d) == 0);

    const auto csv = slurp(dir.file("precision_at_k.csv"));
    CHECK(csv.find("method,bits,k,precision") == 0);
    CHECK(csv.find("bpb,8,3,") != std::string::npos);
    CHECK(std::filesystem::exists(dir.file("pr_curve.csv")));
}

TEST_CASE("CLI search writes rankings") {
    TempDir dir;
    const auto d = dir.path().string();
    REQUIRE(run_cli("gen --clusters 2 --per 20 --dims 16 --seed 3 --output " + d) == 0);
    REQUIRE(run_cli("encode-baseline sign --input " + d + "/gallery.pbfm --output " + d +
                    "/g.pbbc") == 0);
    REQUIRE(run_cli("encode-baseline sign --input " + d + "/query.pbfm --output " + d +
                    "/q.pbbc") == 0);
    REQUIRE(run_cli("search --gallery " + d + "/g.pbbc --queries " + d +
                    "/q.pbbc --k 2 --output " + d + "/rankings.csv") == 0);
    const auto csv = slurp(dir.file("rankings.csv"));
    CHECK(csv.find("query,rank,gallery_index,distance") == 0);
}

TEST_CASE("train manifest records the schedule defaults") {
    TempDir dir;
    const auto d = dir.path().string();
    REQUIRE(run_cli("gen --clusters 2 --per 20 --dims 16 --seed 2 --output " + d) == 0);
    REQUIRE(run_cli("cluster --input " + d + "/train.pbfm --d 4 --output " + d + "/p.pbsp") == 0);
    REQUIRE(run_cli("train-bpb --input " + d + "/train.pbfm --partition " + d +
                    "/p.pbsp --k 5 --output " + d + "/bank.pblb") == 0);
    const auto manifest = nlohmann::json::parse(slurp(dir.file("bank.pblb.manifest.json")));
    CHECK(manifest["command"] == "train-bpb");
    CHECK(manifest["parameters"]["--gamma0"] == "1");
    CHECK(manifest["parameters"]["--grow"] == "1.2");
    CHECK(manifest["parameters"]["--shrink"] == "0.5");
    CHECK(manifest["parameters"]["--iters"] == "70");
}

TEST_CASE("unknown flags exit 2 without writing outputs") {
    TempDir dir;
    const auto d = dir.path().string();
    CHECK(run_cli("gen --clusters 2 --per 20 --dims 8 --wat 1 --output " + d) == 2);
    CHECK(!std::filesystem::exists(dir.file("train.pbfm")));
    CHECK(run_cli("no-such-command") == 2);
}

TEST_CASE("data errors exit 1 with no partial outputs") {
    TempDir dir;
    const auto d = dir.path().string();
    CHECK(run_cli("cluster --input " + d + "/missing.pbfm --d 4 --output " + d + "/p.pbsp") == 1);
    CHECK(!std::filesystem::exists(dir.file("p.pbsp")));
}

TEST_CASE("rerunning a command from its manifest reproduces identical bytes") {
    TempDir dir;
    const auto d = dir.path().string();
    REQUIRE(run_cli("gen --clusters 3 --per 20 --dims 24 --seed 9 --output " + d) == 0);
    REQUIRE(run_cli("cluster --input " + d + "/train.pbfm --d 6 --seed 4 --output " + d +
                    "/p1.pbsp") == 0);

    const auto manifest = nlohmann::json::parse(slurp(dir.file("p1.pbsp.manifest.json")));
    std::ostringstream cmd;
    cmd << manifest["command"].get<std::string>();
    for (const auto& [flag, value] : manifest["parameters"].items()) {
        if (flag == "--output") continue;
        cmd << " " << flag;
        const auto v = value.get<std::string>();
        if (!v.empty()) cmd << " " << v;
    }
    cmd << " --output " << d << "/p2.pbsp";
    REQUIRE(run_cli(cmd.str()) == 0);
    CHECK(pbank::read_file_bytes(dir.file("p1.pbsp")) ==
          pbank::read_file_bytes(dir.file("p2.pbsp")));
}

TEST_CASE("bench produces the combined metric tables") {
    TempDir dir;
    const auto d = dir.path().string();
    REQUIRE(run_cli("bench --clusters 3 --per 30 --dims 32 --noise 0.2 --d 8 --k 10 "
                    "--iters 20 --n-basis 20 --seed 5 --threads 2 --k-eval 3 --output " +
                    d) == 0);
    const auto csv = slurp(dir.file("precision_at_k.csv"));
    CHECK(csv.find("bpb,8,3,") != std::string::npos);
    CHECK(csv.find("randst-bpb,8,3,") != std::string::npos);
    CHECK(csv.find("sign,32,3,") != std::string::npos);
    CHECK(csv.find("lsh,8,3,") != std::string::npos);
    CHECK(std::filesystem::exists(dir.file("pr_curve.csv")));
    CHECK(std::filesystem::exists(dir.file("auc.csv")));
    CHECK(std::filesystem::exists(dir.file("bench.manifest.json")));
}
