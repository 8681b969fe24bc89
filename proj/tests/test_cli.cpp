#include "latblock/cli.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace latblock;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "latblock");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(int(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

nlohmann::json run_json(std::vector<std::string> args) {
    const Result r = run(std::move(args));
    EXPECT_EQ(r.code, 0) << r.err;
    return nlohmann::json::parse(r.out);
}

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("latblock_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string file(const std::string& name, const std::string& content = "") const {
        const auto p = path_ / name;
        std::ofstream(p) << content;
        return p.string();
    }

private:
    static int& counter() {
        static int c = 0;
        return c;
    }
    fs::path path_;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override { ::unsetenv("LATBLOCK_CONFIG"); }
    void TearDown() override { ::unsetenv("LATBLOCK_CONFIG"); }
};

// Parses "k: v" lines, or a two-line CSV, into a flat map.
std::map<std::string, std::string> parse_text(const std::string& s) {
    std::map<std::string, std::string> m;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) {
        const auto p = line.find(": ");
        m[line.substr(0, p)] = line.substr(p + 2);
    }
    return m;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') cur += '"', ++i;
            else if (c == '"') quoted = false;
            else cur += c;
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

std::map<std::string, std::string> parse_csv(const std::string& s) {
    std::istringstream in(s);
    std::string head, row;
    std::getline(in, head);
    std::getline(in, row);
    const auto h = split_csv(head), r = split_csv(row);
    std::map<std::string, std::string> m;
    for (std::size_t i = 0; i < h.size() && i < r.size(); ++i) m[h[i]] = r[i];
    return m;
}

std::map<std::string, std::string> flatten_json(const nlohmann::json& j) {
    std::map<std::string, std::string> m;
    for (const auto& [k, v] : j.items()) m[k] = v.is_string() ? v.get<std::string>() : v.dump();
    return m;
}

}  // namespace

TEST_F(Cli, ExpHyperbolic) {
    const auto j = run_json({"exp", "--mat", "0,1;1,0"});
    EXPECT_EQ(j["branch"], "hyperbolic");
    const Mat2d g = to_double(parse_matrix(j["result"].get<std::string>()));
    EXPECT_LT(max_abs_diff(g, oracle::series_exp({0, 1, 1, 0})), 1e-12);
    const auto q = run_json({"exp", "--quat", "1i", "--a", "2", "--b", "3"});
    EXPECT_EQ(q["branch"], "hyperbolic");
    EXPECT_NEAR(q["nred"].get<double>(), 1.0, 1e-12);
}

TEST_F(Cli, CurveAndLog) {
    const auto j = run_json({"curve", "--mat", "1,0;1,1", "--gamma", "4,1;-9,-2", "--t", "0.5"});
    EXPECT_NEAR(j["lambda"].get<double>(), 1 / std::sqrt(5.0), 1e-12);
    EXPECT_EQ(j["trace"], "3");
    const Mat2d p = to_double(parse_matrix(j["result"].get<std::string>()));
    EXPECT_LT(max_abs_diff(p * p, {4, 1, -5, -1}), 1e-12);
    const auto l = run_json({"log", "--mat", "1,0;0,1"});
    EXPECT_LT(max_abs_diff(to_double(parse_matrix(l["result"].get<std::string>())), {0, 0, 0, 0}), 1e-15);
    const Result bad = run({"log", "--mat", "0,1;-1,0"});
    EXPECT_EQ(bad.code, kExitUsage);
    EXPECT_NE(bad.err.find("elliptic"), std::string::npos);
    const auto qc = run_json({"curve", "--quat", "3+2i", "--gamma-quat", "i+j+k", "--a", "2", "--b", "3", "--t", "1"});
    EXPECT_EQ(qc["target"], "4+3i+7j+5k");
}

TEST_F(Cli, Reduce) {
    const auto j = run_json({"reduce", "--mat", "1,2;1,3"});
    EXPECT_EQ(j["result"], "1,0;2,1");
    const Mat2q gamma = parse_matrix(j["gamma"].get<std::string>());
    EXPECT_EQ(Mat2q({1, 2, 1, 3}) * gamma, (Mat2q{1, 0, 2, 1}));
    EXPECT_EQ(run_json({"reduce", "--mat", "1,0;0,1"})["result"], "1,0;0,1");
    const Result r = run({"reduce", "--mat", "2,0;0,2"});
    EXPECT_EQ(r.code, kExitUsage);
    EXPECT_NE(r.err.find("determinant"), std::string::npos);
}

TEST_F(Cli, ParseErrorsCarryPositions) {
    const Result r = run({"reduce", "--mat", "1,2;x,3"});
    EXPECT_EQ(r.code, kExitUsage);
    EXPECT_NE(r.err.find("position 4"), std::string::npos) << r.err;
    const Result q = run({"exp", "--quat", "2i+3q", "--a", "2", "--b", "3"});
    EXPECT_EQ(q.code, kExitUsage);
    EXPECT_NE(q.err.find("position"), std::string::npos) << q.err;
    EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
    EXPECT_EQ(run({}).code, kExitUsage);
    EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(Cli, PellAndAlgebra) {
    const auto p = run_json({"pell", "--d", "2"});
    EXPECT_EQ(p["p"], "3");
    EXPECT_EQ(p["q"], "2");
    const auto f = run_json({"pell", "--d", "2", "--seed", "0,1", "--count", "2"});
    EXPECT_EQ(f["n"], "-2");
    EXPECT_EQ(f["family"], (nlohmann::json{"4,3", "24,17"}));
    EXPECT_EQ(run({"pell", "--d", "9"}).code, kExitUsage);
    const auto a = run_json({"algebra", "--a", "4", "--b", "3"});
    EXPECT_EQ(a["verdict"], "split");
    EXPECT_EQ(a["witness"], "1,0,2");
    EXPECT_EQ(run_json({"algebra", "--a", "2", "--b", "3"})["verdict"], "division");
}

TEST_F(Cli, RefuteExitCodes) {
    TempDir tmp;
    const std::string empty = tmp.file("empty.txt", "# nothing here\n");
    const std::string cert = tmp.file("c.json");
    const Result ok = run({"refute", "--mat", "1,0;1,1", "--points", empty, "--out", cert, "--density", "300"});
    EXPECT_EQ(ok.code, kExitOk) << ok.err;
    const auto rep = nlohmann::json::parse(ok.out);
    EXPECT_EQ(rep["status"], "evaded");
    EXPECT_EQ(rep["t"], 0.5);
    const auto c = EvasionCertificate::parse(slurp(cert));
    EXPECT_EQ(c.family_params.at("n"), "2");
    EXPECT_EQ(run({"verify", "--cert", cert}).code, kExitOk);

    const Mat2d mid = curve_point_from_target({4, 1, -5, -1}, 0.5);
    const std::string adv = tmp.file("adv.txt", format_mat(mid) + "\n");
    const Result ex = run({"refute", "--mat", "1,0;1,1", "--points", adv, "--budget", "1", "--density", "300"});
    EXPECT_EQ(ex.code, kExitBudget);
    const auto diag = nlohmann::json::parse(ex.out);
    EXPECT_EQ(diag["status"], "budget_exhausted");
    EXPECT_EQ(diag["members_tried"], 1);
    EXPECT_LE(diag["best_clearance"].get<double>(), 1e-3);

    const std::string broken = tmp.file("broken.txt", "1,0;0,1\n1,2;3\n");
    const Result bad = run({"refute", "--mat", "1,0;1,1", "--points", broken});
    EXPECT_EQ(bad.code, kExitUsage);
    EXPECT_NE(bad.err.find("line 2"), std::string::npos) << bad.err;

    EXPECT_EQ(run({"refute", "--quat", "3+2i", "--a", "2", "--b", "7"}).code, kExitUsage);
}

TEST_F(Cli, VerifyRejectsTamperedCertificate) {
    TempDir tmp;
    const std::string pts = tmp.file("p.txt", "1.3,0.2;0.1,0.7846153846153846\n");
    const std::string cert = tmp.file("c.json");
    ASSERT_EQ(run({"refute", "--mat", "1,2;1,3", "--points", pts, "--out", cert, "--density", "500"}).code, kExitOk);
    auto j = nlohmann::json::parse(slurp(cert));
    j["clearances"][0] = j["clearances"][0].get<double>() + 1e-6;
    const std::string tampered = tmp.file("t.json", j.dump(2));
    const Result r = run({"verify", "--cert", tampered});
    EXPECT_EQ(r.code, kExitUsage);
    EXPECT_EQ(nlohmann::json::parse(r.out)["status"], "failed");
}

TEST_F(Cli, OutputFormatsRoundTrip) {
    const std::vector<std::vector<std::string>> cmds = {
        {"reduce", "--mat", "1,2;1,3"},
        {"algebra", "--a", "2", "--b", "7"},
        {"curve", "--mat", "1,0;1,1", "--gamma", "4,1;-9,-2", "--t", "0.25"},
        {"exp", "--mat", "0,1;-1,0"},
    };
    for (const auto& cmd : cmds) {
        const auto base = flatten_json(run_json(cmd));
        auto with = [&](const std::string& f) {
            std::vector<std::string> a{"--format", f};
            a.insert(a.end(), cmd.begin(), cmd.end());
            const Result r = run(a);
            EXPECT_EQ(r.code, 0) << r.err;
            return r.out;
        };
        EXPECT_EQ(parse_text(with("text")), base);
        EXPECT_EQ(parse_csv(with("csv")), base);
        const auto j = flatten_json(nlohmann::json::parse(with("json")));
        EXPECT_EQ(j, base);
        // Exact fields read back through the library's own parsers.
        if (base.count("result") && cmd[0] == "reduce") { EXPECT_EQ(parse_matrix(base.at("result")), (Mat2q{1, 0, 2, 1})); }
    }
}

TEST_F(Cli, ConfigFromEnvironmentAndFile) {
    TempDir tmp;
    const std::string cfg = tmp.file("cfg.json", R"({"format": "text"})");
    ::setenv("LATBLOCK_CONFIG", cfg.c_str(), 1);
    const Result r = run({"reduce", "--mat", "1,2;1,3"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("result: 1,0;2,1"), std::string::npos) << r.out;
    // Command-line format wins over the environment.
    EXPECT_NO_THROW(nlohmann::json::parse(run({"--format", "json", "reduce", "--mat", "1,2;1,3"}).out));

    const std::string bad = tmp.file("bad.json", R"({"sample_densty": 5})");
    ::setenv("LATBLOCK_CONFIG", bad.c_str(), 1);
    const Result b = run({"reduce", "--mat", "1,2;1,3"});
    EXPECT_EQ(b.code, kExitUsage);
    EXPECT_NE(b.err.find("sample_densty"), std::string::npos);
    ::unsetenv("LATBLOCK_CONFIG");

    const std::string small = tmp.file("small.json", R"({"sample_density": 50, "budget": 1, "seed": 9})");
    const auto cert = nlohmann::json::parse(run({"--config", small, "refute", "--mat", "1,0;1,1"}).out);
    EXPECT_EQ(cert["sampling"]["density"], 50);
    EXPECT_EQ(cert["sampling"]["seed"], 9);
}

TEST_F(Cli, GoldenCertificate) {
    const std::string dir = LATBLOCK_GOLDEN_DIR;
    const std::vector<std::string> args{"refute", "--mat", "1,0;1,1", "--points", dir + "/points_sl2.txt",
                                        "--density", "400", "--budget", "20", "--seed", "3"};
    const Result a = run(args), b = run(args);
    ASSERT_EQ(a.code, kExitOk) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out, slurp(dir + "/refute_sl2.json"));
    const auto cert = EvasionCertificate::parse(a.out);
    EXPECT_EQ(cert.dump(), a.out);
    EXPECT_TRUE(replay_certificate(cert).ok);
}
