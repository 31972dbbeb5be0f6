#include "cli.hpp"

#include "support/dot_checker.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace oodn;
namespace fs = std::filesystem;

namespace {

const std::string data_dir = OODN_DATA_DIR;
const std::string polygons = data_dir + "/polygons.oodn.json";
const std::string figures = data_dir + "/figures.oodn.json";

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("oodn-cli-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed())
                                            + "-" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path operator/(const std::string& f) const { return path_ / f; }
    std::vector<std::string> entries() const {
        std::vector<std::string> out;
        for (const auto& e : fs::directory_iterator(path_)) out.push_back(e.path().filename().string());
        std::ranges::sort(out);
        return out;
    }

private:
    fs::path path_;
};

} // namespace

TEST(Cli, IntersectionReportsCoreOnly) {
    auto r = run({"op", figures, "intersection", "T(A)", "T(B)"});
    ASSERT_EQ(r.code, 0) << r.err;
    for (auto m : {"property sides_count", "property side_sizes", "property angles_count", "property angle_measures",
                   "method perimeter("}) {
        EXPECT_NE(r.out.find(m), std::string::npos) << m << "\n" << r.out;
    }
    EXPECT_EQ(r.out.find("projection"), std::string::npos);
    EXPECT_EQ(r.out.find("area"), std::string::npos);
    EXPECT_TRUE(r.err.empty());
}

TEST(Cli, AbsentResultsExitOne) {
    for (auto op : {"intersection", "difference", "symmetric-difference"}) {
        auto r = run({"op", figures, op, "T(A)", "T(A)"});
        if (std::string(op) == "intersection") {
            EXPECT_EQ(r.code, 0) << op;
            continue;
        }
        EXPECT_EQ(r.code, 1) << op;
        EXPECT_NE(r.out.find("does not exist"), std::string::npos) << r.out;
    }
    auto j = run({"--json", "op", figures, "difference", "T(A)", "T(A)"});
    EXPECT_EQ(j.code, 1);
    auto doc = Json::parse(j.out);
    EXPECT_TRUE(doc["result"].is_null());
    EXPECT_NE(doc["reason"].get<std::string>().find("does not exist"), std::string::npos);
}

TEST(Cli, AbsentResultLeavesOutFileUntouched) {
    TempDir dir;
    auto r = run({"op", figures, "difference", "T(B)", "T(B)", "--out", (dir / "x.json").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_TRUE(dir.entries().empty());
}

TEST(Cli, InferPrintsFiveRelations) {
    auto r = run({"infer", polygons, "--threshold", "1.0"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::vector<std::string> expected = {
        "R_1 --instance-of--> T(R)", "S_1 --instance-of--> T(S)", "T(R) --a-kind-of--> T(P)",
        "T(S) --a-kind-of--> T(P)",  "T(S) --a-kind-of--> T(R)",  "5 relations",
    };
    EXPECT_EQ(lines(r.out), expected);

    auto j = run({"infer", polygons, "--json"});
    EXPECT_EQ(Json::parse(j.out)["relations"].size(), 5u);
}

TEST(Cli, OutputIsDeterministic) {
    std::vector<std::vector<std::string>> invocations = {
        {"show", polygons},
        {"show", figures, "T(A)", "--json"},
        {"op", figures, "union", "T(A)", "T(B)", "T(C)"},
        {"infer", polygons},
        {"export-dot", polygons},
        {"modify", polygons, "M2(T(R))", "T(R)", "--json"},
    };
    for (const auto& args : invocations) {
        auto a = run(args), b = run(args);
        EXPECT_EQ(a.code, 0) << a.err;
        EXPECT_EQ(a.out, b.out) << args[0];
    }
}

TEST(Cli, OutWritesLoadableNetwork) {
    TempDir dir;
    auto first = (dir / "first.oodn.json").string(), second = (dir / "second.oodn.json").string();
    ASSERT_EQ(run({"modify", polygons, "M1(T(S))", "T(S)", "--out", first}).code, 0);
    ASSERT_EQ(run({"modify", first, "M1(T(R))", "T(R)", "--as", "T(L_1)", "--out", second}).code, 0);
    EXPECT_EQ(dir.entries(), (std::vector<std::string>{"first.oodn.json", "second.oodn.json"}));

    auto r = run({"query", second, "reachable(T(S), modification-of)"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(lines(r.out), (std::vector<std::string>{"class T(L_1)", "class T(R)"}));

    auto n = load_network_file(second);
    ASSERT_TRUE(n.find_class("T(L_1)"));
    EXPECT_EQ(save_network(n), slurp(second));
}

TEST(Cli, FailedCommandsNeverTouchOut) {
    TempDir dir;
    auto target = dir / "net.json";
    { std::ofstream(target) << "original"; }
    EXPECT_EQ(run({"op", figures, "union", "T(Q)", "T(A)", "--out", target.string()}).code, 2);
    EXPECT_EQ(run({"modify", polygons, "M9", "T(R)", "--out", target.string()}).code, 2);
    EXPECT_EQ(slurp(target), "original");
    EXPECT_EQ(dir.entries(), std::vector<std::string>{"net.json"});

    auto missing = dir / "no" / "such" / "dir.json";
    EXPECT_EQ(run({"infer", polygons, "--out", missing.string()}).code, 2);
    EXPECT_EQ(dir.entries(), std::vector<std::string>{"net.json"});
}

TEST(Cli, OutReplacesExistingFile) {
    TempDir dir;
    auto target = dir / "net.json";
    { std::ofstream(target) << "stale"; }
    ASSERT_EQ(run({"infer", polygons, "--out", target.string()}).code, 0);
    EXPECT_EQ(load_network_file(target).relations().size(), 5u);
    EXPECT_EQ(dir.entries(), std::vector<std::string>{"net.json"});
}

TEST(Cli, CloneAndObjectUnion) {
    auto r = run({"--json", "op", figures, "clone", "A"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto doc = Json::parse(r.out)["result"];
    EXPECT_EQ(doc["name"], "A");
    EXPECT_EQ(doc["clone"], 1);

    auto u = run({"op", figures, "union", "object:A", "object:A"});
    ASSERT_EQ(u.code, 0) << u.err;
    EXPECT_NE(u.out.find("member A\n"), std::string::npos) << u.out;
    EXPECT_NE(u.out.find("member A#1\n"), std::string::npos) << u.out;

    EXPECT_EQ(run({"op", figures, "clone", "A", "--index", "1"}).code, 0);
    EXPECT_EQ(run({"op", figures, "clone", "A", "--index", "0"}).code, 2);
}

TEST(Cli, ModifyReportsKind) {
    auto r = run({"modify", polygons, "M1(T(S))", "T(S)"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("modifier kind: partial destroying\n"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("existing class T(R)\n"), std::string::npos) << r.out;

    auto fresh = run({"modify", polygons, "M1(T(S))", "T(S)", "--no-dedup"});
    EXPECT_NE(fresh.out.find("created class M1(T(S))(T(S))\n"), std::string::npos) << fresh.out;
}

TEST(Cli, QueryPatterns) {
    TempDir dir;
    auto inferred = (dir / "n.json").string();
    ASSERT_EQ(run({"infer", polygons, "--out", inferred}).code, 0);
    auto q = [&](const std::string& p) {
        auto r = run({"query", inferred, p});
        EXPECT_EQ(r.code, 0) << p << ": " << r.err;
        return lines(r.out);
    };
    using V = std::vector<std::string>;
    EXPECT_EQ(q("subclasses-of(T(P))"), (V{"class T(R)", "class T(S)"}));
    EXPECT_EQ(q("subclassesOf(T(S))"), V{});
    EXPECT_EQ(q("instances-of(T(R))"), V{"object R_1"});
    EXPECT_EQ(q("neighbors(T(R))"), (V{"object R_1", "class T(P)", "class T(S)"}));
    EXPECT_EQ(q("neighbors(T(R), is-a, out)"), V{"class T(P)"});
    EXPECT_EQ(q("neighbors( T(R) , * , in )"), (V{"object R_1", "class T(S)"}));
    EXPECT_EQ(q("reachable(S_1, instance-of)"), V{"class T(S)"});
    EXPECT_EQ(q("reachable(T(S), a-kind-of)"), (V{"class T(P)", "class T(R)"}));
}

TEST(Cli, PatternParser) {
    auto p = cli::detail::parse_pattern("neighbors(union(T(A), T(B)), is-a, in)");
    EXPECT_EQ(p.op, "neighbors");
    EXPECT_EQ(p.args, (std::vector<std::string>{"union(T(A), T(B))", "is-a", "in"}));
    EXPECT_TRUE(cli::detail::parse_pattern("f()").args.empty());
    EXPECT_THROW(cli::detail::parse_pattern("f(a"), cli::UsageError);
    EXPECT_THROW(cli::detail::parse_pattern("f(a))"), cli::UsageError);
    EXPECT_THROW(cli::detail::parse_pattern("nothing"), cli::UsageError);
}

TEST(Cli, UsageErrorsExitTwo) {
    std::vector<std::vector<std::string>> bad = {
        {},
        {"frobnicate"},
        {"validate"},
        {"validate", data_dir + "/missing.oodn.json"},
        {"op", figures, "join", "T(A)", "T(B)"},
        {"op", figures, "union", "T(Q)"},
        {"op", figures, "intersection", "T(A)"},
        {"modify", polygons, "M1(T(S))", "R_1"},
        {"infer", polygons, "--threshold", "2"},
        {"query", polygons, "neighbors(T(R), is-a, sideways)"},
        {"query", polygons, "instances-of(R_1)"},
        {"query", polygons, "reachable(T(R))"},
        {"query", polygons, "ancestors(T(R))"},
        {"show", polygons, "nobody"},
    };
    for (const auto& args : bad) {
        auto r = run(args);
        std::string joined;
        for (const auto& a : args) joined += a + " ";
        EXPECT_EQ(r.code, 2) << joined;
        EXPECT_FALSE(r.err.empty()) << joined;
    }
}

TEST(Cli, LoadErrorsNameTheLocation) {
    TempDir dir;
    auto bad = dir / "bad.oodn.json";
    { std::ofstream(bad) << R"J({"format": "oodn", "version": 1, "classes": [{"name": "T(A)"}]})J"; }
    auto r = run({"validate", bad.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("/classes/0"), std::string::npos) << r.err;
}

TEST(Cli, ValidateAndShow) {
    auto v = run({"validate", polygons});
    EXPECT_EQ(v.code, 0);
    EXPECT_NE(v.out.find("valid (3 classes, 2 objects, 5 modifiers, 0 relations)"), std::string::npos) << v.out;

    auto s = run({"show", polygons, "--json"});
    EXPECT_EQ(s.out, slurp(polygons));

    auto node = run({"show", polygons, "S_1"});
    EXPECT_NE(node.out.find("object S_1\n"), std::string::npos);
    EXPECT_NE(node.out.find("property side_sizes = [3, 3, 3, 3] cm"), std::string::npos) << node.out;

    auto cls = run({"show", figures, "class:T(C)"});
    EXPECT_EQ(cls.code, 0);
    EXPECT_NE(cls.out.find("class T(C)\n"), std::string::npos);
}

TEST(Cli, HelpExitsZero) {
    auto r = run({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("export-dot"), std::string::npos);
}

TEST(Cli, ExportDotParses) {
    auto r = run({"export-dot", figures});
    ASSERT_EQ(r.code, 0);
    auto g = oodn::testing::parse_dot(r.out);
    EXPECT_TRUE(g.directed);
    EXPECT_EQ(g.nodes.size(), 6u);
}
