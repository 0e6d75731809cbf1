#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "qmenv/cli.hpp"
#include "qmenv/io.hpp"
#include "qmenv/protocols.hpp"
#include "qmenv/trials.hpp"

using namespace qmenv;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::map<std::string, std::string> key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto eq = line.find('=');
        if (eq != std::string::npos && line.find('\t') == std::string::npos)
            kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

class CliTest : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = std::filesystem::temp_directory_path() /
               ("qmenv_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        std::filesystem::create_directories(dir_);
    }
    void TearDown() override { std::filesystem::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write_b92() {
        auto p = path("b92.json");
        save_model(b92_model(std::numbers::pi / 8, AttackSpec::intercept()), p);
        return p;
    }

    std::filesystem::path dir_;
};

} // namespace

TEST_F(CliTest, UnknownSubcommandOrFlagIsUsageError) {
    EXPECT_EQ(cli({"frobnicate"}).code, 2);
    EXPECT_EQ(cli({"qber", "--bogus", "1"}).code, 2);
    auto r = cli({});
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, ValidateReportsAndExitCodes) {
    auto m = write_b92();
    auto r = cli({"validate", "--model", m});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("valid=true"), std::string::npos);

    auto bad = path("bad.json");
    write_text_file(bad, R"({"format": "qmenv-model/1",
      "commands": {"alice": ["a"], "bob": ["b"], "eve": ["e"]},
      "states": {"a": [[[1, 0], [0, 0]]]},
      "povms": [{"bob": "b", "eve": "e", "elements": {"x": [[[[1,0],[0,0]],[[0,0],[0,0]]]], "y": [[[[1,0],[0,0]],[[0,0],[0,0]]]]}}]})");
    r = cli({"validate", "--model", bad});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("completeness"), std::string::npos);
    EXPECT_NE(r.out.find("entry (1,1)"), std::string::npos);

    auto garbage = path("garbage.json");
    write_text_file(garbage, "{ not json");
    EXPECT_EQ(cli({"validate", "--model", garbage}).code, 2);
    EXPECT_EQ(cli({"validate", "--model", path("missing.json")}).code, 2);
}

TEST_F(CliTest, TableCsv) {
    auto m = write_b92();
    auto r = cli({"table", "--model", m, "--out", path("t.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("alice,bob,eve,outcome,probability\n", 0), 0u);
    auto model = load_model(m);
    std::size_t rows = 0;
    for (const auto& [c, row] : probability_table(model))
        rows += row.size();
    EXPECT_EQ(static_cast<std::size_t>(std::count(r.out.begin(), r.out.end(), '\n')), rows + 1);
    auto file = read_text_file(path("t.csv"));
    EXPECT_EQ(file.rfind("# provenance: ", 0), 0u);
    EXPECT_NE(file.find(sha256_hex(read_text_file(m))), std::string::npos);
}

TEST_F(CliTest, CheckIdentityPasses) {
    auto m = write_b92();
    save_map(EnvelopmentMap::identity(load_model(m)), path("id.json"));
    auto r = cli({"check", "--model", m, "--beta", m, "--map", path("id.json")});
    EXPECT_EQ(r.code, 0) << r.err;
    auto kv = key_values(r.out);
    EXPECT_EQ(kv["holds"], "true");
    EXPECT_EQ(kv["max_deviation"], "0.0");
}

TEST_F(CliTest, EnvelopThenCheckPipe) {
    auto m = write_b92();
    auto r = cli({"envelop", "--model", m, "--r", "0.25", "--beta", path("beta.json"), "--map", path("map.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(key_values(r.out)["beta_dim"], "4");
    auto c = cli({"check", "--model", m, "--beta", path("beta.json"), "--map", path("map.json")});
    EXPECT_EQ(c.code, 0) << c.out << c.err;
    EXPECT_EQ(key_values(c.out)["holds"], "true");
    EXPECT_NE(c.out.find("overlap\tsend0\tsend1"), std::string::npos);
    // provenance embedded in the outputs
    auto beta_doc = parse_json(read_text_file(path("beta.json")), "beta");
    EXPECT_EQ(beta_doc["provenance"]["config"]["r"], 0.25);
    EXPECT_EQ(beta_doc["provenance"]["inputs"][m], sha256_hex(read_text_file(m)));

    auto pgm = cli({"envelop", "--model", m, "--r", "0", "--beta", path("b2.json"), "--map", path("m2.json"),
                    "--extra-policy", "pgm"});
    EXPECT_EQ(pgm.code, 0) << pgm.err;
}

TEST_F(CliTest, EnvelopOutOfRangeIsDomainFailure) {
    auto m = write_b92();
    auto r = cli({"envelop", "--model", m, "--r", "1.5", "--beta", path("b.json"), "--map", path("m.json")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("0 <= r < 1"), std::string::npos);
}

TEST_F(CliTest, CheckFailsOnWrongBeta) {
    auto m = write_b92();
    auto other = path("other.json");
    save_model(b92_model(0.3, AttackSpec::intercept()), other);
    save_map(EnvelopmentMap::identity(load_model(m)), path("id.json"));
    auto r = cli({"check", "--model", m, "--beta", other, "--map", path("id.json")});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(key_values(r.out)["holds"], "false");
}

TEST_F(CliTest, QberInterceptReport) {
    auto r = cli({"qber", "--protocol", "bb84", "--attack", "intercept", "--trials", "100000", "--seed", "7",
                  "--out", path("counts.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    auto kv = key_values(r.out);
    EXPECT_NEAR(std::stod(kv["exact_qber"]), 0.25, 1e-12);
    double est = std::stod(kv["estimated_qber"]), hw = std::stod(kv["halfwidth_3sigma"]);
    EXPECT_LE(std::abs(est - 0.25), hw);
    EXPECT_EQ(kv["within_3sigma"], "true");
    auto csv = read_text_file(path("counts.csv"));
    EXPECT_EQ(csv.rfind("# provenance: ", 0), 0u);
    EXPECT_NE(csv.find("alice,bob,eve,outcome,count"), std::string::npos);
}

TEST_F(CliTest, QberLeakageReportsEveErrors) {
    auto r = cli({"qber", "--protocol", "b92", "--attack", "leakage", "--r", "0", "--trials", "2000"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto kv = key_values(r.out);
    EXPECT_NEAR(std::stod(kv["eve_error_alpha"]), 0.14645, 1e-5);
    EXPECT_NEAR(std::stod(kv["eve_error_beta"]), 0.0, 1e-10);
    EXPECT_EQ(std::stod(kv["exact_qber"]), 0.0);
}

TEST_F(CliTest, QberBadParameters) {
    EXPECT_EQ(cli({"qber", "--protocol", "e91"}).code, 2);
    EXPECT_EQ(cli({"qber", "--attack", "intercept", "--fraction", "2"}).code, 1);
    EXPECT_EQ(cli({"qber", "--protocol", "b92", "--theta", "2"}).code, 1);
}

TEST_F(CliTest, SimulateFitRoundTrip) {
    auto m = write_b92();
    auto r = cli({"simulate", "--model", m, "--trials", "5000", "--seed", "3", "--out", path("run.tsv")});
    ASSERT_EQ(r.code, 0) << r.err;
    auto log = load_log(path("run.tsv"));
    EXPECT_EQ(log.records.size(), 5000u);
    EXPECT_EQ(log.model_id, model_id(load_model(m)));
    ASSERT_FALSE(log.comments.empty());
    EXPECT_EQ(log.comments.front().rfind("provenance ", 0), 0u);

    auto f = cli({"fit", "--model", m, "--log", path("run.tsv")});
    ASSERT_EQ(f.code, 0) << f.err;
    auto kv = key_values(f.out);
    EXPECT_LT(std::stod(kv["max_tv"]), 0.2);
    EXPECT_EQ(kv.count("warning"), 0u);

    // same inputs, same bytes
    cli({"simulate", "--model", m, "--trials", "5000", "--seed", "3", "--out", path("run2.tsv")});
    EXPECT_EQ(read_text_file(path("run.tsv")), read_text_file(path("run2.tsv")));
}

TEST_F(CliTest, SimulatePoliciesAndSchedule) {
    auto m = write_b92();
    for (const auto& policy : {"random", "greedy", "uniform-eve"}) {
        auto r = cli({"simulate", "--model", m, "--trials", "20", "--seed", "1", "--policy", policy, "--alice",
                      "send1", "--bob", "m0", "--out", path(std::string(policy) + ".tsv")});
        EXPECT_EQ(r.code, 0) << policy << r.err;
    }
    write_text_file(path("sched.tsv"), "# a comment\nsend0\tm0\tnone\nsend1\tm1\tH\n");
    auto r = cli({"simulate", "--model", m, "--trials", "4", "--seed", "1", "--schedule", path("sched.tsv"), "--out",
                  path("s.tsv")});
    ASSERT_EQ(r.code, 0) << r.err;
    auto log = load_log(path("s.tsv"));
    EXPECT_EQ(log.records[2].command, (Command{"send0", "m0", "none"}));
    write_text_file(path("bad_sched.tsv"), "send0\tm0\tZZ\n");
    EXPECT_EQ(cli({"simulate", "--model", m, "--trials", "4", "--seed", "1", "--schedule", path("bad_sched.tsv"),
                   "--out", path("x.tsv")})
                  .code,
              1);
    EXPECT_EQ(cli({"simulate", "--model", m, "--trials", "4", "--seed", "1", "--policy", "nope", "--out",
                   path("x.tsv")})
                  .code,
              2);
}

TEST_F(CliTest, FitTruncatedLogIsParseFailure) {
    auto m = write_b92();
    cli({"simulate", "--model", m, "--trials", "10", "--seed", "3", "--out", path("run.tsv")});
    auto text = read_text_file(path("run.tsv"));
    text.pop_back();
    write_text_file(path("run.tsv"), text);
    auto r = cli({"fit", "--model", m, "--log", path("run.tsv")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 12"), std::string::npos) << r.err; // header, comment, 10 records
}

TEST_F(CliTest, DiscriminateB92) {
    auto m = path("b92plain.json");
    save_model(b92_model(std::numbers::pi / 8, AttackSpec::none()), m);
    auto r = cli({"discriminate", "--model", m, "--pair", "send0,send1", "--priors", "0.5,0.5"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto kv = key_values(r.out);
    EXPECT_NEAR(std::stod(kv["error_probability"]), 0.14645, 1e-5);
    EXPECT_NE(r.out.find("povm\t0\tsend0\t"), std::string::npos);
    EXPECT_EQ(cli({"discriminate", "--model", m, "--pair", "send0"}).code, 2);
    EXPECT_EQ(cli({"discriminate", "--model", m, "--pair", "send0,zzz"}).code, 1);
    EXPECT_EQ(cli({"discriminate", "--model", m, "--priors", "0.9,0.9"}).code, 1);
}

TEST_F(CliTest, ModelExport) {
    auto r = cli({"model", "--protocol", "bb84", "--attack", "intercept", "--out", path("bb84.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(load_model(path("bb84.json")), bb84_model(AttackSpec::intercept()));
}

TEST_F(CliTest, BinaryExitCodes) {
    auto m = write_b92();
    auto run = [&](const std::string& args) {
        int status = std::system((std::string(QMENV_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    };
    EXPECT_EQ(run("validate --model " + m), 0);
    EXPECT_EQ(run("envelop --model " + m + " --r 1.5 --beta " + path("b.json") + " --map " + path("m.json")), 1);
    EXPECT_EQ(run("nonsense"), 2);
    EXPECT_EQ(run("envelop --model " + m + " --r 0 --beta " + path("b.json") + " --map " + path("m.json")), 0);
    EXPECT_EQ(run("check --model " + m + " --beta " + path("b.json") + " --map " + path("m.json")), 0);
}
