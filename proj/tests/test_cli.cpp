// Runs the built command line tool and checks exit codes and output bytes.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

const std::string cli = ASMC_CLI_PATH;

int run(const std::string& args) {
    const int status = std::system((cli + " " + args + " 2>/dev/null >/dev/null").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / ("asmc_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    fs::path write(const std::string& name, const std::string& text) {
        const auto p = dir / name;
        std::ofstream(p) << text;
        return p;
    }

    fs::path dir;
};

const char* tiny = R"({"N": 64, "M": 3, "steps_per_level": 20, "checkpoint_every": 10, "quadrature_grid": 64})";

}  // namespace

TEST_F(CliTest, SuccessAndByteIdenticalAcrossThreads) {
    const auto cfgp = write("c.json", tiny);
    const auto a = dir / "a.csv", b = dir / "b.csv", c = dir / "c.csv";
    ASSERT_EQ(run("fig3_2d --config " + cfgp.string() + " --replicates 3 --seed 7 --out " + a.string()), 0);
    ASSERT_EQ(run("fig3_2d --config " + cfgp.string() + " --replicates 3 --seed 7 --threads 3 --out " + b.string()), 0);
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_NE(slurp(a).find("# seed 7\n"), std::string::npos);
    // The CSV itself is a valid config and reproduces the file.
    ASSERT_EQ(run("fig3_2d --config " + a.string() + " --out " + c.string()), 0);
    EXPECT_EQ(slurp(a), slurp(c));
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
    EXPECT_EQ(run("fig3_2d --config " + write("bad.json", R"({"bogus": 1})").string()), 2);
    EXPECT_EQ(run("fig3_2d --config " + write("neg.json", R"({"N": 0})").string()), 2);
    EXPECT_EQ(run("fig3_2d --config " + write("broken.json", "{not json").string()), 2);
    EXPECT_EQ(run("fig3_2d --config " + (dir / "missing.json").string()), 2);
    EXPECT_EQ(run("fig3_2d --threads 0 --config " + write("t.json", tiny).string()), 2);
    EXPECT_EQ(run("no_such_experiment"), 2);
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("constants_report --replicates 3"), 2);
}

TEST_F(CliTest, NumericAbortExitsThreeWithPartialCsv) {
    const auto cfgp = write("div.json", R"({"N": 16, "M": 2, "steps_per_level": 20, "checkpoint_every": 10,
                                             "quadrature_grid": 64, "init_scale": 1e200})");
    const auto out = dir / "div.csv";
    EXPECT_EQ(run("fig3_2d --replicates 2 --config " + cfgp.string() + " --out " + out.string()), 3);
    const auto text = slurp(out);
    EXPECT_EQ(text.rfind("schema,asmc.fig3_2d.v1\n", 0), 0u);
    EXPECT_NE(text.find("\nfailure,"), std::string::npos);
}
