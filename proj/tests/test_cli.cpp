#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef HQANN_CLI_PATH
#error "HQANN_CLI_PATH must point at the hqann binary"
#endif

namespace {

namespace fs = std::filesystem;

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(HQANN_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, {}};
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// recall column of every data row
std::string recall_column(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("dataset,", 0) == 0) continue;
    std::istringstream fields(line);
    std::string field;
    for (int i = 0; i <= 10 && std::getline(fields, field, ','); ++i) {
    }
    out += field + "\n";
  }
  return out;
}

class Cli : public ::testing::Test {
 protected:
  static fs::path root;

  static void SetUpTestSuite() {
    root = fs::temp_directory_path() / ("hqann_cli_test_" + std::to_string(getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  static void TearDownTestSuite() { fs::remove_all(root); }
  static std::string data() { return (root / "data").string(); }
};

fs::path Cli::root;

TEST_F(Cli, PipelineGenBuildGtBench) {
  auto gen = run("gen --out " + data() + " --count 1000 --dim 16 --categories 10 "
                 "--queries 50 --seed 7");
  ASSERT_EQ(gen.code, 0);
  EXPECT_NE(gen.out.find("base.fvecs\trows=1000\tdim=16\tC=10\tseed=7"), std::string::npos);
  for (auto f : {"base.fvecs", "attrs.ivecs", "query.fvecs", "query_attrs.ivecs"})
    EXPECT_TRUE(fs::exists(root / "data" / f)) << f;

  ASSERT_EQ(run("build --data " + data() + " --M 8 --ef-construction 64 --threads 1").code, 0);
  ASSERT_EQ(run("gt --data " + data()).code, 0);

  auto bench = run("bench --data " + data() + " --ef 10,40 --threads 1");
  ASSERT_EQ(bench.code, 0);
  EXPECT_EQ(bench.out.rfind("# hqann bench", 0), 0u);
  EXPECT_NE(bench.out.find("\ndataset,strategy,C,w,bias,M,ef_construction,budget,k,threads,"
                           "recall,qps,p50_us,p99_us\n"),
            std::string::npos);
  EXPECT_NE(bench.out.find("synthetic,fusion,10,0.25,4.3219,8,64,40,10,1,"), std::string::npos);

  auto pre = run("bench --data " + data() + " --strategy pre-filter --threads 1");
  ASSERT_EQ(pre.code, 0);
  EXPECT_EQ(recall_column(pre.out), "1\n");

  auto search = run("search --data " + data() + " --k 3 --ef 20");
  ASSERT_EQ(search.code, 0);
  EXPECT_EQ(search.out.rfind("query\trank\tid\tfused_dist\n", 0), 0u);
  EXPECT_EQ(std::count(search.out.begin(), search.out.end(), '\n'), 1 + 50 * 3);
}

TEST_F(Cli, DeterministicOutputs) {
  const std::string a = (root / "det_a").string(), b = (root / "det_b").string();
  for (const auto& dir : {a, b}) {
    ASSERT_EQ(run("gen --out " + dir + " --count 600 --dim 8 --categories 5 --queries 30").code, 0);
    ASSERT_EQ(run("build --data " + dir + " --M 8 --ef-construction 40 --threads 1").code, 0);
  }
  for (auto f : {"base.fvecs", "attrs.ivecs", "query.fvecs", "query_attrs.ivecs", "index.hqan"})
    EXPECT_EQ(slurp(fs::path(a) / f), slurp(fs::path(b) / f)) << f;
  auto r1 = run("bench --data " + a + " --ef 10,20 --threads 1");
  auto r2 = run("bench --data " + b + " --ef 10,20 --threads 1");
  EXPECT_EQ(recall_column(r1.out), recall_column(r2.out));
}

TEST_F(Cli, ExitCodes) {
  const std::string dir = (root / "codes").string();
  ASSERT_EQ(run("gen --out " + dir + " --count 200 --dim 8 --queries 5").code, 0);
  EXPECT_EQ(run("gen --out " + dir + " --count 200 --dim 8").code, 2);
  EXPECT_EQ(run("gen --out " + dir + " --count 200 --dim 8 --queries 5 --force").code, 0);
  EXPECT_EQ(run("gen --out " + dir + "_x --categories 0").code, 2);
  EXPECT_EQ(run("build --data " + dir + " --w 1.0 --bias 4.3219").code, 2);
  EXPECT_EQ(run("build --data " + dir + " --w -1").code, 2);
  EXPECT_EQ(run("bench --data " + dir + " --strategy bogus").code, 2);
  EXPECT_EQ(run("nonsense").code, 2);
  EXPECT_EQ(run("--help").code, 0);

  // Query file of the wrong dimension is a runtime failure.
  const std::string other = (root / "codes_dim4").string();
  ASSERT_EQ(run("gen --out " + other + " --count 20 --dim 4 --queries 5").code, 0);
  ASSERT_EQ(run("build --data " + dir + " --M 8 --ef-construction 32").code, 0);
  fs::copy_file(fs::path(other) / "query.fvecs", fs::path(dir) / "query.fvecs",
                fs::copy_options::overwrite_existing);
  const std::string cmd = std::string(HQANN_CLI_PATH) + " search --data " + dir + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  std::string text;
  char buf[512];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) text.append(buf, n);
  const int status = pclose(pipe);
  EXPECT_EQ(WEXITSTATUS(status), 1);
  EXPECT_NE(text.find("dimension"), std::string::npos) << text;
}

}  // namespace
