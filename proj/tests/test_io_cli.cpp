#include "harperdim/io.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

using namespace harperdim;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

fs::path scratch() {
  const fs::path d = fs::temp_directory_path() / "harperdim_test_io_cli";
  fs::create_directories(d);
  return d;
}

// Runs the CLI with stdout captured to a file; stderr is discarded.
Run cli(const std::string& args) {
  const fs::path out = scratch() / "stdout.txt";
  const std::string cmd = std::string("\"") + HARPERDIM_CLI_PATH + "\" " + args + " > \"" + out.string() +
                          "\" 2> \"" + (scratch() / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = io::read_file(out.string());
  return r;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> row;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) row.push_back(f);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(Io, CsvQuoting) {
  EXPECT_EQ(io::csv_field("plain"), "plain");
  EXPECT_EQ(io::csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(io::csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  std::ostringstream os;
  io::csv_row(os, {"[;1,2]", "3"});
  EXPECT_EQ(os.str(), "\"[;1,2]\",3\r\n");
}

TEST(Io, ContinuedFractionJsonRoundTrip) {
  for (const char* s : {"[;1]", "[3,50]", "[1,2;3,4]", "[123456789012345678901234567890;7]"}) {
    const auto cf = ContinuedFraction::parse(s);
    EXPECT_EQ(io::cf_from_json(io::parse_json(io::to_json(cf).dump())), cf) << s;
  }
  EXPECT_TRUE(io::to_json(ContinuedFraction::parse("[3,50]"))["tail"].is_null());
  EXPECT_TRUE(io::to_json(ContinuedFraction::parse("[123456789012345678901234567890;7]"))["prefix"][0].is_string());
}

TEST(Io, ParseAlpha) {
  EXPECT_EQ(io::parse_alpha("[;5]"), ContinuedFraction::constant(5));
  const auto g = io::parse_alpha("0.6180339887498948482045868343656381177203091798057628621354486227052604628189");
  for (std::size_t i = 1; i <= 40; ++i) EXPECT_EQ(g.quotient(i), 1) << i;
  EXPECT_THROW(io::parse_alpha("1.5"), Error);
  EXPECT_THROW(io::parse_alpha("abc"), Error);
}

TEST(Io, BandsCsvAndJson) {
  const auto bs = harper::band_set(1, 3);
  std::ostringstream os;
  io::write_bands_csv(os, bs);
  const auto rows = parse_csv(os.str());
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"p", "q", "lambda", "ell", "gamma", "delta"}));
  for (int l = 0; l < 3; ++l) {
    EXPECT_EQ(std::stod(rows[l + 1][4]), bs.bands[l].lower);  // shortest round-trip formatting
    EXPECT_EQ(std::stod(rows[l + 1][5]), bs.bands[l].upper);
  }
  const auto j = io::to_json(bs);
  EXPECT_EQ(j["bands"].size(), 3u);
  EXPECT_EQ(j["bands"][2]["delta"].get<double>(), bs.bands[2].upper);
}

TEST(Io, ConstantsJsonRoundTrip) {
  cantor::HSConstants k;
  k.C1 = 77;
  k.b1 = 0.03;
  const auto back = io::constants_from_json(io::to_json(k));
  EXPECT_EQ(back.C1, 77);
  EXPECT_EQ(back.b1, 0.03);
}

TEST(Io, TreeJsonRoundTrip) {
  const auto t = cantor::build_tree(ContinuedFraction::constant(50), cantor::HSConstants{}, 2, 5);
  const auto nodes = t.materialize();
  for (bool include : {true, false}) {
    const auto back = io::tree_from_json(io::parse_json(io::dump(io::to_json(t, include))));
    EXPECT_EQ(back.is_explicit(), include);
    const auto again = back.materialize();
    ASSERT_EQ(again.size(), nodes.size());
    for (const auto& [w, s] : nodes) {
      EXPECT_EQ(again.at(w).lo, s.lo) << cantor::to_string(w);
      EXPECT_EQ(again.at(w).hi, s.hi) << cantor::to_string(w);
    }
  }
  EXPECT_THROW(io::tree_from_json(io::parse_json("{\"format\": \"other\"}")), Error);
  EXPECT_THROW(io::parse_json("{"), Error);
}

TEST(Cli, HarperBandsOutput) {
  const auto r = cli("harper bands --p 1 --q 3");
  ASSERT_EQ(r.code, 0);
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0][0], "p");
  const auto bs = harper::band_set(1, 3);
  for (int l = 0; l < 3; ++l) EXPECT_EQ(std::stod(rows[l + 1][4]), bs.bands[l].lower);
  const auto j = cli("harper bands --p 1 --q 3 --format json");
  ASSERT_EQ(j.code, 0);
  EXPECT_EQ(io::parse_json(j.out)["q"], 3);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli("--help").code, 0);
  EXPECT_EQ(cli("harper bands --p 1").code, 2);
  EXPECT_EQ(cli("nonsense").code, 2);
  EXPECT_EQ(cli("harper bands --p 2 --q 4").code, 1);
  EXPECT_EQ(cli("cantor bound --alpha \"[;50]\" --config defaults").code, 0);
  EXPECT_EQ(cli("cantor bound --alpha \"[;50]\" --config defaults --strict").code, 1);
  EXPECT_EQ(cli("cantor check --tree /nonexistent/tree.json").code, 1);
}

TEST(Cli, CfStats) {
  const auto r = cli("cf stats --alpha \"[;5]\"");
  ASSERT_EQ(r.code, 0);
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"alpha", "depth", "beta", "a_star", "g_star"}));
  EXPECT_DOUBLE_EQ(std::stod(rows[1][3]), 5.0);
  EXPECT_NEAR(std::stod(rows[1][4]), 5.0, 1e-12);
}

TEST(Cli, BuildCheckAndRerunAreDeterministic) {
  const fs::path d = scratch();
  const std::string a = (d / "tree_a.json").string(), b = (d / "tree_b.json").string();
  const std::string build = "cantor build --alpha \"[;50]\" --depth 2 --seed 3 --nodes all --out ";
  ASSERT_EQ(cli(build + "\"" + a + "\"").code, 0);
  ASSERT_EQ(cli(build + "\"" + b + "\"").code, 0);
  EXPECT_EQ(io::read_file(a), io::read_file(b));
  EXPECT_TRUE(fs::exists(a + ".manifest.json"));
  const auto manifest = io::parse_json(io::read_file(a + ".manifest.json"));
  EXPECT_EQ(manifest["seed"], 3);

  const auto check = cli("cantor check --tree \"" + a + "\"");
  ASSERT_EQ(check.code, 0);
  EXPECT_TRUE(io::parse_json(check.out)["constraints"]["all_pass"].get<bool>());

  const auto w1 = cli("--threads 1 dim wa-curve --n 5,6 --qcap 500");
  const auto w2 = cli("--threads 2 dim wa-curve --n 5,6 --qcap 500");
  ASSERT_EQ(w1.code, 0);
  EXPECT_EQ(w1.out, w2.out);
}
