#include <cstdlib>
#include <doctest.h>
#include <filesystem>

#include "tsr/config.hpp"
#include "tsr/io.hpp"

using namespace tsr;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* tag) {
  const auto dir = fs::temp_directory_path() / (std::string("tsr_test_") + tag);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("format_double emits shortest round-trip strings") {
  CHECK(format_double(0.25) == "0.25");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(-1.5) == "-1.5");
  CHECK(format_double(0.0) == "0");

  for (const double v : {0.1, 1.0 / 3.0, 1e-300, 12345.6789, -9.87e12, 5e-324}) {
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("atomic writes create parents and leave no temp files") {
  const auto dir = fresh_dir("io");
  const auto path = dir / "a" / "b" / "data.csv";

  write_text_atomic(path, "hello\n");
  CHECK(read_text(path) == "hello\n");
  write_text_atomic(path, "replaced");
  CHECK(read_text(path) == "replaced");

  int entries = 0;
  for (const auto& e : fs::directory_iterator(path.parent_path())) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 1);  // no .tmp sibling left behind

  CHECK_THROWS_AS(read_text(dir / "missing.txt"), io_error);

  // a regular file where a directory is needed makes the write fail cleanly
  write_text_atomic(dir / "blocker", "x");
  CHECK_THROWS_AS(write_text_atomic(dir / "blocker" / "sub" / "f.txt", "y"),
                  io_error);
  fs::remove_all(dir);
}

TEST_CASE("csv tables stamp a schema line and check row width") {
  CsvTable t("tsr.bounds.v1", {"t", "error_mc", "satisfied"});
  t.add_row(0.5, 1.25e-4, true);
  t.add_row(0.75, 0.0, false);
  CHECK(t.rows() == 2);
  CHECK(t.str() ==
        "# schema: tsr.bounds.v1\n"
        "t,error_mc,satisfied\n"
        "0.5,0.000125,true\n"
        "0.75,0,false\n");

  CHECK_THROWS_AS(t.add_row(1.0), param_error);
  CHECK_THROWS_AS((CsvTable{"s", {}}), param_error);

  // mixed field types including strings and 64-bit seeds
  CsvTable m("tsr.metrics.v1", {"policy", "seed", "value"});
  m.add_row("tsr", std::uint64_t{18446744073709551615ull}, 0.1);
  CHECK(m.str() ==
        "# schema: tsr.metrics.v1\n"
        "policy,seed,value\n"
        "tsr,18446744073709551615,0.1\n");

  const auto dir = fresh_dir("csv");
  m.write(dir / "metrics.csv");
  CHECK(read_text(dir / "metrics.csv") == m.str());
  fs::remove_all(dir);
}

TEST_CASE("config parsing: sections, comments, and typed values") {
  const auto cfg = Config::parse(
      "# top comment\r\n"
      "experiment = \"toy1d\"  # inline\n"
      "seed = 18446744073709551615\n"
      "\n"
      "[sampler]\n"
      "steps = 1000\n"
      "shift = -2.5\n"
      "plus = +5\n"
      "deep.key = true\n"
      "label = \"a # not a comment\"\n"
      "[lists]\n"
      "means = [-5, -3, -1, 1, 3, 5]\n"
      "names = [\"a\", \"b\"]\n"
      "grid = [[0, 1], [2, 3], [4, 5]]\n"
      "nothing = []\n");

  CHECK(cfg.get_string("experiment") == "toy1d");
  CHECK(cfg.get_u64("seed") == 18446744073709551615ull);
  CHECK(cfg.get_int("sampler.steps") == 1000);
  CHECK(cfg.get_double("sampler.shift") == -2.5);
  CHECK(cfg.get_double("sampler.plus") == 5.0);
  CHECK(cfg.get_bool("sampler.deep.key"));
  CHECK(cfg.get_string("sampler.label") == "a # not a comment");

  const auto means = cfg.get_double_list("lists.means");
  REQUIRE(means.size() == 6);
  CHECK(means.front() == -5.0);
  CHECK(means.back() == 5.0);
  CHECK(cfg.get_string_list("lists.names") ==
        std::vector<std::string>{"a", "b"});

  const Mat grid = cfg.get_mat("lists.grid");
  REQUIRE(grid.rows() == 3);
  REQUIRE(grid.cols() == 2);
  CHECK(grid(2, 1) == 5.0);

  const Mat flat = cfg.get_mat("lists.means");
  CHECK(flat.rows() == 6);
  CHECK(flat.cols() == 1);

  CHECK(cfg.get_double_list("lists.nothing").empty());
  CHECK_THROWS_AS((void)cfg.get_mat("lists.nothing"), config_error);

  CHECK(cfg.has("sampler.steps"));
  CHECK(!cfg.has("sampler.missing"));
  CHECK(cfg.get_int_or("sampler.missing", 7) == 7);
  CHECK(cfg.get_string_or("sampler.missing", "d") == "d");
  CHECK(cfg.get_double_or("sampler.shift", 0.0) == -2.5);
}

TEST_CASE("config parsing rejects malformed input") {
  CHECK_THROWS_AS((void)Config::parse("key"), config_error);
  CHECK_THROWS_AS((void)Config::parse("key ="), config_error);
  CHECK_THROWS_AS((void)Config::parse("= 3"), config_error);
  CHECK_THROWS_AS((void)Config::parse("bad key = 3"), config_error);
  CHECK_THROWS_AS((void)Config::parse("[sec"), config_error);
  CHECK_THROWS_AS((void)Config::parse("k = \"open"), config_error);
  CHECK_THROWS_AS((void)Config::parse("k = \"a\" junk"), config_error);
  CHECK_THROWS_AS((void)Config::parse("k = \"\\n\""), config_error);
  CHECK_THROWS_AS((void)Config::parse("k = [1, 2"), config_error);
  CHECK_THROWS_AS((void)Config::parse("k = [1,, 2]"), config_error);
  CHECK_THROWS_AS((void)Config::parse("k = nonsense"), config_error);
  CHECK_THROWS_AS((void)Config::parse("k = inf"), config_error);
  CHECK_THROWS_AS((void)Config::parse("k = nan"), config_error);
  CHECK_THROWS_AS((void)Config::parse("k = 1\nk = 2"), config_error);

  const auto cfg = Config::parse("n = 4.2\ns = \"x\"\nb = true");
  CHECK_THROWS_AS((void)cfg.get_int("n"), config_error);       // not an integer
  CHECK_THROWS_AS((void)cfg.get_u64("n"), config_error);
  CHECK_THROWS_AS((void)cfg.get_double("s"), config_error);    // wrong kind
  CHECK_THROWS_AS((void)cfg.get_string("b"), config_error);
  CHECK_THROWS_AS((void)cfg.get_double("absent"), config_error);
  CHECK_THROWS_AS((void)cfg.get_double_list("n"), config_error);
}

TEST_CASE("config merge layers defaults under overrides") {
  auto base = Config::parse("a = 1\nb = 2");
  const auto over = Config::parse("b = 20\nc = 30");
  base.merge(over);
  CHECK(base.get_int("a") == 1);
  CHECK(base.get_int("b") == 20);
  CHECK(base.get_int("c") == 30);
}

TEST_CASE("config serialization is canonical and round-trips") {
  Config cfg;
  cfg.set_string("experiment", "sweep");
  cfg.set_u64("seed", 18446744073709551615ull);
  cfg.set_double("sigma", 0.1);
  cfg.set_int("steps", -3);
  cfg.set_bool("check", false);
  cfg.set_double_list("k_list", {0.5, 2.0, 5.0, 10.0});
  cfg.set_string_list("names", {"x", "y"});
  cfg.set_string("quote", "a\"b\\c");
  Mat m(2, 2);
  m << 0.0, 1.5, -2.0, 3.0;
  cfg.set_mat("means", m);

  const std::string text = cfg.serialize();
  CHECK(text ==
        "check = false\n"
        "experiment = \"sweep\"\n"
        "k_list = [0.5, 2, 5, 10]\n"
        "means = [[0, 1.5], [-2, 3]]\n"
        "names = [\"x\", \"y\"]\n"
        "quote = \"a\\\"b\\\\c\"\n"
        "seed = 18446744073709551615\n"
        "sigma = 0.1\n"
        "steps = -3\n");

  // byte-stable under a parse/serialize cycle (the manifest property)
  const auto reparsed = Config::parse(text);
  CHECK(reparsed.serialize() == text);
  CHECK(reparsed.get_string("quote") == "a\"b\\c");
  CHECK(reparsed.get_mat("means")(1, 0) == -2.0);
  CHECK(reparsed.get_u64("seed") == 18446744073709551615ull);
}
