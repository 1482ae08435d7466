#include <doctest.h>

#include "colog/config.hpp"
#include "colog/errors.hpp"

using namespace colog;

TEST_CASE("config parses key = value with comments and trimming") {
  const Config cfg = Config::from_string("a = 1\n# comment\n b.c =  hello  # tail\nflag = true\n");
  CHECK(cfg.get_int("a") == 1);
  CHECK(cfg.get_string("b.c") == "hello");
  CHECK(cfg.get_bool("flag"));
  CHECK(cfg.get_int("missing", 7) == 7);
  CHECK_THROWS_AS(cfg.get_string("missing"), ConfigError);
}

TEST_CASE("config rejects malformed lines, duplicates and bad numbers") {
  CHECK_THROWS_AS(Config::from_string("just words\n"), ConfigError);
  CHECK_THROWS_AS(Config::from_string("a = 1\na = 2\n"), ConfigError);
  const Config cfg = Config::from_string("x = abc\n");
  CHECK_THROWS_AS(cfg.get_int("x"), ConfigError);
  CHECK_THROWS_AS(cfg.get_bool("x"), ConfigError);
}

TEST_CASE("unknown keys are rejected against the schema") {
  const Config cfg = Config::from_string("train.lr = 0.1\nprepare.file.0 = a.log\ntypo.key = 1\n");
  CHECK_THROWS_WITH_AS(cfg.reject_unknown_keys({"train.lr"}, {"prepare.file."}),
                       doctest::Contains("typo.key"), ConfigError);
  const Config ok = Config::from_string("train.lr = 0.1\nprepare.file.3 = b.log\n");
  CHECK_NOTHROW(ok.reject_unknown_keys({"train.lr"}, {"prepare.file."}));
}

TEST_CASE("split ratio lists parse") {
  const Config cfg = Config::from_string("split = 0.6,0.2,0.2\n");
  const auto v = cfg.get_doubles("split");
  REQUIRE(v.size() == 3);
  CHECK(v[0] == doctest::Approx(0.6));
}
