#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "colog/errors.hpp"
#include "colog/log_ingest.hpp"

using namespace colog;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& content) {
    static int counter = 0;
    path = "colog_test_ingest_" + std::to_string(counter++) + ".tmp";
    std::ofstream out(path, std::ios::binary);
    out << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("syslog header pattern extracts the named fields") {
  const auto pattern = HeaderPattern::named("syslog");
  const LogRecord rec = pattern.split("Jun 9 06:06:20 host1 sshd[2094]: Failed password", 0);
  CHECK(rec.timestamp == "Jun 9 06:06:20");
  CHECK(rec.host == "host1");
  CHECK(rec.service == "sshd");
  CHECK(rec.message == "Failed password");
  CHECK_FALSE(rec.header_only);
}

TEST_CASE("unmatched lines fall back to whole-line message") {
  const auto pattern = HeaderPattern::named("syslog");
  const LogRecord rec = pattern.split("not a syslog line at all", 3);
  CHECK(rec.message == "not a syslog line at all");
  CHECK(rec.line_no == 3);
  CHECK_FALSE(rec.timestamp.has_value());
}

TEST_CASE("header-only entries are flagged") {
  const auto pattern = HeaderPattern::named("generic");
  CHECK(pattern.split("[c010ce54>] 0xf/0x2e", 0).header_only);
  CHECK_FALSE(pattern.split("mtrr wrmsr failed", 0).header_only);
}

TEST_CASE("invalid pattern is a configuration error at load time") {
  CHECK_THROWS_AS(HeaderPattern("([unclosed"), ConfigError);
  CHECK_THROWS_AS(HeaderPattern("(?<other>.*)"), ConfigError);  // no message group
  CHECK_THROWS_AS(HeaderPattern::named("nonsense"), ConfigError);
}

TEST_CASE("split_file skips blank lines and keeps source line numbers") {
  TempFile f("alpha one\n\nbeta two\ngamma three\n");
  const auto records = split_file(f.path, HeaderPattern::named("generic"));
  REQUIRE(records.size() == 3);
  CHECK(records[0].line_no == 0);
  CHECK(records[1].line_no == 2);
  CHECK(records[2].line_no == 3);
  for (std::size_t i = 1; i < records.size(); ++i)
    CHECK(records[i].line_no > records[i - 1].line_no);
}

TEST_CASE("three-line file yields three records") {
  TempFile f("Jun 9 06:06:20 h1 sshd[1]: a b\nJun 9 06:06:21 h1 sshd[1]: c d\nJun 9 06:06:22 h1 sshd[1]: e f\n");
  const auto records = split_file(f.path, HeaderPattern::named("syslog"));
  REQUIRE(records.size() == 3);
  CHECK(records[0].line_no == 0);
  CHECK(records[2].line_no == 2);
  CHECK(records[1].message == "c d");
}

TEST_CASE("unreadable file raises a data error naming the path") {
  CHECK_THROWS_WITH_AS(split_file("/no/such/file.log", HeaderPattern::named("generic")),
                       doctest::Contains("/no/such/file.log"), DataError);
}

TEST_CASE("invalid UTF-8 bytes are replaced, parsing continues") {
  TempFile f(std::string("ok line\nbad \xff\xfe byte\n"));
  const auto records = split_file(f.path, HeaderPattern::named("generic"));
  REQUIRE(records.size() == 2);
  CHECK(records[1].message.find("\xEF\xBF\xBD") != std::string::npos);
}
