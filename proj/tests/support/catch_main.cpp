#include <catch2/catch_amalgamated.hpp>

#include "support/test_config.hpp"

#ifndef SCENWEAVE_FIXTURES_DEFAULT
#define SCENWEAVE_FIXTURES_DEFAULT "fixtures"
#endif

namespace testcfg {

std::string& cli_bin() {
  static std::string value;
  return value;
}

std::string& fixtures_dir() {
  static std::string value = SCENWEAVE_FIXTURES_DEFAULT;
  return value;
}

}  // namespace testcfg

int main(int argc, char* argv[]) {
  Catch::Session session;

  using namespace Catch::Clara;
  auto cli = session.cli()
             | Opt(testcfg::cli_bin(), "path")["--cli-bin"]("path to the built command line tool")
             | Opt(testcfg::fixtures_dir(), "dir")["--fixtures"]("fixture directory");
  session.cli(cli);

  if (int rc = session.applyCommandLine(argc, argv); rc != 0) return rc;
  return session.run();
}
