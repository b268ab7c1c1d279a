// Acceptance gate: runs every reproduction criterion and prints one line each.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include "spherevortex/verify.hpp"

int main(int argc, char** argv) {
  spherevortex::verify::VerifyOptions opt;
  for (int k = 1; k < argc; ++k) {
    if (std::strcmp(argv[k], "--skip-slow") == 0) {
      opt.skip_slow = true;
    } else {
      opt.only.push_back(std::atoi(argv[k]));
    }
  }
  const auto results = spherevortex::verify::run_all(opt, [](const auto& r) {
    std::printf("%s\n", spherevortex::verify::format_line(r).c_str());
    std::fflush(stdout);
  });
  int failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed == 0 ? 0 : 1;
}
