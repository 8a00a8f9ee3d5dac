// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. An optional argument selects a single suite.

#include <cstdio>
#include <string>

#include "illab/verify.hpp"

int main(int argc, char** argv) {
  const std::string suite = argc > 1 ? argv[1] : "all";
  const auto results = illab::run_verify_suite(suite);
  int failures = 0;
  for (const auto& r : results) {
    std::printf("[%s] %s (%s) [%.1fs]\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                r.detail.c_str(), r.seconds);
    std::fflush(stdout);
    if (!r.pass) ++failures;
  }
  std::printf("%zu/%zu criteria passed\n", results.size() - failures, results.size());
  return failures == 0 ? 0 : 1;
}
