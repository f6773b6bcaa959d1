// Desk-scale acceptance run: one PASS/FAIL line per criterion.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "bdlab/acceptance.hpp"

int main(int argc, char** argv) {
  bdlab::acceptance::Options opt;
  if (argc > 1) opt.out_dir = argv[1];
  if (const char* s = std::getenv("BDLAB_ACCEPTANCE_SEED")) opt.seed = std::stoull(s);
  bdlab::acceptance::Suite suite(opt);
  auto results = suite.run_all([](const auto& r) { std::cout << r.line() << std::endl; });
  auto summary = bdlab::acceptance::summary_json(results);
  if (!opt.out_dir.empty()) std::ofstream(opt.out_dir + "/acceptance.json") << summary.dump(2) << '\n';
  bool ok = summary["passed"].get<bool>();
  std::cout << (ok ? "all criteria passed" : "some criteria FAILED") << std::endl;
  return ok ? 0 : 1;
}
