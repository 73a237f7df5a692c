// Acceptance runner: one PASS/FAIL line per criterion. Arguments are
// criterion ids or suite names; no arguments runs everything.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "lrising/acceptance.hpp"

int main(int argc, char** argv) {
  namespace acc = lrising::acceptance;
  std::vector<int> ids;
  try {
    for (int k = 1; k < argc; ++k) {
      const std::string arg = argv[k];
      if (!arg.empty() && std::isdigit(static_cast<unsigned char>(arg[0]))) {
        ids.push_back(std::stoi(arg));
      } else {
        for (int id : acc::suite_criteria(arg)) ids.push_back(id);
      }
    }
    if (ids.empty()) ids = acc::suite_criteria("all");
    bool all = true;
    for (int id : ids) {
      const auto r = acc::run_criterion(id);
      std::cout << acc::report_line(r) << std::endl;
      all = all && r.pass;
    }
    return all ? EXIT_SUCCESS : EXIT_FAILURE;
  } catch (const std::exception& e) {
    std::cerr << "acceptance: " << e.what() << '\n';
    return 2;
  }
}
