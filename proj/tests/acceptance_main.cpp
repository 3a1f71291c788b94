// Runs the numbered acceptance criteria (all of them without arguments) and
// prints one line per criterion. Exit status 1 if any fails.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "parisi/acceptance.hpp"

int main(int argc, char** argv) {
  using namespace parisi::acceptance;
  std::vector<int> ids;
  std::string json_path;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--json" && i + 1 < argc) {
      json_path = argv[++i];
    } else {
      ids.push_back(std::atoi(a.c_str()));
    }
  }
  if (ids.empty())
    for (int id = 1; id <= kCriteria; ++id) ids.push_back(id);

  bool all = true;
  nlohmann::json out = nlohmann::json::array();
  for (int id : ids) {
    const CriterionResult r = run_criterion(id);
    std::printf("%s\n", format_line(r).c_str());
    std::fflush(stdout);
    all = all && r.pass();
    out.push_back(to_json(r));
  }
  if (!json_path.empty()) {
    if (FILE* f = std::fopen(json_path.c_str(), "w")) {
      std::fputs(out.dump(2).c_str(), f);
      std::fclose(f);
    }
  }
  return all ? 0 : 1;
}
