#include "dualdimer/dataset.hpp"

#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace dualdimer {

  void write_dataset_csv(std::filesystem::path const& path, Dataset const& rows) {
    std::ofstream out(path);
    if (!out) {
      throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out.precision(std::numeric_limits<double>::max_digits10);
    out << "t,x,y,T\n";
    for (auto const& r : rows) {
      out << r.t << ',' << r.x << ',' << r.y << ',' << r.value << '\n';
    }
  }

  Dataset read_dataset_csv(std::filesystem::path const& path) {
    std::ifstream in(path);
    if (!in) {
      throw std::runtime_error("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line.rfind("t,x,y", 0) != 0) {
      throw std::runtime_error(path.string() + ": expected a 't,x,y,T' header");
    }
    Dataset rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) {
        continue;
      }
      std::istringstream ss(line);
      DataPoint p;
      char c1 = 0, c2 = 0, c3 = 0;
      if (!(ss >> p.t >> c1 >> p.x >> c2 >> p.y >> c3 >> p.value) || c1 != ',' || c2 != ',' || c3 != ',') {
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed row");
      }
      rows.push_back(p);
    }
    return rows;
  }

}  // namespace dualdimer
