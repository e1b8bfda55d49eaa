#include "evigp/dataset.hpp"

#include "evigp/csv.hpp"

namespace evigp {

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::vector<std::string> header;
  for (int j = 0; j < data.d(); ++j) header.push_back("x" + std::to_string(j + 1));
  header.push_back("y");
  Matrix values(data.n(), data.d() + 1);
  values.leftCols(data.d()) = data.X;
  values.col(data.d()) = data.y;
  write_csv(path, header, values);
}

Dataset read_dataset_csv(const std::string& path) {
  CsvTable table = read_csv(path);
  if (table.values.cols() < 2)
    throw std::invalid_argument("read_dataset_csv: need at least one input column plus y");
  Dataset data;
  const int d = static_cast<int>(table.values.cols()) - 1;
  data.X = table.values.leftCols(d);
  data.y = table.values.col(d);
  return data;
}

}  // namespace evigp
