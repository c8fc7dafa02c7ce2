#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace stablesqf::io {

struct Series {
  std::string id;
  std::vector<double> values;
  std::size_t season = 12;
};

/// End-exclusive split markers: train = [0, train_end), validation =
/// [train_end, validation_end), test = [validation_end, size).
struct Split {
  std::size_t train_end = 0;
  std::size_t validation_end = 0;
  std::size_t test_end = 0;
};

struct Dataset {
  std::vector<Series> series;

  /// The last `test_len` points form the test region, the `validation_len`
  /// before them the validation region. Throws std::invalid_argument when a
  /// series leaves fewer than 2 training points.
  std::vector<Split> splits(std::size_t validation_len, std::size_t test_len) const;
  std::vector<std::vector<double>> values() const;
};

/// Raised for malformed input; the message carries the line number.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Long-format CSV with header `series_id,time_index,value`. Series keep the
/// order of first appearance; rows are sorted by time_index, which must be
/// contiguous per series.
Dataset read_dataset_csv(std::istream& in, std::size_t season = 12);
Dataset load_dataset(const std::filesystem::path& path, std::size_t season = 12);

void write_dataset_csv(std::ostream& out, const Dataset& data);
void save_dataset(const std::filesystem::path& path, const Dataset& data);

/// Shortest round-trip decimal text of `x`, independent of the locale.
std::string format_number(double x);

}  // namespace stablesqf::io
