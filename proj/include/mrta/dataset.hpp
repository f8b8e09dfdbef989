#ifndef MRTA_DATASET_HPP_
#define MRTA_DATASET_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mrta/domain.hpp"

namespace mrta {

enum class ArrivalDist : std::uint8_t { kGaussian, kUniform };

const char* to_string(ArrivalDist d);
ArrivalDist parse_arrival_dist(const std::string& s);

struct DatasetSpec {
  int n_tasks = 505;
  ArrivalDist dist = ArrivalDist::kGaussian;
  double mean = 600.0;  // gaussian
  double stddev = 50.0;
  double low = 0.0;  // uniform
  double high = 1000.0;
  double width = 64.0;
  double height = 64.0;
  std::uint64_t seed = 0;
};

// Origins and destinations uniform over the rectangle; arrival times from the
// chosen distribution, Gaussian draws below zero are redrawn. Sorted by arrival
// time with ids assigned in that order.
std::vector<Task> generate_dataset(const DatasetSpec& spec);

// One JSON object per line: {"id","ox","oy","dx","dy","t"}.
void write_dataset(std::ostream& out, const std::vector<Task>& tasks);
void write_dataset_file(const std::string& path, const std::vector<Task>& tasks);

// Throws ValidationError on malformed or unsorted records.
std::vector<Task> read_dataset(std::istream& in);
std::vector<Task> read_dataset_file(const std::string& path);

}  // namespace mrta

#endif  // MRTA_DATASET_HPP_
