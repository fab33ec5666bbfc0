#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cola/event_model.hpp"

namespace cola::testing {

/// Directory holding checked-in fixtures.
std::filesystem::path fixture_dir();

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

EventSequence make_sequence(std::string id, const std::vector<std::string>& events, const std::vector<bool>& labels = {},
                            Split split = Split::Unsplit);

/// The eight-sequence fixture dataset used by the replay tests.
std::vector<EventSequence> fixture_dataset();

/// COPES-shaped synthetic dataset: 340 five-event sequences with k counts
/// {0: 12, 1: 192, 2: 124, 3: 12}, gold positions drawn from `seed`.
std::vector<EventSequence> copes_shaped_dataset(std::uint64_t seed);

std::string read_file(const std::filesystem::path& path);

}  // namespace cola::testing
