#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <numeric>
#include <sstream>

#include <unistd.h>

#include "cola/random.hpp"

#ifndef COLA_FIXTURE_DIR
#error "COLA_FIXTURE_DIR must be defined"
#endif

namespace cola::testing {

namespace fs = std::filesystem;

fs::path fixture_dir() { return COLA_FIXTURE_DIR; }

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("cola-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

EventSequence make_sequence(std::string id, const std::vector<std::string>& events, const std::vector<bool>& labels,
                            Split split) {
  EventSequence s;
  s.id = std::move(id);
  for (const auto& e : events) s.events.emplace_back(e);
  s.labels = labels;
  s.split = split;
  return s;
}

std::vector<EventSequence> fixture_dataset() {
  std::ifstream in(fixture_dir() / "copes_fixture.jsonl");
  return read_dataset(in);
}

std::vector<EventSequence> copes_shaped_dataset(std::uint64_t seed) {
  const std::pair<std::size_t, std::size_t> shape[] = {{0, 12}, {1, 192}, {2, 124}, {3, 12}};
  auto rng = make_rng(seed);
  std::vector<EventSequence> out;
  std::size_t id = 0;
  for (const auto& [k, count] : shape) {
    for (std::size_t c = 0; c < count; ++c) {
      std::vector<std::size_t> pos(4);
      std::iota(pos.begin(), pos.end(), std::size_t{0});
      shuffle(std::span<std::size_t>(pos), rng);
      std::vector<bool> labels(4, false);
      for (std::size_t j = 0; j < k; ++j) labels[pos[j]] = true;
      char name[16];
      std::snprintf(name, sizeof name, "s%04zu", id);
      out.push_back(make_sequence(name, {"a " + std::to_string(id), "b", "c", "d", "e"}, labels,
                                  id % 2 ? Split::Testing : Split::Validation));
      ++id;
    }
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cola::testing
