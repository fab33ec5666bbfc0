#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "cola/canonical.hpp"

namespace cola {

/// Append-only, content-addressed store of canonical response bytes.
///
/// On disk the directory holds `records.bin`, a sequence of
/// `(hash: 32 bytes, len: u64 little-endian, bytes)` records, and the sidecar
/// `records.idx` of `(hash, offset: u64 little-endian)` entries. A missing or
/// stale sidecar is rebuilt from the record log on open; a torn trailing
/// record (crash mid-append) is truncated away.
///
/// Many concurrent readers, one writer at a time.
class ScoreCache {
 public:
  explicit ScoreCache(std::filesystem::path directory);
  ~ScoreCache();

  ScoreCache(const ScoreCache&) = delete;
  ScoreCache& operator=(const ScoreCache&) = delete;

  std::optional<std::string> get(const Sha256& hash) const;
  bool contains(const Sha256& hash) const;

  /// Re-putting identical bytes is a no-op; different bytes under an existing
  /// hash throw CacheConflict.
  void put(const Sha256& hash, std::string_view bytes);

  struct Stats {
    std::size_t entries = 0;
    std::uint64_t log_bytes = 0;
    bool index_rebuilt = false;
  };
  Stats stats() const;

  const std::filesystem::path& directory() const noexcept { return directory_; }

  static constexpr const char* kLogName = "records.bin";
  static constexpr const char* kIndexName = "records.idx";

 private:
  struct HashKey {
    std::size_t operator()(const Sha256& h) const noexcept;
  };

  void open_files();
  void load_index();
  void scan_log_from(std::uint64_t offset);
  std::string read_body(std::uint64_t offset) const;

  std::filesystem::path directory_;
  int log_fd_ = -1;
  int index_fd_ = -1;
  std::uint64_t log_end_ = 0;
  bool index_rebuilt_ = false;
  std::unordered_map<Sha256, std::uint64_t, HashKey> index_;
  mutable std::shared_mutex mutex_;
};

}  // namespace cola
