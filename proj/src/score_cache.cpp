#include "cola/score_cache.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <vector>

#include "cola/error.hpp"

namespace cola {

namespace {

constexpr std::size_t kHeaderSize = 32 + 8;
constexpr std::size_t kIndexEntrySize = 32 + 8;

void put_u64le(std::uint64_t v, std::uint8_t* out) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint64_t get_u64le(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(in[i]) << (8 * i);
  return v;
}

[[noreturn]] void io_error(const std::string& what) {
  throw Error(ErrorCode::Io, what + ": " + std::strerror(errno));
}

void read_exact(int fd, void* buf, std::size_t n, std::uint64_t offset) {
  auto* p = static_cast<char*>(buf);
  while (n > 0) {
    const ssize_t r = ::pread(fd, p, n, static_cast<off_t>(offset));
    if (r < 0) {
      if (errno == EINTR) continue;
      io_error("cache read");
    }
    if (r == 0) throw Error(ErrorCode::Io, "cache read past end of file");
    p += r;
    n -= static_cast<std::size_t>(r);
    offset += static_cast<std::uint64_t>(r);
  }
}

void write_exact(int fd, const void* buf, std::size_t n, std::uint64_t offset) {
  const auto* p = static_cast<const char*>(buf);
  while (n > 0) {
    const ssize_t w = ::pwrite(fd, p, n, static_cast<off_t>(offset));
    if (w < 0) {
      if (errno == EINTR) continue;
      io_error("cache write");
    }
    p += w;
    n -= static_cast<std::size_t>(w);
    offset += static_cast<std::uint64_t>(w);
  }
}

std::uint64_t file_size(int fd) {
  struct stat st {};
  if (::fstat(fd, &st) != 0) io_error("cache stat");
  return static_cast<std::uint64_t>(st.st_size);
}

}  // namespace

std::size_t ScoreCache::HashKey::operator()(const Sha256& h) const noexcept {
  std::size_t v = 0;
  std::memcpy(&v, h.data(), sizeof v);
  return v;
}

ScoreCache::ScoreCache(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::error_code ec;
  std::filesystem::create_directories(directory_, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create cache directory " + directory_.string());
  open_files();
}

ScoreCache::~ScoreCache() {
  if (log_fd_ >= 0) ::close(log_fd_);
  if (index_fd_ >= 0) ::close(index_fd_);
}

void ScoreCache::open_files() {
  const auto log_path = directory_ / kLogName;
  const auto index_path = directory_ / kIndexName;
  log_fd_ = ::open(log_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (log_fd_ < 0) io_error("open " + log_path.string());

  const bool have_index = std::filesystem::exists(index_path);
  index_fd_ = ::open(index_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (index_fd_ < 0) io_error("open " + index_path.string());

  if (have_index) {
    load_index();
  } else {
    index_rebuilt_ = true;
    scan_log_from(0);
  }
}

void ScoreCache::load_index() {
  const std::uint64_t log_size = file_size(log_fd_);
  const std::uint64_t idx_size = file_size(index_fd_);
  std::vector<std::uint8_t> raw(idx_size - idx_size % kIndexEntrySize);
  if (!raw.empty()) read_exact(index_fd_, raw.data(), raw.size(), 0);

  std::uint64_t resume = 0;
  bool consistent = idx_size % kIndexEntrySize == 0;
  for (std::size_t pos = 0; consistent && pos < raw.size(); pos += kIndexEntrySize) {
    Sha256 hash;
    std::memcpy(hash.data(), raw.data() + pos, 32);
    const std::uint64_t offset = get_u64le(raw.data() + pos + 32);
    if (offset + kHeaderSize > log_size) {
      consistent = false;
      break;
    }
    std::uint8_t header[kHeaderSize];
    read_exact(log_fd_, header, kHeaderSize, offset);
    const std::uint64_t len = get_u64le(header + 32);
    if (std::memcmp(header, hash.data(), 32) != 0 || offset + kHeaderSize + len > log_size) {
      consistent = false;
      break;
    }
    index_.emplace(hash, offset);
    resume = std::max(resume, offset + kHeaderSize + len);
  }

  if (!consistent) {
    index_.clear();
    if (::ftruncate(index_fd_, 0) != 0) io_error("truncate index");
    index_rebuilt_ = true;
    resume = 0;
  }
  scan_log_from(resume);
}

void ScoreCache::scan_log_from(std::uint64_t offset) {
  const std::uint64_t size = file_size(log_fd_);
  std::uint64_t index_end = file_size(index_fd_);
  while (offset < size) {
    if (offset + kHeaderSize > size) break;
    std::uint8_t header[kHeaderSize];
    read_exact(log_fd_, header, kHeaderSize, offset);
    const std::uint64_t len = get_u64le(header + 32);
    if (offset + kHeaderSize + len > size) break;
    Sha256 hash;
    std::memcpy(hash.data(), header, 32);
    if (index_.emplace(hash, offset).second) {
      std::uint8_t entry[kIndexEntrySize];
      std::memcpy(entry, hash.data(), 32);
      put_u64le(offset, entry + 32);
      write_exact(index_fd_, entry, kIndexEntrySize, index_end);
      index_end += kIndexEntrySize;
    }
    offset += kHeaderSize + len;
  }
  if (offset < size && ::ftruncate(log_fd_, static_cast<off_t>(offset)) != 0)
    io_error("truncate torn record");
  log_end_ = offset;
}

std::string ScoreCache::read_body(std::uint64_t offset) const {
  std::uint8_t header[kHeaderSize];
  read_exact(log_fd_, header, kHeaderSize, offset);
  const std::uint64_t len = get_u64le(header + 32);
  std::string body(len, '\0');
  if (len > 0) read_exact(log_fd_, body.data(), len, offset + kHeaderSize);
  return body;
}

std::optional<std::string> ScoreCache::get(const Sha256& hash) const {
  std::shared_lock lock(mutex_);
  const auto it = index_.find(hash);
  if (it == index_.end()) return std::nullopt;
  return read_body(it->second);
}

bool ScoreCache::contains(const Sha256& hash) const {
  std::shared_lock lock(mutex_);
  return index_.count(hash) != 0;
}

void ScoreCache::put(const Sha256& hash, std::string_view bytes) {
  std::unique_lock lock(mutex_);
  if (const auto it = index_.find(hash); it != index_.end()) {
    if (read_body(it->second) == bytes) return;
    throw Error(ErrorCode::CacheConflict, "different response already stored for " + to_hex(hash));
  }
  std::vector<std::uint8_t> record(kHeaderSize + bytes.size());
  std::memcpy(record.data(), hash.data(), 32);
  put_u64le(bytes.size(), record.data() + 32);
  if (!bytes.empty()) std::memcpy(record.data() + kHeaderSize, bytes.data(), bytes.size());
  const std::uint64_t offset = log_end_;
  write_exact(log_fd_, record.data(), record.size(), offset);
  log_end_ += record.size();

  std::uint8_t entry[kIndexEntrySize];
  std::memcpy(entry, hash.data(), 32);
  put_u64le(offset, entry + 32);
  write_exact(index_fd_, entry, kIndexEntrySize, file_size(index_fd_));
  index_.emplace(hash, offset);
}

ScoreCache::Stats ScoreCache::stats() const {
  std::shared_lock lock(mutex_);
  return Stats{index_.size(), log_end_, index_rebuilt_};
}

}  // namespace cola
