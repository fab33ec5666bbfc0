#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cola/backend.hpp"

namespace cola::testing {

/// In-process HTTP backend on 127.0.0.1 serving every /v1 endpoint from a
/// SyntheticLm. `override_handler` can replace any response for fault
/// injection.
class TestServer {
 public:
  using Override = std::function<bool(Endpoint, const std::string& body, httplib::Response&)>;

  explicit TestServer(Override override_handler = {});
  ~TestServer();

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::size_t requests() const noexcept { return requests_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> requests_{0};
};

}  // namespace cola::testing
