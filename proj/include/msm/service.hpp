#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>

namespace msm::service {

struct Config {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t upload_limit = 32u << 20;
  std::chrono::seconds session_ttl{7200};
  std::chrono::milliseconds timeout{120000};
  std::string cors_origin = "*";
  std::optional<std::string> static_dir;

  // MSM_BIND, MSM_PORT, MSM_UPLOAD_LIMIT (bytes), MSM_SESSION_TTL (s),
  // MSM_TIMEOUT (s), MSM_CORS_ORIGIN, MSM_STATIC_DIR.
  static Config from_env();
};

class Server {
public:
  explicit Server(Config config = {});
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds to config.port (0 picks a free port) and returns the port, or -1.
  int bind();
  // Serves until stop() is called.
  bool listen();
  void stop();
  void wait_until_ready() const;

  std::size_t session_count() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace msm::service
