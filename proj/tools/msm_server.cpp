#include <csignal>
#include <iostream>

#include "msm/service.hpp"

namespace {
msm::service::Server* running = nullptr;
void on_signal(int) {
  if (running != nullptr) running->stop();
}
}  // namespace

int main() {
  const auto config = msm::service::Config::from_env();
  msm::service::Server server(config);
  const int port = server.bind();
  if (port < 0) {
    std::cerr << "cannot bind " << config.host << ":" << config.port << "\n";
    return 1;
  }
  running = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on " << config.host << ":" << port << "\n";
  return server.listen() ? 0 : 1;
}
