#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include "bolt/service.hpp"

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

bool split_listen(const std::string& listen, std::string* host, std::uint16_t* port) {
  auto colon = listen.rfind(':');
  if (colon == std::string::npos) return false;
  *host = listen.substr(0, colon);
  try {
    *port = static_cast<std::uint16_t>(std::stoul(listen.substr(colon + 1)));
  } catch (...) {
    return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"boltd - forkable shared log service"};

  std::string listen = "127.0.0.1:9090";
  bolt::ServiceConfig cfg;
  cfg.cmdlog_path = "bolt-cmd.log";

  app.add_option("--listen", listen, "listen address as host:port")
      ->envname("BOLT_LISTEN")
      ->capture_default_str();
  app.add_option("--store", cfg.store, "object store backend: mem or fs:<dir>")
      ->envname("BOLT_STORE")
      ->capture_default_str();
  app.add_option("--cmdlog", cfg.cmdlog_path, "command log file")
      ->envname("BOLT_CMDLOG")
      ->capture_default_str();
  app.add_option("--snapshot", cfg.snapshot_path, "snapshot file (enables snapshots)")
      ->envname("BOLT_SNAPSHOT");
  app.add_option("--brokers", cfg.root_brokers, "brokers serving root logs")
      ->envname("BOLT_BROKERS")
      ->capture_default_str();
  app.add_option("--fork-brokers", cfg.fork_brokers, "brokers serving forks")
      ->envname("BOLT_FORK_BROKERS")
      ->capture_default_str();
  app.add_option("--flush-bytes", cfg.flush_bytes, "batch flush threshold in bytes")
      ->envname("BOLT_FLUSH_BYTES")
      ->capture_default_str();
  app.add_option("--linger-ms", cfg.linger_ms, "batch linger in milliseconds")
      ->envname("BOLT_LINGER_MS")
      ->capture_default_str();
  app.add_option("--cache-bytes", cfg.cache_bytes, "per-broker object cache capacity")
      ->envname("BOLT_CACHE_BYTES")
      ->capture_default_str();
  app.add_option("--roots", cfg.initial_roots, "number of root logs")
      ->envname("BOLT_ROOTS")
      ->capture_default_str();
  bool no_fsync = false;
  app.add_flag("--no-fsync", no_fsync, "skip fsync on the command log (testing only)")
      ->envname("BOLT_NO_FSYNC");

  CLI11_PARSE(app, argc, argv);
  cfg.fsync = !no_fsync;
  if (!split_listen(listen, &cfg.host, &cfg.port)) {
    std::cerr << "boltd: bad --listen value: " << listen << "\n";
    return 2;
  }

  auto svc = bolt::Service::start(cfg);
  if (!svc.ok()) {
    std::cerr << "boltd: startup failed: " << svc.error().detail << "\n";
    return 1;
  }
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cout << "boltd listening on " << cfg.host << ":" << svc.value()->port() << " (store "
            << cfg.store << ", cmdlog " << cfg.cmdlog_path << ")" << std::endl;

  while (!g_stop.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  std::cout << "boltd: shutting down" << std::endl;
  svc.value()->stop();
  return 0;
}
