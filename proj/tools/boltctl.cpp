#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "bolt/client.hpp"

namespace {

bool split_addr(const std::string& addr, std::string* host, std::uint16_t* port) {
  auto colon = addr.rfind(':');
  if (colon == std::string::npos) return false;
  *host = addr.substr(0, colon);
  try {
    *port = static_cast<std::uint16_t>(std::stoul(addr.substr(colon + 1)));
  } catch (...) {
    return false;
  }
  return true;
}

std::vector<std::uint8_t> read_payload(const std::string& file) {
  if (file.empty() || file == "-") {
    std::vector<std::uint8_t> data(std::istreambuf_iterator<char>(std::cin), {});
    return data;
  }
  std::ifstream in(file, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void print_record(const std::vector<std::uint8_t>& payload, bool hex) {
  if (!hex) {
    std::cout.write(reinterpret_cast<const char*>(payload.data()),
                    static_cast<std::streamsize>(payload.size()));
    std::cout << "\n";
    return;
  }
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(payload.size() * 2);
  for (std::uint8_t b : payload) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  std::cout << out << "\n";
}

int fail(const bolt::EngineError& err) {
  std::cerr << "error: " << bolt::to_string(err.code) << ": " << err.detail;
  if (err.boundary) std::cerr << " (boundary " << *err.boundary << ")";
  std::cerr << "\n";
  return 1;
}

const char* kind_name(bolt::LogKind k) {
  switch (k) {
    case bolt::LogKind::kRoot: return "root";
    case bolt::LogKind::kCFork: return "cfork";
    case bolt::LogKind::kSFork: return "sfork";
  }
  return "?";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"boltctl - operate on a running bolt service"};
  app.require_subcommand(1);

  std::string addr = "127.0.0.1:9090";
  app.add_option("--addr", addr, "service address host:port")
      ->envname("BOLT_ADDR")
      ->capture_default_str();

  bolt::LogId log = 1;
  bolt::Position from = 0;
  bolt::Position to = 0;
  std::optional<bolt::Position> past;
  bool promotable = false;
  bool dedicated = false;
  bool hex = false;
  std::string payload_file;

  CLI::App* append = app.add_subcommand("append", "append one record (payload from file or stdin)");
  append->add_option("--log", log, "target log id");
  append->add_option("--file", payload_file, "payload file (default stdin)");

  CLI::App* read = app.add_subcommand("read", "read records [from, to)");
  read->add_option("--log", log, "target log id");
  read->add_option("--from", from, "first position")->required();
  read->add_option("--to", to, "one past the last position")->required();
  read->add_flag("--hex", hex, "print payloads as hex");

  CLI::App* cfork = app.add_subcommand("cfork", "create a continuous fork");
  cfork->add_option("--log", log, "parent log id");
  cfork->add_flag("--promotable", promotable, "allow this fork to be promoted");
  cfork->add_flag("--dedicated", dedicated, "host on a dedicated broker");

  CLI::App* sfork = app.add_subcommand("sfork", "create a severed fork");
  sfork->add_option("--log", log, "parent log id");
  sfork->add_option("--past", past, "fork from this past offset");
  sfork->add_flag("--dedicated", dedicated, "host on a dedicated broker");

  CLI::App* promote = app.add_subcommand("promote", "promote a promotable continuous fork");
  promote->add_option("--log", log, "fork log id")->required();

  CLI::App* squash = app.add_subcommand("squash", "delete a fork and its descendants");
  squash->add_option("--log", log, "fork log id")->required();

  CLI::App* tail = app.add_subcommand("tail", "print the next free position");
  tail->add_option("--log", log, "log id");

  app.add_subcommand("describe", "dump the inheritance forest");

  CLI11_PARSE(app, argc, argv);

  std::string host;
  std::uint16_t port = 0;
  if (!split_addr(addr, &host, &port)) {
    std::cerr << "boltctl: bad --addr value: " << addr << "\n";
    return 2;
  }
  auto client = bolt::BoltClient::connect(host, port);
  if (!client.ok()) return fail(client.error());
  bolt::BoltClient& c = *client.value();

  if (append->parsed()) {
    auto payload = read_payload(payload_file);
    auto res = c.append(log, payload);
    if (!res.ok()) return fail(res.error());
    if (res.value()) {
      std::cout << *res.value() << "\n";
    } else {
      std::cout << "withheld\n";
    }
  } else if (read->parsed()) {
    auto res = c.read(log, from, to);
    if (!res.ok()) return fail(res.error());
    for (const auto& record : res.value()) print_record(record, hex);
  } else if (cfork->parsed()) {
    auto res = c.cfork(log, promotable, dedicated);
    if (!res.ok()) return fail(res.error());
    std::cout << res.value() << "\n";
  } else if (sfork->parsed()) {
    auto res = c.sfork(log, past, dedicated);
    if (!res.ok()) return fail(res.error());
    std::cout << res.value() << "\n";
  } else if (promote->parsed()) {
    auto res = c.promote(log);
    if (!res.is_ok()) return fail(res.error());
    std::cout << "promoted\n";
  } else if (squash->parsed()) {
    auto res = c.squash(log);
    if (!res.ok()) return fail(res.error());
    for (bolt::LogId id : res.value()) std::cout << id << "\n";
  } else if (tail->parsed()) {
    auto res = c.get_tail(log);
    if (!res.ok()) return fail(res.error());
    if (res.value()) {
      std::cout << *res.value() << "\n";
    } else {
      std::cout << "withheld\n";
    }
  } else {  // describe
    auto res = c.describe();
    if (!res.ok()) return fail(res.error());
    for (const bolt::LogInfo& info : res.value()) {
      std::cout << info.id << "\t" << kind_name(info.kind) << "\tparent=";
      if (info.parent == bolt::kNoLog) {
        std::cout << "-";
      } else {
        std::cout << info.parent;
      }
      std::cout << "\tfp=";
      if (info.fork_point) {
        std::cout << *info.fork_point;
      } else {
        std::cout << "-";
      }
      std::cout << "\ttail=";
      if (info.tail) {
        std::cout << *info.tail;
      } else {
        std::cout << "withheld";
      }
      std::cout << (info.promotable ? "\tpromotable" : "") << "\tbroker=" << info.broker << "\n";
    }
  }
  return 0;
}
