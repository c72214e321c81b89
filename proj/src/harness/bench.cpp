#include "bolt/harness/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bolt/client.hpp"
#include "bolt/service.hpp"
#include "bolt/util/checksum.hpp"

namespace bolt::harness {

namespace {

using Clock = std::chrono::steady_clock;

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  std::size_t mid = v.size() / 2;
  if (v.size() % 2 == 1) return v[mid];
  return (v[mid - 1] + v[mid]) / 2.0;
}

double elapsed_ns(Clock::time_point a, Clock::time_point b) {
  return static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count());
}

// Appends `count` synthetic records to `log`, batched.
void pump_records(VariantEngine& eng, LogId log, std::uint64_t count, std::mt19937_64& rng,
                  std::size_t batch_size = 1024) {
  std::uint64_t done = 0;
  while (done < count) {
    SequenceBatch batch;
    batch.object = ObjectId{rng() | 1, rng() | 1};
    std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(batch_size, count - done));
    for (std::size_t i = 0; i < n; ++i) {
      batch.records.push_back(SequenceRecord{log, i * 64, 64});
    }
    ApplyResult res = eng.apply(Command{batch});
    if (!res.ok()) return;
    done += n;
  }
}

}  // namespace

double BenchReport::value_of(const std::string& name) const {
  for (const MetricRecord& m : metrics) {
    if (m.name == name) return m.value;
  }
  return 0;
}

std::string report_json(const BenchReport& report) {
  nlohmann::json j;
  j["bench"] = report.bench;
  j["seed"] = report.seed;
  j["metrics"] = nlohmann::json::array();
  for (const MetricRecord& m : report.metrics) {
    j["metrics"].push_back({{"name", m.name},
                            {"value", m.value},
                            {"unit", m.unit},
                            {"deterministic", m.deterministic}});
  }
  return j.dump(2);
}

std::string report_human(const BenchReport& report) {
  std::ostringstream os;
  os << "== " << report.bench << " (seed " << report.seed << ") ==\n";
  for (const MetricRecord& m : report.metrics) {
    os << "  " << m.name << " = " << m.value << " " << m.unit
       << (m.deterministic ? "" : "  [wall-clock]") << "\n";
  }
  return os.str();
}

Status write_report(const BenchReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) return make_error(ErrorCode::kStorageFailure, "cannot write report: " + path);
  out << report_json(report) << "\n";
  return Status::ok();
}

BenchReport bench_forklat(const std::vector<std::uint64_t>& parent_sizes, std::size_t trials) {
  BenchReport report;
  report.bench = "forklat";
  std::vector<double> medians;
  for (std::uint64_t size : parent_sizes) {
    LazyVariant eng;
    std::mt19937_64 rng(size + 7);
    pump_records(eng, 1, size, rng, 4096);
    std::vector<double> samples;
    samples.reserve(trials);
    for (std::size_t t = 0; t < trials; ++t) {
      auto start = Clock::now();
      ApplyResult res = eng.apply(Command{CreateCFork{1, false}});
      auto stop = Clock::now();
      if (!res.ok()) break;
      samples.push_back(elapsed_ns(start, stop));
    }
    double med = median(samples);
    medians.push_back(med);
    report.metrics.push_back(MetricRecord{
        "fork_median_ns/parent_" + std::to_string(size), med, "ns", false});
  }
  if (medians.size() >= 2) {
    double lo = *std::min_element(medians.begin(), medians.end());
    double hi = *std::max_element(medians.begin(), medians.end());
    report.metrics.push_back(MetricRecord{"fork_median_ratio", lo > 0 ? hi / lo : 0, "x", false});
  }
  return report;
}

BenchReport bench_ablate(Variant variant, std::size_t forks, std::size_t appends,
                         std::uint64_t seed) {
  BenchReport report;
  report.bench = std::string("ablate/") + to_string(variant);
  report.seed = seed;
  auto eng = make_variant(variant);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < forks; ++i) {
    eng->apply(Command{CreateCFork{1, false}});
  }
  std::vector<double> touched;
  std::vector<double> latencies;
  touched.reserve(appends);
  for (std::size_t i = 0; i < appends; ++i) {
    SequenceBatch batch;
    batch.object = ObjectId{rng() | 1, rng() | 1};
    batch.records.push_back(SequenceRecord{1, 0, 64});
    auto start = Clock::now();
    ApplyResult res = eng->apply(Command{batch});
    auto stop = Clock::now();
    if (!res.ok()) break;
    touched.push_back(static_cast<double>(eng->last_append_touched()));
    latencies.push_back(elapsed_ns(start, stop));
  }
  double worst = touched.empty() ? 0 : *std::max_element(touched.begin(), touched.end());
  report.metrics.push_back(MetricRecord{"forks", static_cast<double>(forks), "count", true});
  report.metrics.push_back(MetricRecord{"appends", static_cast<double>(touched.size()), "count", true});
  report.metrics.push_back(MetricRecord{"touched_median", median(touched), "nodes", true});
  report.metrics.push_back(MetricRecord{"touched_max", worst, "nodes", true});
  report.metrics.push_back(
      MetricRecord{"append_median_ns", median(latencies), "ns", false});
  report.metrics.push_back(MetricRecord{
      "log_bound_c8", 8.0 * std::log2(static_cast<double>(forks) + 1.0) + 8.0, "nodes", true});
  report.metrics.push_back(
      MetricRecord{"index_entries", static_cast<double>(eng->index_entries()), "entries", true});
  return report;
}

BenchReport bench_memory(std::size_t forks, std::uint64_t records_to_root,
                         std::uint64_t records_to_forks, std::uint64_t seed) {
  BenchReport report;
  report.bench = "memory";
  report.seed = seed;
  LazyVariant lazy;
  EagerVariant naive(true);
  std::mt19937_64 rng(seed);

  std::vector<LogId> fork_ids;
  for (std::size_t i = 0; i < forks; ++i) {
    Command cmd{CreateCFork{1, false}};
    ApplyResult a = lazy.apply(cmd);
    naive.apply(cmd);
    fork_ids.push_back(*a.created);
  }
  std::uint64_t predicted = 0;
  auto pump_both = [&](LogId target, std::uint64_t count) {
    std::uint64_t done = 0;
    while (done < count) {
      SequenceBatch batch;
      batch.object = ObjectId{rng() | 1, rng() | 1};
      std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(64, count - done));
      for (std::size_t i = 0; i < n; ++i) {
        batch.records.push_back(SequenceRecord{target, i * 64, 64});
      }
      Command cmd{batch};
      lazy.apply(cmd);
      naive.apply(cmd);
      std::size_t descendants = target == 1 ? forks : 0;
      predicted += n * (1 + descendants);
      done += n;
    }
  };
  pump_both(1, records_to_root);
  for (std::uint64_t i = 0; i < records_to_forks; ++i) {
    pump_both(fork_ids[static_cast<std::size_t>(i % fork_ids.size())], 1);
  }

  double lazy_entries = static_cast<double>(lazy.index_entries());
  double naive_entries = static_cast<double>(naive.index_entries());
  report.metrics.push_back(MetricRecord{"records", static_cast<double>(records_to_root + records_to_forks), "count", true});
  report.metrics.push_back(MetricRecord{"forks", static_cast<double>(forks), "count", true});
  report.metrics.push_back(MetricRecord{"lazy_entries", lazy_entries, "entries", true});
  report.metrics.push_back(MetricRecord{"naive_entries", naive_entries, "entries", true});
  report.metrics.push_back(MetricRecord{"naive_predicted", static_cast<double>(predicted), "entries", true});
  report.metrics.push_back(MetricRecord{
      "duplication_factor", lazy_entries > 0 ? naive_entries / lazy_entries : 0, "x", true});
  return report;
}

BenchReport bench_depth(std::size_t depth, std::uint64_t records_per_level, std::size_t queries,
                        std::uint64_t seed, std::vector<DepthPoint>* points) {
  BenchReport report;
  report.bench = "depth";
  report.seed = seed;
  LazyVariant eng;
  std::mt19937_64 rng(seed);

  std::vector<LogId> chain{1};
  pump_records(eng, 1, records_per_level, rng);
  for (std::size_t k = 0; k < depth; ++k) {
    ApplyResult res = eng.apply(Command{CreateCFork{chain.back(), false}});
    chain.push_back(*res.created);
    pump_records(eng, chain.back(), records_per_level, rng);
  }

  const ForestState& st = eng.state();
  for (std::size_t k = 1; k <= depth; ++k) {
    LogId log = chain[k];
    std::vector<double> samples;
    samples.reserve(queries);
    std::uint32_t max_steps = 0;
    for (std::size_t q = 0; q < queries; ++q) {
      // Positions in the base log's own records force recursion to the root.
      Position p = rng() % records_per_level;
      ResolveStats stats;
      auto start = Clock::now();
      auto r = st.read_meta(log, p, p + 1, &stats);
      auto stop = Clock::now();
      if (!r.ok()) break;
      samples.push_back(elapsed_ns(start, stop));
      max_steps = std::max(max_steps, stats.steps);
    }
    double med = median(samples);
    if (points) points->push_back(DepthPoint{k, med, max_steps});
    report.metrics.push_back(
        MetricRecord{"resolve_median_ns/depth_" + std::to_string(k), med, "ns", false});
    report.metrics.push_back(MetricRecord{"resolve_max_steps/depth_" + std::to_string(k),
                                          static_cast<double>(max_steps), "steps", true});
  }
  if (points && points->size() >= 2) {
    double l1 = points->front().median_ns;
    double l8 = points->back().median_ns;
    report.metrics.push_back(
        MetricRecord{"depth_latency_ratio", l1 > 0 ? l8 / l1 : 0, "x", false});
  }
  return report;
}

BenchReport bench_differential(const WorkloadOptions& opts) {
  BenchReport report;
  report.bench = "differential";
  report.seed = opts.seed;
  DifferentialReport diff = run_differential(opts);
  report.metrics.push_back(MetricRecord{"ok", diff.ok ? 1.0 : 0.0, "bool", true});
  report.metrics.push_back(MetricRecord{"commands", static_cast<double>(diff.commands), "count", true});
  report.metrics.push_back(MetricRecord{"live_logs", static_cast<double>(diff.live_logs), "count", true});
  report.metrics.push_back(MetricRecord{"forks_created", static_cast<double>(diff.forks_created), "count", true});
  report.metrics.push_back(MetricRecord{"max_nesting", static_cast<double>(diff.max_nesting), "count", true});
  report.metrics.push_back(MetricRecord{"lazy_entries", static_cast<double>(diff.lazy_entries), "entries", true});
  report.metrics.push_back(MetricRecord{"eager_entries", static_cast<double>(diff.eager_entries), "entries", true});
  report.metrics.push_back(MetricRecord{"naive_entries", static_cast<double>(diff.naive_entries), "entries", true});
  if (!diff.ok) {
    report.metrics.push_back(MetricRecord{"divergence", 1.0, diff.divergence, true});
  }
  return report;
}

Result<LinearizeOutcome> run_linearize_scenario(std::size_t sessions, std::size_t forks,
                                                std::uint64_t appends, std::uint64_t seed,
                                                const std::string& workdir) {
  std::error_code ec;
  std::filesystem::create_directories(workdir, ec);
  ServiceConfig cfg;
  cfg.store = "mem";
  cfg.cmdlog_path = workdir + "/cmd-" + std::to_string(seed) + ".log";
  std::filesystem::remove(cfg.cmdlog_path, ec);
  cfg.root_brokers = 1;
  cfg.fork_brokers = 1;
  cfg.linger_ms = 1;
  cfg.flush_bytes = 64 << 10;
  cfg.broker_seed = seed + 1;
  auto svc = Service::start(cfg);
  if (!svc.ok()) return svc.error();
  Service& service = *svc.value();

  auto admin = BoltClient::connect("127.0.0.1", service.port());
  if (!admin.ok()) return admin.error();
  const LogId root = 1;
  std::vector<LogId> targets{root};
  for (std::size_t i = 0; i < forks; ++i) {
    auto fork = admin.value()->cfork(root, false);
    if (!fork.ok()) return fork.error();
    targets.push_back(fork.value());
  }

  History history;
  std::mutex history_mu;
  std::vector<std::thread> workers;
  std::uint64_t per_session = appends / sessions;
  for (std::size_t s = 0; s < sessions; ++s) {
    workers.emplace_back([&, s] {
      auto client = BoltClient::connect("127.0.0.1", service.port());
      if (!client.ok()) return;
      LogId target = targets[s % targets.size()];
      std::vector<HistoryRecord> local;
      local.reserve(per_session);
      for (std::uint64_t k = 0; k < per_session; ++k) {
        std::string payload = "s" + std::to_string(s) + "-" + std::to_string(k) + "-" +
                              std::to_string(seed);
        HistoryRecord rec;
        rec.session = s;
        rec.log = target;
        rec.digest = fnv64({reinterpret_cast<const std::uint8_t*>(payload.data()),
                            payload.size()});
        rec.invoke = Clock::now();
        auto ack = client.value()->append(
            target, {reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()});
        rec.response = Clock::now();
        rec.acknowledged = ack.ok();
        local.push_back(rec);
      }
      std::lock_guard<std::mutex> lock(history_mu);
      history.records.insert(history.records.end(), local.begin(), local.end());
    });
  }
  for (auto& w : workers) w.join();

  LinearizeOutcome outcome;
  for (const HistoryRecord& rec : history.records) {
    if (rec.acknowledged) ++outcome.acknowledged;
  }

  std::map<LogId, std::vector<std::uint64_t>> final_sequences;
  std::map<LogId, std::vector<LogId>> ancestors;
  for (LogId log : targets) {
    auto tail = admin.value()->get_tail(log);
    if (!tail.ok() || !tail.value().has_value()) continue;
    auto records = admin.value()->read(log, 0, *tail.value());
    if (!records.ok()) return records.error();
    std::vector<std::uint64_t> digests;
    digests.reserve(records.value().size());
    for (const auto& payload : records.value()) digests.push_back(fnv64(payload));
    final_sequences.emplace(log, std::move(digests));
    ancestors.emplace(log, log == root ? std::vector<LogId>{root}
                                       : std::vector<LogId>{log, root});
  }
  outcome.verdict = check_interleaving(history, final_sequences, ancestors);

  // Structural isolation: the root's broker must have served no fork frames.
  std::size_t root_broker = service.broker_of(root).value_or(0);
  outcome.isolation_ok = true;
  for (const RequestLogEntry& entry : service.broker(root_broker).request_log()) {
    if (entry.log != root) {
      outcome.isolation_ok = false;
      outcome.isolation_detail = "broker " + std::to_string(root_broker) +
                                 " handled opcode " + std::to_string(entry.opcode) +
                                 " for fork log " + std::to_string(entry.log);
      break;
    }
  }
  service.stop();
  return outcome;
}

BenchReport bench_linearize(std::size_t sessions, std::size_t forks, std::uint64_t appends,
                            std::uint64_t seed, const std::string& workdir) {
  BenchReport report;
  report.bench = "linearize";
  report.seed = seed;
  auto outcome = run_linearize_scenario(sessions, forks, appends, seed, workdir);
  if (!outcome.ok()) {
    report.metrics.push_back(MetricRecord{"error", 1.0, outcome.error().detail, true});
    return report;
  }
  report.metrics.push_back(MetricRecord{"sessions", static_cast<double>(sessions), "count", true});
  report.metrics.push_back(MetricRecord{"forks", static_cast<double>(forks), "count", true});
  report.metrics.push_back(MetricRecord{
      "acknowledged", static_cast<double>(outcome.value().acknowledged), "count", true});
  report.metrics.push_back(MetricRecord{
      "pairs_checked", static_cast<double>(outcome.value().verdict.pairs_checked), "count", false});
  report.metrics.push_back(MetricRecord{
      "violations", static_cast<double>(outcome.value().verdict.violations.size()), "count", true});
  report.metrics.push_back(
      MetricRecord{"isolation_ok", outcome.value().isolation_ok ? 1.0 : 0.0, "bool", true});
  return report;
}

}  // namespace bolt::harness
