#include "dualarm/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "dualarm/baselines.hpp"
#include "dualarm/sampler.hpp"

namespace dualarm {

using nlohmann::json;

PolicyFactory::PolicyFactory(const std::string& spec) : spec_(spec) {
  const auto colon = spec.find(':');
  kind_ = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind_ == "random") {
    if (!arg.empty()) {
      try {
        std::size_t used = 0;
        seed_ = std::stoull(arg, &used);
        if (used != arg.size()) throw std::invalid_argument(arg);
      } catch (const std::exception&) {
        throw PolicyError("bad random seed '" + arg + "'");
      }
    }
  } else if (kind_ == "greedy" || kind_ == "matching_dp" || kind_ == "oracle") {
    if (!arg.empty()) throw PolicyError("policy '" + kind_ + "' takes no argument");
  } else if (kind_ == "attention") {
    if (arg.empty()) throw PolicyError("attention policy needs a weights path: attention:<file>");
    try {
      const NetworkConfig config = read_sidecar(arg);
      network_ = std::make_shared<const AttentionNetwork>(config, load_weights(arg, config));
    } catch (const std::exception& e) {
      throw PolicyError(std::string("cannot load attention weights: ") + e.what());
    }
  } else {
    throw PolicyError("unknown policy '" + spec + "'");
  }
}

std::unique_ptr<Policy> PolicyFactory::create() const {
  if (kind_ == "random") return std::make_unique<RandomSplitPolicy>(seed_);
  if (kind_ == "greedy") return std::make_unique<GreedyPolicy>();
  if (kind_ == "matching_dp") return std::make_unique<MatchingDpPolicy>();
  if (kind_ == "oracle") return std::make_unique<OraclePolicy>();
  return std::make_unique<AttentionPolicy>(network_);
}

std::size_t PolicyFactory::max_objects() const {
  return kind_ == "oracle" ? kOracleMaxObjects : std::numeric_limits<std::size_t>::max();
}

std::vector<AggregateRow> aggregate(const std::vector<InstanceRow>& rows) {
  std::vector<AggregateRow> out;
  std::vector<std::vector<const InstanceRow*>> groups;
  for (const auto& row : rows) {
    std::size_t g = 0;
    while (g < out.size() && !(out[g].policy == row.policy && out[g].scheme == row.scheme && out[g].n == row.n)) ++g;
    if (g == out.size()) {
      out.push_back({row.policy, row.scheme, row.n});
      groups.emplace_back();
    }
    groups[g].push_back(&row);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    const auto& members = groups[g];
    const double k = static_cast<double>(members.size());
    double makespan = 0.0, delay = 0.0, seconds = 0.0;
    for (const auto* r : members) {
      makespan += static_cast<double>(r->makespan);
      delay += r->delay_proportion;
      seconds += r->decision_seconds;
    }
    AggregateRow& a = out[g];
    a.count = members.size();
    a.mean_makespan = makespan / k;
    a.mean_delay_proportion = delay / k;
    a.mean_decision_seconds = seconds / k;
    if (members.size() > 1) {
      double ss = 0.0;
      for (const auto* r : members) ss += std::pow(static_cast<double>(r->makespan) - a.mean_makespan, 2);
      a.stderr_makespan = std::sqrt(ss / (k - 1.0)) / std::sqrt(k);
    }
  }
  return out;
}

BenchReport evaluate(const PolicyFactory& factory, const std::vector<Instance>& instances, unsigned workers) {
  for (const auto& inst : instances)
    if (inst.size() > factory.max_objects())
      throw PolicyError("policy '" + factory.spec() + "' refuses n=" + std::to_string(inst.size()));

  BenchReport report;
  report.rows.resize(instances.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&] {
    auto policy = factory.create();
    for (std::size_t i = next++; i < instances.size(); i = next++) {
      try {
        const EpisodeResult result = run_episode(*policy, instances[i]);
        InstanceRow& row = report.rows[i];
        row.policy = factory.spec();
        row.scheme = instances[i].scheme;
        row.n = instances[i].size();
        row.instance = i;
        row.seed = instances[i].seed;
        row.makespan = result.log.makespan;
        row.delay_total = result.log.delay_total;
        row.delay_proportion = result.log.delay_proportion();
        row.rounds = result.log.rounds.size();
        row.decision_seconds = result.decision_seconds;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = instances.size();
      }
    }
  };

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, instances.size()))));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  report.aggregates = aggregate(report.rows);
  return report;
}

namespace {

const char* kRowHeader =
    "schema_version,policy,scheme,n,instance,seed,makespan,delay_total,delay_proportion,rounds,decision_time_s";
const char* kAggregateHeader =
    "schema_version,policy,scheme,n,count,mean_makespan,stderr_makespan,mean_delay_proportion,mean_decision_time_s";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

void write_rows_csv(std::ostream& out, const std::vector<InstanceRow>& rows) {
  out << kRowHeader << '\n' << std::setprecision(17);
  for (const auto& r : rows)
    out << kReportSchemaVersion << ',' << r.policy << ',' << to_string(r.scheme) << ',' << r.n << ',' << r.instance
        << ',' << r.seed << ',' << r.makespan << ',' << r.delay_total << ',' << r.delay_proportion << ',' << r.rounds
        << ',' << r.decision_seconds << '\n';
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << kAggregateHeader << '\n' << std::setprecision(17);
  for (const auto& a : rows)
    out << kReportSchemaVersion << ',' << a.policy << ',' << to_string(a.scheme) << ',' << a.n << ',' << a.count << ','
        << a.mean_makespan << ',' << a.stderr_makespan << ',' << a.mean_delay_proportion << ','
        << a.mean_decision_seconds << '\n';
}

std::vector<InstanceRow> read_rows_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRowHeader) throw std::runtime_error("unexpected report header");
  std::vector<InstanceRow> rows;
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 11 || f[0] != std::to_string(kReportSchemaVersion))
      throw std::runtime_error("malformed report row at line " + std::to_string(lineno));
    InstanceRow r;
    r.policy = f[1];
    r.scheme = scheme_from_string(f[2]);
    r.n = std::stoull(f[3]);
    r.instance = std::stoull(f[4]);
    r.seed = std::stoull(f[5]);
    r.makespan = std::stol(f[6]);
    r.delay_total = std::stol(f[7]);
    r.delay_proportion = std::stod(f[8]);
    r.rounds = std::stoull(f[9]);
    r.decision_seconds = std::stod(f[10]);
    rows.push_back(std::move(r));
  }
  return rows;
}

json to_json(const BenchReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"policy", r.policy},
                    {"scheme", to_string(r.scheme)},
                    {"n", r.n},
                    {"instance", r.instance},
                    {"seed", r.seed},
                    {"makespan", r.makespan},
                    {"delay_total", r.delay_total},
                    {"delay_proportion", r.delay_proportion},
                    {"rounds", r.rounds},
                    {"decision_time_s", r.decision_seconds}});
  json aggregates = json::array();
  for (const auto& a : report.aggregates)
    aggregates.push_back({{"policy", a.policy},
                          {"scheme", to_string(a.scheme)},
                          {"n", a.n},
                          {"count", a.count},
                          {"mean_makespan", a.mean_makespan},
                          {"stderr_makespan", a.stderr_makespan},
                          {"mean_delay_proportion", a.mean_delay_proportion},
                          {"mean_decision_time_s", a.mean_decision_seconds}});
  return {{"schema_version", kReportSchemaVersion}, {"rows", rows}, {"aggregates", aggregates}};
}

double loglog_slope(const std::vector<double>& n, const std::vector<double>& seconds) {
  if (n.size() != seconds.size() || n.size() < 2) throw DomainError("slope fit needs at least two points");
  double mx = 0.0, my = 0.0;
  const double k = static_cast<double>(n.size());
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] <= 0.0 || seconds[i] <= 0.0) throw DomainError("slope fit needs positive values");
    lx.push_back(std::log(n[i]));
    ly.push_back(std::log(seconds[i]));
    mx += lx.back() / k;
    my += ly.back() / k;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) throw DomainError("slope fit needs distinct n");
  return sxy / sxx;
}

TimingTable bench_time(const std::vector<std::string>& policies, const std::vector<std::size_t>& ns, Scheme scheme,
                       std::size_t count, std::uint64_t seed, const WorkspaceConfig& config) {
  if (count == 0) throw DomainError("timing needs at least one instance per size");
  TimingTable table;
  for (const auto& spec : policies) {
    const PolicyFactory factory(spec);
    std::vector<double> xs, ys;
    for (const std::size_t n : ns) {
      if (n > factory.max_objects()) continue;
      const auto instances = sample_batch(n, scheme, count + kWarmupInstances, seed + n, config);
      auto policy = factory.create();
      double total = 0.0;
      for (std::size_t i = 0; i < instances.size(); ++i) {
        const EpisodeResult r = run_episode(*policy, instances[i]);
        if (i >= kWarmupInstances) total += r.decision_seconds;
      }
      TimingRow row{spec, n, count, total / static_cast<double>(count)};
      table.rows.push_back(row);
      xs.push_back(static_cast<double>(n));
      ys.push_back(std::max(row.mean_seconds, 1e-12));
    }
    if (xs.size() >= 2) table.slopes[spec] = loglog_slope(xs, ys);
  }
  return table;
}

void write_timing_csv(std::ostream& out, const TimingTable& table) {
  out << "schema_version,policy,n,count,mean_decision_time_s\n" << std::setprecision(17);
  for (const auto& r : table.rows)
    out << kReportSchemaVersion << ',' << r.policy << ',' << r.n << ',' << r.count << ',' << r.mean_seconds << '\n';
}

json to_json(const TimingTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows)
    rows.push_back({{"policy", r.policy}, {"n", r.n}, {"count", r.count}, {"mean_decision_time_s", r.mean_seconds}});
  return {{"schema_version", kReportSchemaVersion}, {"rows", rows}, {"loglog_slopes", table.slopes}};
}

BenchReport reproduce_protocol(const ProtocolGrid& grid, const std::function<void(const AggregateRow&)>& progress) {
  std::vector<PolicyFactory> factories;
  for (const auto& p : grid.policies) factories.emplace_back(p);
  BenchReport report;
  for (const Scheme scheme : grid.schemes) {
    for (const std::size_t n : grid.ns) {
      const auto instances = sample_batch(n, scheme, grid.count, grid.seed + 1000 * n + (scheme == Scheme::CA), grid.config);
      for (const auto& factory : factories) {
        if (n > factory.max_objects()) continue;
        BenchReport cell = evaluate(factory, instances, grid.workers);
        report.rows.insert(report.rows.end(), cell.rows.begin(), cell.rows.end());
        if (progress)
          for (const auto& a : cell.aggregates) progress(a);
      }
    }
  }
  report.aggregates = aggregate(report.rows);
  return report;
}

}  // namespace dualarm
