#pragma once

// Evaluation harness: policy construction from a short spec string,
// per-instance and aggregate reports, and decision-time scaling.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dualarm/attention.hpp"
#include "dualarm/policy.hpp"

namespace dualarm {

inline constexpr int kReportSchemaVersion = 1;

class PolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses random[:seed], greedy, matching_dp, oracle and attention:<weights>.
/// Weights are loaded once; every create() returns an independent policy
/// sharing the read-only network.
class PolicyFactory {
 public:
  explicit PolicyFactory(const std::string& spec);

  const std::string& spec() const { return spec_; }
  const std::string& kind() const { return kind_; }
  std::unique_ptr<Policy> create() const;
  /// Largest instance the policy accepts.
  std::size_t max_objects() const;

 private:
  std::string spec_;
  std::string kind_;
  std::uint64_t seed_ = 0;
  std::shared_ptr<const AttentionNetwork> network_;
};

struct InstanceRow {
  std::string policy;
  Scheme scheme = Scheme::CA;
  std::size_t n = 0;
  std::size_t instance = 0;
  std::uint64_t seed = 0;
  long makespan = 0;
  long delay_total = 0;
  double delay_proportion = 0.0;
  std::size_t rounds = 0;
  double decision_seconds = 0.0;
};

struct AggregateRow {
  std::string policy;
  Scheme scheme = Scheme::CA;
  std::size_t n = 0;
  std::size_t count = 0;
  double mean_makespan = 0.0;
  double stderr_makespan = 0.0;
  double mean_delay_proportion = 0.0;
  double mean_decision_seconds = 0.0;
};

struct BenchReport {
  std::vector<InstanceRow> rows;
  std::vector<AggregateRow> aggregates;
};

/// Groups by (policy, scheme, n) in first-seen order.
std::vector<AggregateRow> aggregate(const std::vector<InstanceRow>& rows);

/// Rows come back in input order whatever the worker count.
BenchReport evaluate(const PolicyFactory& factory, const std::vector<Instance>& instances, unsigned workers = 1);

void write_rows_csv(std::ostream& out, const std::vector<InstanceRow>& rows);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
std::vector<InstanceRow> read_rows_csv(std::istream& in);
nlohmann::json to_json(const BenchReport& report);

/// Least-squares slope of log(time) against log(n).
double loglog_slope(const std::vector<double>& n, const std::vector<double>& seconds);

struct TimingRow {
  std::string policy;
  std::size_t n = 0;
  std::size_t count = 0;
  double mean_seconds = 0.0;
};

struct TimingTable {
  std::vector<TimingRow> rows;
  std::map<std::string, double> slopes;
};

inline constexpr std::size_t kWarmupInstances = 3;

/// Single-threaded. For each n, count + kWarmupInstances instances are
/// sampled from `seed`; the first kWarmupInstances are run but not timed.
TimingTable bench_time(const std::vector<std::string>& policies, const std::vector<std::size_t>& ns, Scheme scheme,
                       std::size_t count, std::uint64_t seed, const WorkspaceConfig& config = {});

void write_timing_csv(std::ostream& out, const TimingTable& table);
nlohmann::json to_json(const TimingTable& table);

struct ProtocolGrid {
  std::vector<std::size_t> ns{4, 6, 10, 14, 20, 30};
  std::vector<Scheme> schemes{Scheme::FS, Scheme::CA};
  std::vector<std::string> policies{"random", "greedy", "matching_dp"};
  std::size_t count = 1000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  WorkspaceConfig config;
};

/// Evaluates every policy on every (n, scheme) cell. Policies that refuse a
/// cell size (the oracle beyond its limit) are skipped for that cell.
BenchReport reproduce_protocol(const ProtocolGrid& grid,
                               const std::function<void(const AggregateRow&)>& progress = {});

}  // namespace dualarm
