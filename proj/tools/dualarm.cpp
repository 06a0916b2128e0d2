// Command-line front end: instance generation, evaluation, timing, the
// environment server and a few debugging dumps.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "dualarm/attention.hpp"
#include "dualarm/baselines.hpp"
#include "dualarm/bench.hpp"
#include "dualarm/sampler.hpp"
#include "dualarm/serialization.hpp"
#include "dualarm/server.hpp"

namespace fs = std::filesystem;
using namespace dualarm;

namespace {

enum Exit { kOk = 0, kBadArgs = 2, kIo = 3, kPolicy = 4 };

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

Scheme parse_scheme(const std::string& s) {
  try {
    return scheme_from_string(s);
  } catch (const DomainError& e) {
    throw CLI::ValidationError("--scheme", e.what());
  }
}

WorkspaceConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  try {
    WorkspaceConfig c = config_from_json(nlohmann::json::parse(in));
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

std::vector<std::size_t> parse_sizes(const std::string& list) {
  std::vector<std::size_t> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoull(item));
    } catch (const std::exception&) {
      throw CLI::ValidationError("sizes", "bad size '" + item + "'");
    }
  }
  return out;
}

std::vector<std::string> split_list(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

const Instance& pick_instance(const std::vector<Instance>& instances, std::size_t index) {
  if (index >= instances.size())
    throw CLI::ValidationError("--index", "file holds " + std::to_string(instances.size()) + " instances");
  return instances[index];
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-arm rearrangement engine: instances, policies, benchmarks and the environment server"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "Workspace config JSON (defaults when omitted)");

  // gen
  auto* gen = app.add_subcommand("gen", "Sample a batch of instances as JSON lines");
  std::size_t gen_n = 10, gen_count = 1000;
  std::string gen_scheme = "CA", gen_out;
  std::uint64_t gen_seed = 1;
  gen->add_option("-n,--objects", gen_n, "Objects per instance")->capture_default_str();
  gen->add_option("--scheme", gen_scheme, "FS or CA")->capture_default_str();
  gen->add_option("--count", gen_count, "Number of instances")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Batch seed")->capture_default_str();
  gen->add_option("-o,--out", gen_out, "Output file")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a policy on an instance file");
  std::string eval_policy, eval_in, eval_out;
  unsigned eval_workers = 1;
  eval->add_option("-p,--policy", eval_policy, "random[:seed] | greedy | matching_dp | oracle | attention:<weights>")
      ->required();
  eval->add_option("-i,--instances", eval_in, "Instance file")->required();
  eval->add_option("-o,--out", eval_out, "Output prefix; writes <out>.csv, <out>_summary.csv and <out>.json")
      ->required();
  eval->add_option("-j,--workers", eval_workers, "Parallel workers (0 = hardware threads)")->capture_default_str();

  // bench-time
  auto* timing = app.add_subcommand("bench-time", "Mean decision time per instance and log-log slopes");
  std::string time_policies = "random,greedy", time_sizes = "4,6,10,14,20,30", time_scheme = "CA", time_out;
  std::size_t time_count = 20;
  std::uint64_t time_seed = 7;
  timing->add_option("--policies", time_policies, "Comma-separated policy specs")->capture_default_str();
  timing->add_option("--sizes", time_sizes, "Comma-separated object counts")->capture_default_str();
  timing->add_option("--scheme", time_scheme, "FS or CA")->capture_default_str();
  timing->add_option("--count", time_count, "Timed instances per size (3 warm-up runs extra)")->capture_default_str();
  timing->add_option("--seed", time_seed, "Sampling seed")->capture_default_str();
  timing->add_option("-o,--out", time_out, "Output prefix; writes <out>.csv and <out>.json")->required();

  // reproduce-protocol
  auto* repro = app.add_subcommand("reproduce-protocol", "Evaluate policies over the full size x scheme grid");
  ProtocolGrid grid;
  std::string repro_policies = "random,greedy,matching_dp", repro_sizes = "4,6,10,14,20,30", repro_out;
  repro->add_option("--policies", repro_policies, "Comma-separated policy specs")->capture_default_str();
  repro->add_option("--sizes", repro_sizes, "Comma-separated object counts")->capture_default_str();
  repro->add_option("--count", grid.count, "Instances per cell")->capture_default_str();
  repro->add_option("--seed", grid.seed, "Grid seed")->capture_default_str();
  repro->add_option("-j,--workers", grid.workers, "Parallel workers (0 = hardware threads)")->capture_default_str();
  repro->add_option("-o,--out", repro_out, "Output prefix")->required();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the JSON-lines environment server (stdio unless --port)");
  int serve_port = -1, serve_sessions = 0;
  serve->add_option("--port", serve_port, "TCP port on 127.0.0.1 (0 picks a free port)");
  serve->add_option("--sessions", serve_sessions, "Sessions to accept before exiting (0 = forever)")
      ->capture_default_str();

  // init-weights
  auto* init = app.add_subcommand("init-weights", "Write a randomly initialised weight file and its JSON sidecar");
  NetworkConfig net;
  std::uint64_t init_seed = 0;
  std::string init_out;
  init->add_option("--d", net.d, "Embedding width")->capture_default_str();
  init->add_option("--heads", net.heads, "Attention heads")->capture_default_str();
  init->add_option("--hidden", net.mlp_hidden, "MLP hidden width")->capture_default_str();
  init->add_option("--seed", init_seed, "Initialisation seed")->capture_default_str();
  init->add_option("-o,--out", init_out, "Weight file")->required();

  // trace
  auto* trace = app.add_subcommand("trace", "Dump per-round trajectories and the episode log for one instance");
  std::string trace_policy = "greedy", trace_in, trace_dir;
  std::size_t trace_index = 0;
  trace->add_option("-p,--policy", trace_policy, "Policy spec")->capture_default_str();
  trace->add_option("-i,--instances", trace_in, "Instance file")->required();
  trace->add_option("--index", trace_index, "Instance index in the file")->capture_default_str();
  trace->add_option("-o,--out-dir", trace_dir, "Output directory")->required();

  // attention-map
  auto* amap = app.add_subcommand("attention-map", "Export per-round arm-to-object probabilities");
  std::string amap_weights, amap_in, amap_out;
  std::size_t amap_index = 0;
  amap->add_option("-w,--weights", amap_weights, "Weight file")->required();
  amap->add_option("-i,--instances", amap_in, "Instance file")->required();
  amap->add_option("--index", amap_index, "Instance index in the file")->capture_default_str();
  amap->add_option("-o,--out", amap_out, "CSV output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadArgs;
  }

  try {
    const WorkspaceConfig config = load_config(config_path);

    if (*gen) {
      const auto instances = sample_batch(gen_n, parse_scheme(gen_scheme), gen_count, gen_seed, config);
      if (gen_count == 0) std::cerr << "warning: count is 0, writing an empty file\n";
      write_instances(gen_out, instances);
    } else if (*eval) {
      const PolicyFactory factory(eval_policy);
      const auto instances = read_instances(eval_in);
      if (eval_workers == 0) eval_workers = std::max(1u, std::thread::hardware_concurrency());
      const BenchReport report = evaluate(factory, instances, eval_workers);
      auto rows = open_out(eval_out + ".csv");
      write_rows_csv(rows, report.rows);
      auto summary = open_out(eval_out + "_summary.csv");
      write_aggregate_csv(summary, report.aggregates);
      open_out(eval_out + ".json") << to_json(report).dump(2) << '\n';
      for (const auto& a : report.aggregates)
        std::cout << a.policy << ' ' << to_string(a.scheme) << " n=" << a.n << " count=" << a.count
                  << " makespan=" << a.mean_makespan << " +- " << a.stderr_makespan
                  << " delay_prop=" << a.mean_delay_proportion << " time_s=" << a.mean_decision_seconds << '\n';
    } else if (*timing) {
      const TimingTable table = bench_time(split_list(time_policies), parse_sizes(time_sizes),
                                           parse_scheme(time_scheme), time_count, time_seed, config);
      auto csv = open_out(time_out + ".csv");
      write_timing_csv(csv, table);
      open_out(time_out + ".json") << to_json(table).dump(2) << '\n';
      for (const auto& [policy, slope] : table.slopes) std::cout << policy << " slope=" << slope << '\n';
    } else if (*repro) {
      grid.policies = split_list(repro_policies);
      grid.ns = parse_sizes(repro_sizes);
      grid.config = config;
      if (grid.workers == 0) grid.workers = std::max(1u, std::thread::hardware_concurrency());
      const BenchReport report = reproduce_protocol(grid, [](const AggregateRow& a) {
        std::cout << a.policy << ' ' << to_string(a.scheme) << " n=" << a.n << " makespan=" << a.mean_makespan
                  << " delay_prop=" << a.mean_delay_proportion << std::endl;
      });
      auto rows = open_out(repro_out + ".csv");
      write_rows_csv(rows, report.rows);
      auto summary = open_out(repro_out + "_summary.csv");
      write_aggregate_csv(summary, report.aggregates);
      open_out(repro_out + ".json") << to_json(report).dump(2) << '\n';
    } else if (*serve) {
      if (serve_port < 0) {
        serve_stream(std::cin, std::cout, config);
      } else {
        TcpOptions options;
        options.port = static_cast<std::uint16_t>(serve_port);
        options.sessions = serve_sessions;
        options.config = config;
        options.on_listening = [](std::uint16_t port) { std::cerr << "listening on 127.0.0.1:" << port << std::endl; };
        serve_tcp(options);
      }
    } else if (*init) {
      net.validate();
      save_weights(init_out, WeightBundle::random(net, init_seed), net);
    } else if (*trace) {
      const auto instances = read_instances(trace_in);
      const Instance& instance = pick_instance(instances, trace_index);
      auto policy = PolicyFactory(trace_policy).create();
      RearrangeEnv env;
      env.reset(instance);
      policy->begin_episode(env);
      fs::create_directories(trace_dir);
      while (!env.done()) {
        const AssignmentPair pair = policy->decide(env);
        const RoundPlan plan = env.preview(pair);
        char name[32];
        std::snprintf(name, sizeof name, "round_%03ld.csv", env.round() + 1);
        auto out = open_out(fs::path(trace_dir) / name);
        write_trajectory_csv(out, plan);
        env.step(pair);
      }
      open_out(fs::path(trace_dir) / "episode.json") << to_json(env.log()).dump(2) << '\n';
    } else if (*amap) {
      const NetworkConfig nc = read_sidecar(amap_weights);
      auto network = std::make_shared<const AttentionNetwork>(nc, load_weights(amap_weights, nc));
      const auto instances = read_instances(amap_in);
      AttentionPolicy policy(network, true);
      run_episode(policy, pick_instance(instances, amap_index));
      std::vector<AttentionRow> rows;
      for (std::size_t r = 0; r < policy.history().size(); ++r) {
        auto part = export_attention_map(policy.history()[r], static_cast<long>(r + 1));
        rows.insert(rows.end(), part.begin(), part.end());
      }
      auto out = open_out(amap_out);
      write_attention_csv(out, rows);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadArgs;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const WeightsError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == WeightsErrorKind::Io ? kIo : kPolicy;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadArgs;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPolicy;
  }
  return kOk;
}
