#pragma once

// JSON forms of the domain types. An instance on disk is
//   {"config":{...},"scheme":"FS"|"CA","seed":u64,
//    "objects":[{"pick":[x,y],"place":[x,y]},...]}
// and batches are JSON-lines files with one instance per line.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dualarm/model.hpp"

namespace dualarm {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const WorkspaceConfig& config);
WorkspaceConfig config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Instance& instance);
Instance instance_from_json(const nlohmann::json& j);

nlohmann::json slot_to_json(const Slot& slot);
nlohmann::json to_json(const EpisodeLog& log);

void write_instances(const std::filesystem::path& path, const std::vector<Instance>& instances);
std::vector<Instance> read_instances(const std::filesystem::path& path);

}  // namespace dualarm
