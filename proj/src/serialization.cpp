#include "dualarm/serialization.hpp"

#include <fstream>

namespace dualarm {

using nlohmann::json;

namespace {

Point point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw FormatError("expected a point [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json point_to_json(Point p) { return json::array({p.x, p.y}); }

}  // namespace

json to_json(const WorkspaceConfig& c) {
  return {{"width", c.width},           {"height", c.height},         {"speed", c.speed},
          {"pick_dwell", c.pick_dwell}, {"place_dwell", c.place_dwell}, {"d_safe", c.d_safe},
          {"arm1_x_max", c.arm1_x_max}, {"arm2_x_min", c.arm2_x_min}};
}

WorkspaceConfig config_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("config must be an object");
  WorkspaceConfig c;
  try {
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    c.speed = j.value("speed", c.speed);
    c.pick_dwell = j.value("pick_dwell", c.pick_dwell);
    c.place_dwell = j.value("place_dwell", c.place_dwell);
    c.d_safe = j.value("d_safe", c.d_safe);
    c.arm1_x_max = j.value("arm1_x_max", c.arm1_x_max);
    c.arm2_x_min = j.value("arm2_x_min", c.arm2_x_min);
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad config field: ") + e.what());
  }
  return c;
}

json to_json(const Instance& instance) {
  json objects = json::array();
  for (const auto& o : instance.objects)
    objects.push_back({{"pick", point_to_json(o.pick)}, {"place", point_to_json(o.place)}});
  return {{"config", to_json(instance.config)},
          {"scheme", to_string(instance.scheme)},
          {"seed", instance.seed},
          {"objects", std::move(objects)}};
}

Instance instance_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("instance must be a JSON object");
  Instance inst;
  inst.config = j.contains("config") ? config_from_json(j.at("config")) : WorkspaceConfig{};
  try {
    inst.scheme = scheme_from_string(j.value("scheme", std::string("FS")));
  } catch (const DomainError& e) {
    throw FormatError(e.what());
  } catch (const json::exception& e) {
    throw FormatError(e.what());
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw FormatError("seed must be an unsigned integer");
    inst.seed = j.at("seed").get<std::uint64_t>();
  }
  if (!j.contains("objects") || !j.at("objects").is_array()) throw FormatError("missing objects array");
  for (const auto& o : j.at("objects")) {
    if (!o.is_object() || !o.contains("pick") || !o.contains("place"))
      throw FormatError("object needs pick and place");
    inst.objects.push_back({point_from_json(o.at("pick")), point_from_json(o.at("place"))});
  }
  try {
    inst.validate();
  } catch (const DomainError& e) {
    throw FormatError(e.what());
  }
  return inst;
}

json slot_to_json(const Slot& slot) { return slot ? json(*slot) : json(-1); }

json to_json(const EpisodeLog& log) {
  json rounds = json::array();
  for (const auto& r : log.rounds)
    rounds.push_back({{"a1", slot_to_json(r.pair.a1)}, {"a2", slot_to_json(r.pair.a2)},
                      {"m_tau", r.m_tau}, {"delay", r.delay}});
  return {{"rounds", std::move(rounds)},
          {"makespan", log.makespan},
          {"delay_total", log.delay_total},
          {"delay_proportion", log.delay_proportion()}};
}

void write_instances(const std::filesystem::path& path, const std::vector<Instance>& instances) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& inst : instances) out << to_json(inst).dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<Instance> read_instances(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Instance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(instance_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace dualarm
