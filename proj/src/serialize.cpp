#include "sbm/serialize.hpp"

#include <fstream>
#include <sstream>

namespace sbm {

const char* const kToolVersion = "0.1.0";

json partition_to_json(const Partition& b) {
    return json(b.labels());
}

Partition partition_from_json(const json& j) {
    return Partition(j.get<std::vector<int>>());
}

json hierarchy_to_json(const HierarchicalPartition& h) {
    json out = json::array();
    for (int l = 0; l < h.num_levels(); ++l)
        out.push_back(h.level(l).labels());
    return out;
}

HierarchicalPartition hierarchy_from_json(const json& j) {
    std::vector<Partition> levels;
    for (const auto& lv : j)
        levels.emplace_back(lv.get<std::vector<int>>());
    return HierarchicalPartition(std::move(levels));
}

std::string fnv1a_digest(const std::string& data) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        return "missing";
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a_digest(ss.str());
}

json make_manifest(const std::string& command, const json& config,
                   uint64_t seed, const json& input_digests,
                   double wall_seconds) {
    return json{{"command", command},
                {"config", config},
                {"seed", seed},
                {"inputs", input_digests},
                {"tool_version", kToolVersion},
                {"wall_seconds", wall_seconds}};
}

} // namespace sbm
