#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "sbm/graph.hpp"
#include "sbm/partition.hpp"

namespace sbm {

using json = nlohmann::json;

json partition_to_json(const Partition& b);
Partition partition_from_json(const json& j);

// Array of arrays, level 0 first.
json hierarchy_to_json(const HierarchicalPartition& h);
HierarchicalPartition hierarchy_from_json(const json& j);

// FNV-1a, hex string; used for input digests in run manifests.
std::string fnv1a_digest(const std::string& data);
std::string file_digest(const std::string& path);

// Every CLI run emits a manifest describing command, configuration, seed
// and input digests; re-running with the same manifest and build reproduces
// the outputs byte for byte.
json make_manifest(const std::string& command, const json& config,
                   uint64_t seed, const json& input_digests,
                   double wall_seconds);

extern const char* const kToolVersion;

} // namespace sbm
