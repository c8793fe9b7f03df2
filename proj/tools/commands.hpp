#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "sbm/serialize.hpp"

namespace sbmcli {

using nlohmann::json;

void setup_generate(CLI::App& app);
void setup_infer(CLI::App& app);   // infer + sample
void setup_predict(CLI::App& app);
void setup_bp(CLI::App& app);

// --seed flag or SBM_SEED env var, default 1
struct SeedOption {
    uint64_t seed = 1;
    bool from_env = false;
    void attach(CLI::App& cmd) {
        if (const char* env = std::getenv("SBM_SEED")) {
            seed = std::strtoull(env, nullptr, 10);
            from_env = true;
        }
        cmd.add_option("--seed", seed, "random seed (also via SBM_SEED)");
    }
};

struct CommonOutput {
    std::string out_path;
    void attach(CLI::App& cmd) {
        cmd.add_option("-o,--output", out_path, "output JSON path (default stdout)");
    }
    void write(const json& j) const {
        if (out_path.empty()) {
            std::cout << j.dump(2) << "\n";
        } else {
            std::ofstream out(out_path);
            out << j.dump(2) << "\n";
        }
    }
};

class WallClock {
  public:
    double seconds() const {
        return std::chrono::duration<double>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

} // namespace sbmcli
