// Closed loop with the scripted planner, printing each iteration.
#include <cstdio>

#include <maneuverforge/maneuverforge.hpp>

namespace mf = maneuverforge;

int main(int argc, char** argv) {
    mf::LoopConfig config;
    config.vehicle = argc > 1 ? argv[1] : "sedan";
    config.world = argc > 2 ? argv[2] : "open";

    mf::ScriptedBackend planner;
    const auto result = mf::run_loop(config, "Perform a J-turn and end up facing the other way.", planner);
    for (const auto& rec : result.records) {
        if (!rec.metrics) {
            std::printf("k=%2d  not executed: %s\n", rec.k, rec.error.c_str());
            continue;
        }
        std::printf("k=%2d  signed error %+7.2f deg  jerk %5.2f  cost %7.2f%s\n", rec.k,
                    rec.metrics->signed_heading_error, rec.metrics->mean_jerk, *rec.cost,
                    rec.metrics->collision ? "  COLLISION" : "");
    }
    std::printf("%s, best k=%d\n", result.converged ? "converged" : "best effort", result.best_k);
    std::printf("%s\n", nlohmann::json(result.best_plan).dump(2).c_str());
}
