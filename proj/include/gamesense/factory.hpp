#pragma once

#include "gamesense/arena.hpp"
#include "gamesense/env.hpp"
#include "gamesense/flappy.hpp"

namespace gamesense {

inline std::unique_ptr<Environment> make_environment(const EnvConfig& cfg) {
    if (cfg.game == GameKind::Arena) return std::make_unique<ArenaEnv>(cfg);
    return std::make_unique<FlappyEnv>(cfg);
}

}  // namespace gamesense
