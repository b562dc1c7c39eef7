// Command line front end. Subcommands land here as the modules behind them
// come together; run with --help for the current set.

#include <cstdio>
#include <cstring>
#include <string>

#include "gamesense/factory.hpp"

namespace {

int cmd_dump_layout(int argc, char** argv) {
    std::string game = "flappy";
    std::string out;
    for (int i = 0; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--game") && i + 1 < argc) game = argv[++i];
        if (!std::strcmp(argv[i], "--out") && i + 1 < argc) out = argv[++i];
    }
    gamesense::EnvConfig cfg;
    cfg.game = game == "arena" ? gamesense::GameKind::Arena : gamesense::GameKind::Flappy;
    auto env = gamesense::make_environment(cfg);
    std::string text = env->layout().serialize();
    if (out.empty()) {
        std::fputs(text.c_str(), stdout);
    } else {
        gamesense::kv_save(env->layout(), out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc >= 2 && !std::strcmp(argv[1], "dump-layout")) return cmd_dump_layout(argc - 2, argv + 2);
    std::printf("usage: gamesense dump-layout [--game flappy|arena] [--out FILE]\n");
    return argc >= 2 ? 2 : 0;
}
