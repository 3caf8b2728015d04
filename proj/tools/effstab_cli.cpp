#include <iostream>

#include "effstab/cli.hpp"

int main(int argc, char **argv)
{
    effstab::RunConfig cfg;
    if (auto code = effstab::parse_command_line(argc, argv, cfg, std::cout, std::cerr)) {
        return *code;
    }
    return effstab::run_pipeline(cfg, std::cerr);
}
